//! Ground-truth generation: sparse 16-QAM symbol streams, offset
//! Nyquist-rate frames, additive noise and compression.

use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SenseError};
use crate::linalg::{concat_vectors, CVec};
use crate::model::{MeasurementMatrix, OfdmConfig, PartitionedIdft, SupportSet};

/// `{(a + jb) / sqrt(10) : a, b in {-3, -1, 1, 3}}`, average energy 1.
pub fn qam16_alphabet() -> [Complex64; 16] {
    const LEVELS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];
    let scale = 1.0 / 10f64.sqrt();
    let mut out = [Complex64::new(0.0, 0.0); 16];
    for (i, re) in LEVELS.iter().enumerate() {
        for (j, im) in LEVELS.iter().enumerate() {
            out[4 * i + j] = Complex64::new(re * scale, im * scale);
        }
    }
    out
}

/// `N_b + 1` symbol vectors `s[0..=N_b]` sharing one support.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolStream {
    pub support: SupportSet,
    pub symbols: Vec<CVec>,
}

impl SymbolStream {
    /// Entries on the support, block by block: `s_S` of length `|S| (N_b + 1)`.
    pub fn restricted(&self) -> CVec {
        let parts: Vec<CVec> = self
            .symbols
            .iter()
            .map(|s| CVec::from_iterator(self.support.len(), self.support.iter().map(|j| s[j])))
            .collect();
        concat_vectors(&parts)
    }
}

/// Compressed frames `z[1..=N_b]` plus the ground truth that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedStream {
    pub frames: Vec<CVec>,
    pub stacked: CVec,
    pub noise_power: f64,
    pub true_d: usize,
    pub true_support: SupportSet,
}

impl CompressedStream {
    pub fn new(
        frames: Vec<CVec>,
        noise_power: f64,
        true_d: usize,
        true_support: SupportSet,
    ) -> Self {
        let stacked = concat_vectors(&frames);
        Self {
            frames,
            stacked,
            noise_power,
            true_d,
            true_support,
        }
    }

    pub fn n_blocks(&self) -> usize {
        self.frames.len()
    }
}

pub fn draw_support<R: Rng + ?Sized>(cfg: &OfdmConfig, rng: &mut R) -> Result<SupportSet> {
    if cfg.k > cfg.n_sub {
        return Err(SenseError::InvalidConfig(format!(
            "cannot draw {} of {} subcarriers",
            cfg.k, cfg.n_sub
        )));
    }
    SupportSet::new(index::sample(rng, cfg.n_sub, cfg.k).into_vec(), cfg.n_sub)
}

pub fn draw_symbols<R: Rng + ?Sized>(
    cfg: &OfdmConfig,
    support: &SupportSet,
    rng: &mut R,
) -> SymbolStream {
    let alphabet = qam16_alphabet();
    let symbols = (0..=cfg.n_blocks)
        .map(|_| {
            let mut s = CVec::zeros(cfg.n_sub);
            for j in support.iter() {
                s[j] = alphabet[rng.random_range(0..alphabet.len())];
            }
            s
        })
        .collect();
    SymbolStream {
        support: support.clone(),
        symbols,
    }
}

/// `x[n] = [F_{d,2} s[n-1]; F_{d,1} s[n]]` for `n = 1..=N_b`, noiseless.
pub fn synthesize_frames(stream: &SymbolStream, p: &PartitionedIdft) -> Vec<CVec> {
    let n = p.full.nrows();
    stream
        .symbols
        .windows(2)
        .map(|pair| {
            let mut x = CVec::zeros(n);
            x.rows_mut(0, p.d).copy_from(&(&p.bottom * &pair[0]));
            x.rows_mut(p.d, n - p.d).copy_from(&(&p.top * &pair[1]));
            x
        })
        .collect()
}

/// Per-Nyquist-sample noise variance for `snr_db`, with the signal power
/// taken as `K / N_o`. Infinite SNR means no noise.
pub fn noise_power(cfg: &OfdmConfig, snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    let p_sig = cfg.k as f64 / cfg.n_sub as f64;
    p_sig / 10f64.powf(snr_db / 10.0)
}

/// Adds circularly-symmetric complex Gaussian noise in place and returns
/// its per-sample variance.
pub fn add_noise<R: Rng + ?Sized>(
    frames: &mut [CVec],
    cfg: &OfdmConfig,
    snr_db: f64,
    rng: &mut R,
) -> f64 {
    let var = noise_power(cfg, snr_db);
    if var == 0.0 {
        return 0.0;
    }
    let sd = (var / 2.0).sqrt();
    for x in frames.iter_mut() {
        for v in x.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *v += Complex64::new(sd * re, sd * im);
        }
    }
    var
}

/// `z[n] = A x[n]`.
pub fn compress(a: &MeasurementMatrix, frames: &[CVec]) -> Result<Vec<CVec>> {
    let ac = a.as_complex();
    frames
        .iter()
        .map(|x| {
            if x.len() != ac.ncols() {
                return Err(SenseError::DimensionMismatch(format!(
                    "frame length {} but measurement matrix has {} columns",
                    x.len(),
                    ac.ncols()
                )));
            }
            Ok(ac * x)
        })
        .collect()
}

/// One generated capture together with its hidden symbols.
#[derive(Debug, Clone)]
pub struct Instance {
    pub symbols: SymbolStream,
    pub compressed: CompressedStream,
}

/// Draws support, symbols and noise (in that order) for a fixed `A` and
/// offset `d`, then synthesizes and compresses.
pub fn generate_instance<R: Rng + ?Sized>(
    cfg: &OfdmConfig,
    f_tilde: &crate::linalg::CMat,
    a: &MeasurementMatrix,
    d: usize,
    snr_db: f64,
    rng: &mut R,
) -> Result<Instance> {
    let p = crate::model::partition_idft(f_tilde, d)?;
    let support = draw_support(cfg, rng)?;
    let symbols = draw_symbols(cfg, &support, rng);
    let mut frames = synthesize_frames(&symbols, &p);
    let var = add_noise(&mut frames, cfg, snr_db, rng);
    let z = compress(a, &frames)?;
    Ok(Instance {
        compressed: CompressedStream::new(z, var, d, support),
        symbols,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMat;
    use crate::model::{
        dictionary_pair, extended_idft, partition_idft, restrict_support, sample_measurement_matrix,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reference_cfg() -> OfdmConfig {
        OfdmConfig::new(32, 8, 3, 20, 10).unwrap()
    }

    #[test]
    fn support_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let full = OfdmConfig::new(4, 1, 4, 4, 1).unwrap();
        assert_eq!(draw_support(&full, &mut rng).unwrap(), SupportSet::full(4));
        let s = draw_support(&reference_cfg(), &mut rng).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.indices().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn single_index_support_is_uniform() {
        let cfg = OfdmConfig::new(32, 8, 1, 20, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let draws = 10_000;
        let mut counts = [0usize; 32];
        for _ in 0..draws {
            counts[draw_support(&cfg, &mut rng).unwrap().indices()[0]] += 1;
        }
        let p = 1.0 / 32.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let e = draws as f64 * p;
                assert!((c as f64 - e).abs() < 5.0 * sigma, "count {c}");
                (c as f64 - e).powi(2) / e
            })
            .sum();
        // 31 degrees of freedom; 0.999 quantile is about 61.1.
        assert!(chi2 < 61.1, "chi2 {chi2}");
    }

    #[test]
    fn alphabet_energy() {
        let alpha = qam16_alphabet();
        let mean: f64 = alpha.iter().map(|z| z.norm_sqr()).sum::<f64>() / 16.0;
        assert!((mean - 1.0).abs() < 1e-12);
        let min = alpha
            .iter()
            .map(|z| z.norm_sqr())
            .fold(f64::INFINITY, f64::min);
        assert!((min - 0.2).abs() < 1e-12);
    }

    #[test]
    fn symbol_energy_and_sparsity() {
        let cfg = reference_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let support = SupportSet::new(vec![0, 7, 20], 32).unwrap();
        let mut total = 0.0;
        let mut count = 0usize;
        while count < 100_000 {
            let stream = draw_symbols(&cfg, &support, &mut rng);
            assert_eq!(stream.symbols.len(), 11);
            for s in &stream.symbols {
                for j in 0..32 {
                    if support.contains(j) {
                        assert!(s[j].norm() > 0.0);
                        total += s[j].norm_sqr();
                        count += 1;
                    } else {
                        assert_eq!(s[j], Complex64::new(0.0, 0.0));
                    }
                }
            }
        }
        let mean = total / count as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean energy {mean}");
    }

    /// Builds the contiguous transmitted Nyquist stream and reads the
    /// capture windows directly.
    fn windowed_stream(stream: &SymbolStream, f_tilde: &CMat, d: usize) -> Vec<CVec> {
        let n = f_tilde.nrows();
        let tx: Vec<Complex64> = stream
            .symbols
            .iter()
            .flat_map(|s| (f_tilde * s).iter().copied().collect::<Vec<_>>())
            .collect();
        (1..stream.symbols.len())
            .map(|blk| CVec::from_column_slice(&tx[blk * n - d..blk * n - d + n]))
            .collect()
    }

    #[test]
    fn frames_match_stream_window() {
        let cfg = OfdmConfig::new(32, 8, 32, 32, 4).unwrap();
        let ft = extended_idft(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let stream = draw_symbols(&cfg, &SupportSet::full(32), &mut rng);
        for d in [0, 1, 5, 8, 13, 32, 39] {
            let p = partition_idft(&ft, d).unwrap();
            let frames = synthesize_frames(&stream, &p);
            let oracle = windowed_stream(&stream, &ft, d);
            for (x, w) in frames.iter().zip(&oracle) {
                assert!((x - w).norm() < 1e-12, "d={d}");
            }
        }
        let p0 = partition_idft(&ft, 0).unwrap();
        let frames = synthesize_frames(&stream, &p0);
        for (n, x) in frames.iter().enumerate() {
            assert!((x - &ft * &stream.symbols[n + 1]).norm() < 1e-12);
        }
    }

    #[test]
    fn frame_energy_accounting() {
        // Each sample of F~ s has variance K / N_o, so E||x||^2 = N K / N_o.
        let cfg = reference_cfg();
        let ft = extended_idft(&cfg);
        let p = partition_idft(&ft, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let support = SupportSet::new(vec![3, 4, 28], 32).unwrap();
        let mut total = 0.0;
        let mut frames_seen = 0;
        while frames_seen < 10_000 {
            let stream = draw_symbols(&cfg, &support, &mut rng);
            for x in synthesize_frames(&stream, &p) {
                total += x.norm_squared();
                frames_seen += 1;
            }
        }
        let mean = total / frames_seen as f64;
        let want = 40.0 * 3.0 / 32.0;
        assert!((mean / want - 1.0).abs() < 0.03, "mean {mean} want {want}");
    }

    #[test]
    fn noise_levels() {
        let cfg = reference_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut frames = vec![CVec::from_element(40, Complex64::new(1.0, -1.0)); 3];
        let before = frames.clone();
        assert_eq!(add_noise(&mut frames, &cfg, f64::INFINITY, &mut rng), 0.0);
        assert_eq!(frames, before);

        let dense = OfdmConfig::new(32, 8, 32, 32, 10).unwrap();
        assert!((noise_power(&dense, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empirical_snr() {
        let cfg = reference_cfg();
        let ft = extended_idft(&cfg);
        let p = partition_idft(&ft, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let support = SupportSet::new(vec![1, 10, 19], 32).unwrap();
        let (mut sig, mut noise, mut samples) = (0.0, 0.0, 0usize);
        while samples < 100_000 {
            let stream = draw_symbols(&cfg, &support, &mut rng);
            let clean = synthesize_frames(&stream, &p);
            let mut noisy = clean.clone();
            add_noise(&mut noisy, &cfg, 5.0, &mut rng);
            for (c, n) in clean.iter().zip(&noisy) {
                sig += c.norm_squared();
                noise += (n - c).norm_squared();
                samples += c.len();
            }
        }
        let snr = 10.0 * (sig / noise).log10();
        assert!((snr - 5.0).abs() < 0.2, "snr {snr}");
    }

    #[test]
    fn compression_shapes_and_linearity() {
        let cfg = reference_cfg();
        let a = sample_measurement_matrix(&cfg, &mut ChaCha8Rng::seed_from_u64(1));
        let zeros = vec![CVec::zeros(40); 10];
        let z = compress(&a, &zeros).unwrap();
        assert!(z.iter().all(|v| v.norm() == 0.0));
        let cs = CompressedStream::new(z, 0.0, 0, SupportSet::default());
        assert_eq!(cs.stacked.len(), 200);
        assert!(compress(&a, &[CVec::zeros(39)]).is_err());
    }

    #[test]
    fn compression_matches_dictionary_form() {
        let cfg = reference_cfg();
        let ft = extended_idft(&cfg);
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = sample_measurement_matrix(&cfg, &mut rng);
            let d = rng.random_range(0..cfg.n_total);
            let inst = generate_instance(&cfg, &ft, &a, d, f64::INFINITY, &mut rng).unwrap();
            let dict = dictionary_pair(&a, &partition_idft(&ft, d).unwrap()).unwrap();
            let s = &inst.symbols.symbols;
            for (n, z) in inst.compressed.frames.iter().enumerate() {
                let want = &dict.b1 * &s[n] + &dict.b2 * &s[n + 1];
                assert!((z - want).norm() < 1e-10, "seed {seed}");
            }
            // Stacked form through the restricted dictionary.
            let b = restrict_support(&dict, &inst.compressed.true_support, cfg.n_blocks).unwrap();
            let via_b = b * inst.symbols.restricted();
            assert!((&inst.compressed.stacked - via_b).norm() < 1e-10);
        }
    }

    #[test]
    fn instances_are_seed_deterministic() {
        let cfg = reference_cfg();
        let ft = extended_idft(&cfg);
        let make = || {
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            let a = sample_measurement_matrix(&cfg, &mut rng);
            generate_instance(&cfg, &ft, &a, 17, 3.0, &mut rng)
                .unwrap()
                .compressed
        };
        assert_eq!(make(), make());
    }
}
