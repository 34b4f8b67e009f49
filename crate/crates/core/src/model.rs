//! Measurement model: DFT blocks, the cyclic-prefix IDFT and its
//! offset-dependent row split, the compressive sensing matrix and the
//! per-offset block dictionary.
//!
//! Subcarrier indices are 0-based in code; [`SupportSet`] renders them
//! 1-based for anything user facing.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DMatrixView};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SenseError};
use crate::linalg::{to_complex, CMat, CVec};

/// Scalar dimensions of the OFDM measurement model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OfdmConfig {
    /// IFFT size.
    pub n_sub: usize,
    /// Cyclic prefix length.
    pub n_cp: usize,
    /// Nyquist samples per OFDM symbol, `n_sub + n_cp`.
    pub n_total: usize,
    /// Active subcarriers.
    pub k: usize,
    /// Compressive samples per symbol.
    pub m: usize,
    /// Collected OFDM symbols.
    pub n_blocks: usize,
}

impl OfdmConfig {
    pub fn new(n_sub: usize, n_cp: usize, k: usize, m: usize, n_blocks: usize) -> Result<Self> {
        let n_total = n_sub + n_cp;
        let bad = |msg: String| Err(SenseError::InvalidConfig(msg));
        if n_sub == 0 {
            return bad("n_sub must be positive".into());
        }
        if k == 0 || k > n_sub {
            return bad(format!("k={k} must lie in [1, n_sub={n_sub}]"));
        }
        if m < k || m > n_total {
            return bad(format!(
                "m={m} must satisfy k={k} <= m <= n_total={n_total}"
            ));
        }
        if n_blocks == 0 {
            return bad("n_blocks must be positive".into());
        }
        Ok(Self {
            n_sub,
            n_cp,
            n_total,
            k,
            m,
            n_blocks,
        })
    }

    /// `m = round(ratio * n_total)`.
    pub fn with_ratio(
        n_sub: usize,
        n_cp: usize,
        k: usize,
        ratio: f64,
        n_blocks: usize,
    ) -> Result<Self> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(SenseError::InvalidConfig(format!(
                "compression ratio {ratio} outside (0, 1]"
            )));
        }
        let m = (ratio * (n_sub + n_cp) as f64).round() as usize;
        Self::new(n_sub, n_cp, k, m, n_blocks)
    }

    /// `M * N_b >= (N_b + 1) * K`, the measurement budget under which the
    /// restricted dictionary is generically full column rank.
    pub fn meets_rank_budget(&self) -> bool {
        self.m * self.n_blocks >= (self.n_blocks + 1) * self.k
    }

    /// Offsets for which the restricted dictionary can be full column rank.
    pub fn is_resolvable_offset(&self, d: usize) -> bool {
        self.k <= d && d + self.k <= self.n_total
    }

    pub fn check_offset(&self, d: usize) -> Result<()> {
        if d >= self.n_total {
            return Err(SenseError::InvalidOffset {
                d,
                max: self.n_total - 1,
            });
        }
        Ok(())
    }
}

/// Unitary DFT matrix, `F[p, q] = exp(-j 2 pi p q / n) / sqrt(n)` (0-based).
pub fn dft_matrix(n_sub: usize) -> CMat {
    let scale = 1.0 / (n_sub as f64).sqrt();
    CMat::from_fn(n_sub, n_sub, |p, q| {
        let phase = -2.0 * PI * ((p * q) % n_sub) as f64 / n_sub as f64;
        Complex64::from_polar(scale, phase)
    })
}

/// `[F_0, F]^H`: the IDFT with the cyclic prefix rows prepended.
pub fn extended_idft(cfg: &OfdmConfig) -> CMat {
    extended_idft_dims(cfg.n_sub, cfg.n_cp)
}

pub fn extended_idft_dims(n_sub: usize, n_cp: usize) -> CMat {
    let f = dft_matrix(n_sub);
    let n = n_sub + n_cp;
    // Row i < n_cp is column (n_sub - n_cp + i) of F, conjugated; the rest
    // are the columns of F in order.
    CMat::from_fn(n, n_sub, |i, q| {
        let col = if i < n_cp { n_sub - n_cp + i } else { i - n_cp };
        f[(q, col)].conj()
    })
}

/// The extended IDFT split at timing offset `d`.
#[derive(Debug, Clone)]
pub struct PartitionedIdft {
    pub full: CMat,
    pub d: usize,
    /// First `N - d` rows.
    pub top: CMat,
    /// Last `d` rows.
    pub bottom: CMat,
}

pub fn partition_idft(f_tilde: &CMat, d: usize) -> Result<PartitionedIdft> {
    let n = f_tilde.nrows();
    if n == 0 || d >= n {
        return Err(SenseError::InvalidOffset {
            d,
            max: n.saturating_sub(1),
        });
    }
    Ok(PartitionedIdft {
        full: f_tilde.clone(),
        d,
        top: f_tilde.rows(0, n - d).into_owned(),
        bottom: f_tilde.rows(n - d, d).into_owned(),
    })
}

/// Real Gaussian sensing matrix with unit-norm columns.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    pub a: DMatrix<f64>,
    complex: CMat,
}

impl MeasurementMatrix {
    /// Wraps `a` after normalizing each column to unit norm.
    pub fn from_raw(mut a: DMatrix<f64>) -> Self {
        for mut col in a.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col /= norm;
            }
        }
        let complex = to_complex(&a);
        Self { a, complex }
    }

    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.a.ncols()
    }

    /// First `d` columns.
    pub fn left(&self, d: usize) -> DMatrixView<'_, f64> {
        self.a.columns(0, d)
    }

    /// Last `N - d` columns.
    pub fn right(&self, d: usize) -> DMatrixView<'_, f64> {
        self.a.columns(d, self.a.ncols() - d)
    }

    pub fn as_complex(&self) -> &CMat {
        &self.complex
    }
}

pub fn sample_measurement_matrix<R: Rng + ?Sized>(
    cfg: &OfdmConfig,
    rng: &mut R,
) -> MeasurementMatrix {
    let raw = DMatrix::from_fn(cfg.m, cfg.n_total, |_, _| {
        rng.sample::<f64, _>(StandardNormal)
    });
    MeasurementMatrix::from_raw(raw)
}

/// The pair `(B_{d,1}, B_{d,2})`; the full block-bidiagonal dictionary is
/// only ever assembled on request.
#[derive(Debug, Clone)]
pub struct BlockDictionary {
    pub d: usize,
    /// `A_{d,1} F_{d,2}`: the previous symbol's tail as seen in this frame.
    pub b1: CMat,
    /// `A_{d,2} F_{d,1}`: the current symbol's head.
    pub b2: CMat,
}

pub fn dictionary_pair(a: &MeasurementMatrix, p: &PartitionedIdft) -> Result<BlockDictionary> {
    let n = p.full.nrows();
    if a.ncols() != n {
        return Err(SenseError::DimensionMismatch(format!(
            "measurement matrix has {} columns, IDFT has {} rows",
            a.ncols(),
            n
        )));
    }
    let d = p.d;
    let ac = a.as_complex();
    let b1 = ac.columns(0, d) * &p.bottom;
    let b2 = ac.columns(d, n - d) * &p.top;
    Ok(BlockDictionary { d, b1, b2 })
}

impl BlockDictionary {
    pub fn m(&self) -> usize {
        self.b2.nrows()
    }

    pub fn n_sub(&self) -> usize {
        self.b2.ncols()
    }

    /// Column-restricted pair `(B_{d,1,S}, B_{d,2,S})`.
    pub fn restricted(&self, s: &SupportSet) -> Result<(CMat, CMat)> {
        s.check_range(self.n_sub())?;
        Ok((
            self.b1.select_columns(s.indices()),
            self.b2.select_columns(s.indices()),
        ))
    }

    /// Dense `(M N_b) x (N_o (N_b + 1))` dictionary. Test and analysis use only.
    pub fn assemble(&self, n_blocks: usize) -> CMat {
        assemble_block_bidiagonal(&self.b1, &self.b2, n_blocks)
    }

    /// `[B_{d,2}[:, j]; B_{d,1}[:, j]]` for 0-based atom `j`.
    pub fn stacked_atom(&self, j: usize) -> Result<CVec> {
        if j >= self.n_sub() {
            return Err(SenseError::AtomOutOfRange {
                index: j + 1,
                n_sub: self.n_sub(),
            });
        }
        let m = self.m();
        let mut out = CVec::zeros(2 * m);
        out.rows_mut(0, m).copy_from(&self.b2.column(j));
        out.rows_mut(m, m).copy_from(&self.b1.column(j));
        Ok(out)
    }
}

/// Dense restricted dictionary `B_{d,S}`.
pub fn restrict_support(dict: &BlockDictionary, s: &SupportSet, n_blocks: usize) -> Result<CMat> {
    if s.is_empty() {
        return Err(SenseError::InvalidConfig("empty support set".into()));
    }
    let (b1s, b2s) = dict.restricted(s)?;
    Ok(assemble_block_bidiagonal(&b1s, &b2s, n_blocks))
}

/// Block row `n` (0-based) holds `b1` in block column `n` and `b2` in
/// block column `n + 1`.
pub fn assemble_block_bidiagonal(b1: &CMat, b2: &CMat, n_blocks: usize) -> CMat {
    let (m, c) = b2.shape();
    let mut out = CMat::zeros(m * n_blocks, c * (n_blocks + 1));
    for n in 0..n_blocks {
        out.view_mut((n * m, n * c), (m, c)).copy_from(b1);
        out.view_mut((n * m, (n + 1) * c), (m, c)).copy_from(b2);
    }
    out
}

/// Sorted, duplicate-free set of active subcarriers (0-based internally).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    /// Builds a support from 0-based indices, sorting them. Duplicates and
    /// indices `>= n_sub` are rejected.
    pub fn new(mut indices: Vec<usize>, n_sub: usize) -> Result<Self> {
        indices.sort_unstable();
        for w in indices.windows(2) {
            if w[0] == w[1] {
                return Err(SenseError::DuplicateSupport(w[0] + 1));
            }
        }
        let s = Self { indices };
        s.check_range(n_sub)?;
        Ok(s)
    }

    pub fn from_one_based(indices: &[usize], n_sub: usize) -> Result<Self> {
        let mut zero = Vec::with_capacity(indices.len());
        for &i in indices {
            if i == 0 || i > n_sub {
                return Err(SenseError::SupportOutOfRange { index: i, n_sub });
            }
            zero.push(i - 1);
        }
        Self::new(zero, n_sub)
    }

    /// `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
        }
    }

    pub fn check_range(&self, n_sub: usize) -> Result<()> {
        match self.indices.last() {
            Some(&i) if i >= n_sub => Err(SenseError::SupportOutOfRange {
                index: i + 1,
                n_sub,
            }),
            _ => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + Clone + '_ {
        self.indices.iter().copied()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    pub fn intersection_count(&self, other: &SupportSet) -> usize {
        self.iter().filter(|&j| other.contains(j)).count()
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.iter().map(|j| j + 1).collect()
    }
}

/// Space-separated, 1-based.
impl fmt::Display for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

/// Parses the [`Display`](fmt::Display) form. No range check against
/// `n_sub` is possible here; indices must be positive.
impl FromStr for SupportSet {
    type Err = SenseError;

    fn from_str(s: &str) -> Result<Self> {
        let mut idx = Vec::new();
        for tok in s.split_whitespace() {
            let v: usize = tok
                .parse()
                .map_err(|_| SenseError::Parse(format!("bad support index {tok:?}")))?;
            if v == 0 {
                return Err(SenseError::Parse("support indices are 1-based".into()));
            }
            idx.push(v - 1);
        }
        Self::new(idx, usize::MAX)
    }
}
