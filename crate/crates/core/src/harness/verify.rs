//! Property suites behind `sense verify`.
//!
//! Each property reports how many instances it checked and, for every
//! failure, enough context (config, offset, seed) to reproduce it.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analysis::{
    intersection_dim, intersection_dim_closed_form, rank_chain, rank_condition_report, spark,
    verify_spark_formula, RankChain,
};
use crate::error::{Result, SenseError};
use crate::linalg::{max_abs, numerical_rank, pinv_solve, rank_tolerance, CMat};
use crate::model::{
    extended_idft, restrict_support, sample_measurement_matrix, OfdmConfig, SupportSet,
};
use crate::recovery::{column_space_annihilator, OffsetRegime, Sensor};
use crate::siggen::{draw_support, generate_instance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Spark,
    Rank,
    Projector,
    Oracle,
    All,
}

impl FromStr for Suite {
    type Err = SenseError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spark" => Ok(Suite::Spark),
            "rank" => Ok(Suite::Rank),
            "projector" => Ok(Suite::Projector),
            "oracle" => Ok(Suite::Oracle),
            "all" => Ok(Suite::All),
            _ => Err(SenseError::Parse(format!("unknown suite {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub checked: usize,
    pub failures: Vec<String>,
}

impl PropertyOutcome {
    fn new(name: &'static str, results: Vec<Option<String>>) -> Self {
        Self {
            name,
            checked: results.len(),
            failures: results.into_iter().flatten().collect(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for PropertyOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{tag} {} ({} checked, {} failed)",
            self.name,
            self.checked,
            self.failures.len()
        )?;
        for msg in self.failures.iter().take(10) {
            write!(f, "\n    {msg}")?;
        }
        Ok(())
    }
}

/// Errors count as failures, tagged with the instance that raised them.
fn flatten(tag: impl FnOnce() -> String, r: Result<Option<String>>) -> Option<String> {
    r.unwrap_or_else(|e| Some(format!("{}: {e}", tag())))
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// IDFT sizes for the brute-force spark grid.
pub const SPARK_GRID: [(usize, usize); 5] = [(4, 1), (4, 2), (6, 2), (8, 2), (8, 4)];

/// Brute-force spark of both row blocks against the closed form, for every
/// interior offset.
pub fn spark_formula_property() -> PropertyOutcome {
    let cases: Vec<(usize, usize, usize)> = SPARK_GRID
        .iter()
        .flat_map(|&(n_sub, n_cp)| (1..n_sub + n_cp).map(move |d| (n_sub, n_cp, d)))
        .collect();
    let results = cases
        .par_iter()
        .map(|&(n_sub, n_cp, d)| {
            let tag = format!("N_o={n_sub} N_CP={n_cp} d={d}");
            let cfg = match OfdmConfig::new(n_sub, n_cp, 1, 1, 1) {
                Ok(c) => c,
                Err(e) => return Some(format!("{tag}: {e}")),
            };
            match verify_spark_formula(&cfg, d) {
                Ok(c) if c.holds() => None,
                Ok(c) => Some(format!(
                    "{tag}: tail {} (want {}), head {} (want {})",
                    c.spark_tail, c.expected_tail, c.spark_head, c.expected_head
                )),
                Err(e) => Some(format!("{tag}: {e}")),
            }
        })
        .collect();
    PropertyOutcome::new("spark/row-blocks", results)
}

/// `spark <= rank + 1` on random low-rank and generic matrices.
pub fn spark_rank_bound_property(seeds: u64) -> PropertyOutcome {
    let results = (0..seeds)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows = rng.random_range(1..=6);
            let cols = rng.random_range(1..=8);
            let r = rng.random_range(1..=rows.min(cols));
            let m = gaussian(&mut rng, rows, r) * gaussian(&mut rng, r, cols);
            match spark(&m) {
                Ok(s) if s <= numerical_rank(&m) + 1 => None,
                Ok(s) => Some(format!(
                    "seed {seed}: spark {s} > rank {} + 1",
                    numerical_rank(&m)
                )),
                Err(e) => Some(format!("seed {seed}: {e}")),
            }
        })
        .collect();
    PropertyOutcome::new("spark/rank-bound", results)
}

/// Rank identity route against the closed form on random `(Q, P, T)`.
pub fn intersection_property(instances: u64) -> PropertyOutcome {
    let results = (0..instances)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = rng.random_range(1..=12);
            let p = rng.random_range(1..=q);
            let t = rng.random_range(1..=12);
            let phi = gaussian(&mut rng, q, p);
            let psi = gaussian(&mut rng, q, t);
            let want = intersection_dim_closed_form(q, p, t);
            match intersection_dim(&phi, &psi, rank_tolerance(q, p + t)) {
                Ok(got) if got == want => None,
                Ok(got) => Some(format!(
                    "seed {seed} Q={q} P={p} T={t}: {got} vs closed form {want}"
                )),
                Err(e) => Some(format!("seed {seed}: {e}")),
            }
        })
        .collect();
    PropertyOutcome::new("rank/intersection", results)
}

/// The rank grid: `N_o in {8, 16}`, `N_CP = N_o / 4`, `K in {1, 2, 3}`,
/// `N_b in {2, 3}`, `M = ceil(1.5 (N_b + 1) K / N_b)`.
pub fn rank_grid() -> Vec<OfdmConfig> {
    let mut out = Vec::new();
    for n_sub in [8, 16] {
        for k in 1..=3 {
            for nb in [2usize, 3] {
                let m = (3 * (nb + 1) * k).div_ceil(2 * nb);
                out.push(
                    OfdmConfig::new(n_sub, n_sub / 4, k, m, nb).expect("grid config is valid"),
                );
            }
        }
    }
    out
}

/// Full column rank exactly on `[K, N - K]`, for every offset and `seeds`
/// draws of `A` and the support per config.
pub fn rank_regime_property(seeds: u64) -> PropertyOutcome {
    let jobs: Vec<(OfdmConfig, u64)> = rank_grid()
        .into_iter()
        .cartesian_product(0..seeds)
        .collect();
    let results = jobs
        .par_iter()
        .flat_map_iter(|&(cfg, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = sample_measurement_matrix(&cfg, &mut rng);
            let s = draw_support(&cfg, &mut rng).expect("k <= n_sub");
            let f = extended_idft(&cfg);
            (0..cfg.n_total)
                .map(|d| match rank_condition_report(&cfg, d, &s, &a, &f) {
                    Ok(r) if !r.violated() => None,
                    Ok(r) => Some(format!(
                        "{cfg:?} d={d} seed {seed}: rank {} of {} in regime {:?}",
                        r.observed_rank, r.expected_full, r.regime
                    )),
                    Err(e) => Some(format!("{cfg:?} d={d} seed {seed}: {e}")),
                })
                .collect::<Vec<_>>()
        })
        .collect();
    PropertyOutcome::new("rank/regimes", results)
}

/// Ranks of `B_{d,1,S}`, `B_{d,2,S}` and `B_{d,S}` inside the resolvable
/// range.
pub fn rank_chain_property(seeds: u64) -> PropertyOutcome {
    let jobs: Vec<(OfdmConfig, u64)> = rank_grid()
        .into_iter()
        .cartesian_product(0..seeds)
        .collect();
    let results = jobs
        .par_iter()
        .flat_map_iter(|&(cfg, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = sample_measurement_matrix(&cfg, &mut rng);
            let s = draw_support(&cfg, &mut rng).expect("k <= n_sub");
            let f = extended_idft(&cfg);
            (cfg.k..=cfg.n_total - cfg.k)
                .map(|d| match rank_chain(&cfg, d, &s, &a, &f) {
                    Ok(c) if c.matches(&cfg) => None,
                    Ok(c) => Some(format!(
                        "{cfg:?} d={d} seed {seed}: {c:?}, want {:?}",
                        RankChain::expected(&cfg)
                    )),
                    Err(e) => Some(format!("{cfg:?} d={d} seed {seed}: {e}")),
                })
                .collect::<Vec<_>>()
        })
        .collect();
    PropertyOutcome::new("rank/chain", results)
}

/// The annihilator kills the unresolvable block on both edge regimes.
pub fn projector_property(seeds: u64) -> PropertyOutcome {
    let cfgs = [
        OfdmConfig::new(32, 8, 3, 20, 10).expect("valid"),
        OfdmConfig::new(16, 4, 4, 10, 5).expect("valid"),
        OfdmConfig::new(8, 2, 2, 5, 2).expect("valid"),
    ];
    let jobs: Vec<(OfdmConfig, u64)> = cfgs.into_iter().cartesian_product(0..seeds).collect();
    let results = jobs
        .par_iter()
        .flat_map_iter(|&(cfg, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = sample_measurement_matrix(&cfg, &mut rng);
            let sensor = Sensor::new(cfg, &a).expect("shapes match");
            (0..cfg.n_total)
                .filter(|&d| OffsetRegime::classify(&cfg, d) != OffsetRegime::Inside)
                .map(|d| {
                    let dict = match sensor.dictionary(d) {
                        Ok(x) => x,
                        Err(e) => return Some(format!("{cfg:?} d={d} seed {seed}: {e}")),
                    };
                    let nuisance = if d < cfg.k { &dict.b1 } else { &dict.b2 };
                    let p = column_space_annihilator(
                        nuisance,
                        rank_tolerance(nuisance.nrows(), nuisance.ncols()),
                    );
                    let err = max_abs(&(&p * nuisance));
                    let gram = max_abs(&(&p * p.adjoint() - CMat::identity(p.nrows(), p.nrows())));
                    (err >= 1e-10 || gram >= 1e-10).then(|| {
                        format!("{cfg:?} d={d} seed {seed}: |PB|max={err:e}, |PP^H-I|max={gram:e}")
                    })
                })
                .collect::<Vec<_>>()
        })
        .collect();
    PropertyOutcome::new("projector/annihilator", results)
}

/// Exhaustive search over all K-subsets agrees with the recovered support
/// whenever recovery reaches zero residual. Tiny noiseless configs only.
pub fn oracle_property(seeds: u64) -> PropertyOutcome {
    let cfgs = [
        OfdmConfig::new(6, 2, 2, 5, 2).expect("valid"),
        OfdmConfig::new(4, 1, 2, 4, 2).expect("valid"),
        OfdmConfig::new(6, 2, 1, 3, 1).expect("valid"),
    ];
    let jobs: Vec<(OfdmConfig, u64)> = cfgs.into_iter().cartesian_product(0..seeds).collect();
    let results = jobs
        .par_iter()
        .map(|&(cfg, seed)| flatten(|| format!("{cfg:?} seed {seed}"), oracle_case(cfg, seed)))
        .collect();
    PropertyOutcome::new("oracle/exhaustive", results)
}

fn oracle_case(cfg: OfdmConfig, seed: u64) -> Result<Option<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = sample_measurement_matrix(&cfg, &mut rng);
    let d = rng.random_range(cfg.k..=cfg.n_total - cfg.k);
    let inst = generate_instance(&cfg, &extended_idft(&cfg), &a, d, f64::INFINITY, &mut rng)?;
    let z = &inst.compressed;
    let sensor = Sensor::new(cfg, &a)?;
    let res = sensor.recover_known_offset(z, d)?;
    let energy = z.stacked.norm_squared();
    if res.residual_sq > 1e-20 * energy {
        return Ok(None);
    }
    let dict = sensor.dictionary(d)?;
    let zm = CMat::from_column_slice(z.stacked.len(), 1, z.stacked.as_slice());
    let mut best: Option<(SupportSet, f64)> = None;
    for sub in (0..cfg.n_sub).combinations(cfg.k) {
        let s = SupportSet::new(sub, cfg.n_sub)?;
        let b = restrict_support(&dict, &s, cfg.n_blocks)?;
        let r = (&zm - &b * pinv_solve(&b, &zm)).norm_squared();
        if best.as_ref().is_none_or(|(_, br)| r < *br) {
            best = Some((s, r));
        }
    }
    let (best, best_res) = best.expect("at least one subset");
    // Several subsets can fit exactly; only a strictly better one is a
    // disagreement.
    Ok(
        (best != res.support_est && best_res < res.residual_sq - 1e-12 * energy).then(|| {
            format!(
                "d={d}: recovered {} but {best} fits better",
                res.support_est
            )
        }),
    )
}

/// Noiseless objective at the true pair is numerically zero whenever the
/// offset is resolvable.
pub fn objective_property(seeds: u64) -> PropertyOutcome {
    let cfg = OfdmConfig::new(32, 8, 3, 20, 10).expect("valid");
    let results = (0..seeds)
        .into_par_iter()
        .map(|seed| {
            flatten(
                || format!("seed {seed}"),
                (|| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let a = sample_measurement_matrix(&cfg, &mut rng);
                    let d = rng.random_range(cfg.k..=cfg.n_total - cfg.k);
                    let inst = generate_instance(
                        &cfg,
                        &extended_idft(&cfg),
                        &a,
                        d,
                        f64::INFINITY,
                        &mut rng,
                    )?;
                    let z = &inst.compressed;
                    let obj =
                        Sensor::new(cfg, &a)?.offset_objective(&z.frames, d, &z.true_support)?;
                    Ok((obj > 1e-18).then(|| format!("seed {seed} d={d}: objective {obj:e}")))
                })(),
            )
        })
        .collect();
    PropertyOutcome::new("oracle/objective-at-truth", results)
}

pub fn run_suite(suite: Suite) -> Vec<PropertyOutcome> {
    match suite {
        Suite::Spark => vec![spark_formula_property(), spark_rank_bound_property(200)],
        Suite::Rank => vec![
            rank_regime_property(100),
            rank_chain_property(100),
            intersection_property(500),
        ],
        Suite::Projector => vec![projector_property(50)],
        Suite::Oracle => vec![oracle_property(100), objective_property(200)],
        Suite::All => [Suite::Spark, Suite::Rank, Suite::Projector, Suite::Oracle]
            .into_iter()
            .flat_map(run_suite)
            .collect(),
    }
}
