//! Numerical checks of the recoverability theory: brute-force spark of the
//! IDFT row blocks, the column-space intersection identity, and the rank
//! regimes of the restricted dictionary. Ranks here come from a dense SVD
//! of the assembled matrix, independent of the structured solver.

use itertools::Itertools;

use crate::error::{Result, SenseError};
use crate::linalg::{numerical_rank, numerical_rank_with, rank_tolerance, CMat};
use crate::model::{
    dictionary_pair, extended_idft, partition_idft, restrict_support, MeasurementMatrix,
    OfdmConfig, SupportSet,
};
pub use crate::recovery::OffsetRegime;

/// Largest column count accepted by [`spark_bruteforce`].
pub const SPARK_COLUMN_LIMIT: usize = 20;

/// Smallest number of linearly dependent columns. Full-column-rank tall
/// matrices get `cols + 1`; full-spark fat matrices end up at `rows + 1`.
/// Dependence is judged by numerical rank at `rel_tol` (relative to each
/// subset's largest singular value).
pub fn spark_bruteforce(mtx: &CMat, rel_tol: f64) -> Result<usize> {
    let (rows, cols) = mtx.shape();
    if cols > SPARK_COLUMN_LIMIT {
        return Err(SenseError::SparkGuard {
            cols,
            limit: SPARK_COLUMN_LIMIT,
        });
    }
    for n in 1..=cols {
        if n > rows {
            // Any rows + 1 columns are dependent.
            return Ok(n);
        }
        let dependent = (0..cols)
            .combinations(n)
            .any(|subset| numerical_rank_with(&mtx.select_columns(subset.iter()), rel_tol) < n);
        if dependent {
            return Ok(n);
        }
    }
    Ok(cols + 1)
}

pub fn spark(mtx: &CMat) -> Result<usize> {
    spark_bruteforce(mtx, rank_tolerance(mtx.nrows(), mtx.ncols()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SparkCheck {
    pub d: usize,
    /// Spark of the last `d` rows of the extended IDFT.
    pub spark_tail: usize,
    pub expected_tail: usize,
    /// Spark of the first `N - d` rows.
    pub spark_head: usize,
    pub expected_head: usize,
}

impl SparkCheck {
    pub fn holds(&self) -> bool {
        self.spark_tail == self.expected_tail && self.spark_head == self.expected_head
    }
}

/// Brute-forces both row blocks at offset `d` against
/// `min(N_o, d) + 1` and `min(N_o, N - d) + 1`. At `d = 0` the tail block has
/// no rows, every column is zero and its spark is 1, which the formula also
/// gives.
pub fn verify_spark_formula(cfg: &OfdmConfig, d: usize) -> Result<SparkCheck> {
    if cfg.n_sub > 8 {
        return Err(SenseError::SparkGuard {
            cols: cfg.n_sub,
            limit: 8,
        });
    }
    cfg.check_offset(d)?;
    let p = partition_idft(&extended_idft(cfg), d)?;
    let n = cfg.n_total;
    Ok(SparkCheck {
        d,
        spark_tail: spark(&p.bottom)?,
        expected_tail: cfg.n_sub.min(d) + 1,
        spark_head: spark(&p.top)?,
        expected_head: cfg.n_sub.min(n - d) + 1,
    })
}

/// `dim(C(phi) ∩ C(psi)) = rank(phi) + rank(psi) - rank([phi, psi])`.
pub fn intersection_dim(phi: &CMat, psi: &CMat, rel_tol: f64) -> Result<usize> {
    if phi.nrows() != psi.nrows() {
        return Err(SenseError::DimensionMismatch(format!(
            "phi has {} rows, psi has {}",
            phi.nrows(),
            psi.nrows()
        )));
    }
    let rank_phi = numerical_rank_with(phi, rel_tol);
    if rank_phi < phi.ncols() {
        return Err(SenseError::NotFullColumnRank {
            rank: rank_phi,
            cols: phi.ncols(),
        });
    }
    let joint = CMat::from_fn(phi.nrows(), phi.ncols() + psi.ncols(), |r, c| {
        if c < phi.ncols() {
            phi[(r, c)]
        } else {
            psi[(r, c - phi.ncols())]
        }
    });
    Ok(rank_phi + numerical_rank_with(psi, rel_tol) - numerical_rank_with(&joint, rel_tol))
}

/// Generic value for a `Q x P` full-column-rank `phi` against a random
/// `Q x T` `psi`: `P + min(Q, T) - min(Q, P + T)`.
pub fn intersection_dim_closed_form(q: usize, p: usize, t: usize) -> usize {
    p + q.min(t) - q.min(p + t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankReport {
    pub d: usize,
    pub k: usize,
    pub observed_rank: usize,
    /// `(N_b + 1) K`.
    pub expected_full: usize,
    pub is_full: bool,
    pub regime: OffsetRegime,
    /// Whether `M N_b >= (N_b + 1) K` held for the config.
    pub meets_budget: bool,
}

impl RankReport {
    /// Full column rank outside `[K, N - K]`.
    pub fn necessary_violated(&self) -> bool {
        self.regime != OffsetRegime::Inside && self.is_full
    }

    /// Rank deficiency inside `[K, N - K]` with enough measurements.
    pub fn sufficient_violated(&self) -> bool {
        self.regime == OffsetRegime::Inside && self.meets_budget && !self.is_full
    }

    pub fn violated(&self) -> bool {
        self.necessary_violated() || self.sufficient_violated()
    }
}

pub fn rank_condition_report(
    cfg: &OfdmConfig,
    d: usize,
    support: &SupportSet,
    a: &MeasurementMatrix,
    f: &CMat,
) -> Result<RankReport> {
    if support.len() != cfg.k {
        return Err(SenseError::InvalidConfig(format!(
            "support has {} entries, config has k={}",
            support.len(),
            cfg.k
        )));
    }
    let dict = dictionary_pair(a, &partition_idft(f, d)?)?;
    let b = restrict_support(&dict, support, cfg.n_blocks)?;
    let observed_rank = numerical_rank(&b);
    let expected_full = (cfg.n_blocks + 1) * cfg.k;
    Ok(RankReport {
        d,
        k: cfg.k,
        observed_rank,
        expected_full,
        is_full: observed_rank == expected_full,
        regime: OffsetRegime::classify(cfg, d),
        meets_budget: cfg.meets_rank_budget(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankChain {
    pub rank_b1s: usize,
    pub rank_b2s: usize,
    pub rank_bds: usize,
}

impl RankChain {
    /// `(K, K, (N_b + 1) K)`.
    pub fn matches(&self, cfg: &OfdmConfig) -> bool {
        *self == Self::expected(cfg)
    }

    pub fn expected(cfg: &OfdmConfig) -> Self {
        Self {
            rank_b1s: cfg.k,
            rank_b2s: cfg.k,
            rank_bds: (cfg.n_blocks + 1) * cfg.k,
        }
    }
}

/// Ranks of the two restricted blocks and of the full restricted dictionary.
pub fn rank_chain(
    cfg: &OfdmConfig,
    d: usize,
    support: &SupportSet,
    a: &MeasurementMatrix,
    f: &CMat,
) -> Result<RankChain> {
    let dict = dictionary_pair(a, &partition_idft(f, d)?)?;
    let (b1s, b2s) = dict.restricted(support)?;
    let b = restrict_support(&dict, support, cfg.n_blocks)?;
    Ok(RankChain {
        rank_b1s: numerical_rank(&b1s),
        rank_b2s: numerical_rank(&b2s),
        rank_bds: numerical_rank(&b),
    })
}
