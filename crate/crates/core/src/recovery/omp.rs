//! Joint OMP over the offset-aware block dictionary, for offsets where the
//! restricted dictionary is full column rank.

use num_complex::Complex64;

use super::block_ls::{block_residual, solve_block_bidiagonal};
use super::RecoveryResult;
use crate::error::{Result, SenseError};
use crate::linalg::{concat_vectors, CMat, CVec};
use crate::model::{BlockDictionary, OfdmConfig, SupportSet};

/// Per-iteration state kept for inspection.
#[derive(Debug, Clone)]
pub struct OmpTrace {
    /// Atoms in selection order (0-based).
    pub order: Vec<usize>,
    /// Stacked residual energy after each refit.
    pub residuals: Vec<f64>,
}

/// `sum_n |b~_j^H [r[n-1]; r[n]]|` for every atom `j`, with `r[0] = 0`.
fn joint_correlations(dict: &BlockDictionary, residual: &[CVec]) -> Vec<f64> {
    let n_sub = dict.n_sub();
    let r = CMat::from_columns(residual);
    let g1 = dict.b1.adjoint() * &r;
    let g2 = dict.b2.adjoint() * &r;
    (0..n_sub)
        .map(|j| {
            (0..residual.len())
                .map(|n| {
                    let prev = if n == 0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        g2[(j, n - 1)]
                    };
                    (prev + g1[(j, n)]).norm()
                })
                .sum()
        })
        .collect()
}

/// Largest score among unselected atoms; lowest index wins ties.
pub(crate) fn pick_atom(scores: &[f64], taken: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &s) in scores.iter().enumerate() {
        if taken.contains(&j) {
            continue;
        }
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((j, s));
        }
    }
    best.map(|(j, _)| j)
}

pub fn omp_joint(
    frames: &[CVec],
    dict: &BlockDictionary,
    cfg: &OfdmConfig,
) -> Result<RecoveryResult> {
    omp_joint_traced(frames, dict, cfg).map(|(r, _)| r)
}

pub fn omp_joint_traced(
    frames: &[CVec],
    dict: &BlockDictionary,
    cfg: &OfdmConfig,
) -> Result<(RecoveryResult, OmpTrace)> {
    if frames.len() != cfg.n_blocks || frames.iter().any(|z| z.len() != dict.m()) {
        return Err(SenseError::DimensionMismatch(format!(
            "expected {} frames of length {}",
            cfg.n_blocks,
            dict.m()
        )));
    }
    let mut residual = frames.to_vec();
    let mut order = Vec::with_capacity(cfg.k);
    let mut residuals = Vec::with_capacity(cfg.k);
    let mut support = SupportSet::default();
    let mut coeffs = CVec::zeros(0);
    let mut residual_sq = frames.iter().map(|z| z.norm_squared()).sum::<f64>();

    for _ in 0..cfg.k {
        let scores = joint_correlations(dict, &residual);
        let j = pick_atom(&scores, &order).expect("k <= n_sub leaves a candidate");
        order.push(j);
        support = SupportSet::new(order.clone(), dict.n_sub())?;

        let (b1s, b2s) = dict.restricted(&support)?;
        let fit = solve_block_bidiagonal(&b1s, &b2s, frames);
        let cols = support.len() * (cfg.n_blocks + 1);
        if fit.rank < cols {
            return Err(SenseError::RankDeficient {
                d: dict.d,
                rank: fit.rank,
                cols,
            });
        }
        residual = block_residual(&b1s, &b2s, frames, &fit.coeffs);
        let next_sq: f64 = residual.iter().map(|r| r.norm_squared()).sum();
        debug_assert!(
            next_sq <= residual_sq * (1.0 + 1e-9) + 1e-300,
            "OMP residual increased: {residual_sq} -> {next_sq}"
        );
        residual_sq = next_sq;
        residuals.push(next_sq);
        coeffs = concat_vectors(&fit.coeffs);
    }

    Ok((
        RecoveryResult {
            support_est: support,
            d_est: None,
            coeffs,
            residual_sq,
            iterations: 0,
        },
        OmpTrace { order, residuals },
    ))
}
