//! Active-subcarrier recovery with a known offset, and the alternating
//! offset/support estimator for an unknown one.
//!
//! Offsets split into three regimes. Inside `[K, N - K]` the restricted
//! dictionary is generically full column rank and joint OMP runs on the
//! block dictionary directly. Below `K` the previous symbol's tail cannot be
//! resolved, so every frame is projected onto the orthogonal complement of
//! `B_{d,1}` and SOMP runs on the projected `B_{d,2}`. Above `N - K` the
//! roles swap and the frames identify `s[n-1]` through `B_{d,1}`.

pub mod block_ls;
pub mod omp;
pub mod somp;

use rayon::prelude::*;

pub use block_ls::{solve_block_bidiagonal, BlockLsFit};
pub use omp::{omp_joint, omp_joint_traced, OmpTrace};
pub use somp::{column_space_annihilator, somp, SompFit};

use crate::error::{Result, SenseError};
use crate::linalg::{rank_tolerance, CMat, CVec};
use crate::model::{
    dictionary_pair, extended_idft, partition_idft, BlockDictionary, MeasurementMatrix, OfdmConfig,
    SupportSet,
};
use crate::siggen::CompressedStream;

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub support_est: SupportSet,
    /// Present only when the offset was estimated.
    pub d_est: Option<usize>,
    /// `s_S` from the block least-squares fit on the OMP path; the per-frame
    /// SOMP coefficients (frame-major) on the projection paths.
    pub coeffs: CVec,
    /// Squared distance from `z` to the column space of `B_{d,S}`.
    pub residual_sq: f64,
    /// Refinement sweeps used by the offset search; 0 for known offsets.
    pub iterations: usize,
}

/// Which recovery route a known offset takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffsetRegime {
    /// `d < K`: project out `B_{d,1}`.
    Below,
    /// `K <= d <= N - K`: joint OMP.
    Inside,
    /// `d > N - K`: project out `B_{d,2}`.
    Above,
}

impl OffsetRegime {
    pub fn classify(cfg: &OfdmConfig, d: usize) -> Self {
        if d < cfg.k {
            Self::Below
        } else if d + cfg.k > cfg.n_total {
            Self::Above
        } else {
            Self::Inside
        }
    }
}

/// Recovery bound to one measurement matrix. Holds the extended IDFT so
/// per-offset dictionaries are cheap to build.
pub struct Sensor<'a> {
    cfg: OfdmConfig,
    f_tilde: CMat,
    a: &'a MeasurementMatrix,
}

impl<'a> Sensor<'a> {
    pub fn new(cfg: OfdmConfig, a: &'a MeasurementMatrix) -> Result<Self> {
        if a.nrows() != cfg.m || a.ncols() != cfg.n_total {
            return Err(SenseError::DimensionMismatch(format!(
                "measurement matrix is {}x{}, config wants {}x{}",
                a.nrows(),
                a.ncols(),
                cfg.m,
                cfg.n_total
            )));
        }
        Ok(Self {
            f_tilde: extended_idft(&cfg),
            cfg,
            a,
        })
    }

    pub fn config(&self) -> &OfdmConfig {
        &self.cfg
    }

    pub fn dictionary(&self, d: usize) -> Result<BlockDictionary> {
        self.cfg.check_offset(d)?;
        dictionary_pair(self.a, &partition_idft(&self.f_tilde, d)?)
    }

    fn check_frames(&self, frames: &[CVec]) -> Result<()> {
        if frames.len() != self.cfg.n_blocks || frames.iter().any(|z| z.len() != self.cfg.m) {
            return Err(SenseError::DimensionMismatch(format!(
                "expected {} frames of length {}",
                self.cfg.n_blocks, self.cfg.m
            )));
        }
        Ok(())
    }

    pub fn recover_known_offset(&self, z: &CompressedStream, d: usize) -> Result<RecoveryResult> {
        self.recover_frames(&z.frames, d)
    }

    pub fn recover_frames(&self, frames: &[CVec], d: usize) -> Result<RecoveryResult> {
        self.check_frames(frames)?;
        let dict = self.dictionary(d)?;
        match OffsetRegime::classify(&self.cfg, d) {
            OffsetRegime::Inside => omp_joint(frames, &dict, &self.cfg),
            OffsetRegime::Below => self.projected(frames, &dict, &dict.b1, &dict.b2),
            OffsetRegime::Above => self.projected(frames, &dict, &dict.b2, &dict.b1),
        }
    }

    /// Annihilates `nuisance`, runs SOMP on the projected `signal` atoms and
    /// scores the support against the full restricted dictionary.
    fn projected(
        &self,
        frames: &[CVec],
        dict: &BlockDictionary,
        nuisance: &CMat,
        signal: &CMat,
    ) -> Result<RecoveryResult> {
        let p =
            column_space_annihilator(nuisance, rank_tolerance(nuisance.nrows(), nuisance.ncols()));
        let atoms = &p * signal;
        let projected: Vec<CVec> = frames.iter().map(|z| &p * z).collect();
        let fit = somp(&projected, &atoms, self.cfg.k)?;
        let residual_sq = self.residual(frames, dict, &fit.support)?;
        Ok(RecoveryResult {
            coeffs: CVec::from_column_slice(fit.coeffs.as_slice()),
            support_est: fit.support,
            d_est: None,
            residual_sq,
            iterations: 0,
        })
    }

    fn residual(
        &self,
        frames: &[CVec],
        dict: &BlockDictionary,
        support: &SupportSet,
    ) -> Result<f64> {
        if support.is_empty() {
            return Err(SenseError::InvalidConfig("empty support set".into()));
        }
        let (b1s, b2s) = dict.restricted(support)?;
        Ok(solve_block_bidiagonal(&b1s, &b2s, frames).residual_sq)
    }

    /// Per-dimension energy of `z` outside the column space of `B_{d,S}`.
    pub fn offset_objective(&self, frames: &[CVec], d: usize, support: &SupportSet) -> Result<f64> {
        self.check_frames(frames)?;
        let dict = self.dictionary(d)?;
        let dims = (self.cfg.m * self.cfg.n_blocks) as f64;
        Ok(self.residual(frames, &dict, support)? / dims)
    }

    /// Full scan over every offset followed by alternating refinement.
    pub fn estimate_offset_and_support(
        &self,
        z: &CompressedStream,
        max_sweeps: usize,
    ) -> Result<RecoveryResult> {
        let all: Vec<usize> = (0..self.cfg.n_total).collect();
        self.estimate_over(&z.frames, &all, max_sweeps)
    }

    /// Alternating estimate restricted to `candidates`.
    ///
    /// The first pass runs the known-offset recovery at every candidate and
    /// keeps the pair with the smallest objective. Each refinement sweep then
    /// re-scores all candidates at the current support and, if a different
    /// offset wins, re-runs recovery there. Stops at a fixed point or after
    /// `max_sweeps` sweeps. The best pair seen is returned.
    pub fn estimate_over(
        &self,
        frames: &[CVec],
        candidates: &[usize],
        max_sweeps: usize,
    ) -> Result<RecoveryResult> {
        self.check_frames(frames)?;
        if max_sweeps == 0 {
            return Err(SenseError::InvalidConfig(
                "max_sweeps must be at least 1".into(),
            ));
        }
        let mut cands = candidates.to_vec();
        cands.sort_unstable();
        cands.dedup();
        if cands.is_empty() {
            return Err(SenseError::InvalidConfig("no candidate offsets".into()));
        }

        let scanned: Vec<(RecoveryResult, f64)> = cands
            .par_iter()
            .map(|&d| {
                let res = self.recover_frames(frames, d)?;
                let obj = self.offset_objective(frames, d, &res.support_est)?;
                Ok((res, obj))
            })
            .collect::<Result<_>>()?;

        let (mut best_idx, mut best_obj) = (0, scanned[0].1);
        for (i, (_, obj)) in scanned.iter().enumerate().skip(1) {
            if *obj < best_obj {
                best_idx = i;
                best_obj = *obj;
            }
        }
        let mut best_d = cands[best_idx];
        let mut best = scanned.into_iter().nth(best_idx).expect("index in range").0;

        let mut current_d = best_d;
        let mut current_support = best.support_est.clone();
        let mut sweeps = 0;
        while sweeps < max_sweeps {
            sweeps += 1;
            let scores: Vec<f64> = cands
                .par_iter()
                .map(|&d| self.offset_objective(frames, d, &current_support))
                .collect::<Result<_>>()?;
            let mut next = 0;
            for i in 1..scores.len() {
                if scores[i] < scores[next] {
                    next = i;
                }
            }
            let next_d = cands[next];
            if next_d == current_d {
                break;
            }
            current_d = next_d;
            let res = self.recover_frames(frames, current_d)?;
            let obj = self.offset_objective(frames, current_d, &res.support_est)?;
            current_support = res.support_est.clone();
            if obj < best_obj {
                best_obj = obj;
                best_d = current_d;
                best = res;
            }
        }

        best.d_est = Some(best_d);
        best.iterations = sweeps;
        Ok(best)
    }
}

pub fn recover_known_offset(
    z: &CompressedStream,
    a: &MeasurementMatrix,
    d: usize,
    cfg: &OfdmConfig,
) -> Result<RecoveryResult> {
    Sensor::new(*cfg, a)?.recover_known_offset(z, d)
}

pub fn offset_objective(
    z: &CVec,
    d: usize,
    support: &SupportSet,
    a: &MeasurementMatrix,
    cfg: &OfdmConfig,
) -> Result<f64> {
    if z.len() != cfg.m * cfg.n_blocks {
        return Err(SenseError::DimensionMismatch(format!(
            "stacked measurement has length {}, expected {}",
            z.len(),
            cfg.m * cfg.n_blocks
        )));
    }
    let frames: Vec<CVec> = (0..cfg.n_blocks)
        .map(|n| z.rows(n * cfg.m, cfg.m).into_owned())
        .collect();
    Sensor::new(*cfg, a)?.offset_objective(&frames, d, support)
}

pub fn estimate_offset_and_support(
    z: &CompressedStream,
    a: &MeasurementMatrix,
    cfg: &OfdmConfig,
    max_sweeps: usize,
) -> Result<RecoveryResult> {
    Sensor::new(*cfg, a)?.estimate_offset_and_support(z, max_sweeps)
}

#[cfg(test)]
mod tests;
