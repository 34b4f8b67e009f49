//! A single seeded Monte Carlo trial.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::Mode;
use crate::error::{Result, SenseError};
use crate::model::{
    extended_idft, sample_measurement_matrix, MeasurementMatrix, OfdmConfig, SupportSet,
};
use crate::recovery::Sensor;
use crate::siggen::{generate_instance, Instance};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub seed: u64,
    pub true_d: usize,
    pub d_est: usize,
    pub true_support: SupportSet,
    pub support_est: SupportSet,
    /// `|true ∩ estimated|`.
    pub hits: usize,
    pub offset_exact: bool,
}

impl TrialRecord {
    pub const CSV_HEADER: &'static str =
        "seed,true_d,d_est,true_support,support_est,hits,offset_exact";
}

/// One CSV line matching [`TrialRecord::CSV_HEADER`]. Supports are 1-based
/// and space separated.
impl fmt::Display for TrialRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{}",
            self.seed,
            self.true_d,
            self.d_est,
            self.true_support,
            self.support_est,
            self.hits,
            self.offset_exact
        )
    }
}

/// Everything a trial draws, in draw order: `A`, then `d`, then the
/// instance (support, symbols, noise).
pub struct TrialDraw {
    pub a: MeasurementMatrix,
    pub instance: Instance,
}

pub fn draw_trial(cfg: &OfdmConfig, snr_db: f64, trial_seed: u64) -> Result<TrialDraw> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    let a = sample_measurement_matrix(cfg, &mut rng);
    let d = rng.random_range(0..cfg.n_total);
    let instance = generate_instance(cfg, &extended_idft(cfg), &a, d, snr_db, &mut rng)?;
    Ok(TrialDraw { a, instance })
}

/// Fully determined by its arguments. Errors carry the trial seed.
pub fn run_trial(
    cfg: &OfdmConfig,
    snr_db: f64,
    mode: Mode,
    trial_seed: u64,
    max_sweeps: usize,
) -> Result<TrialRecord> {
    run_inner(cfg, snr_db, mode, trial_seed, max_sweeps).map_err(|e| SenseError::Trial {
        seed: trial_seed,
        source: Box::new(e),
    })
}

fn run_inner(
    cfg: &OfdmConfig,
    snr_db: f64,
    mode: Mode,
    trial_seed: u64,
    max_sweeps: usize,
) -> Result<TrialRecord> {
    let draw = draw_trial(cfg, snr_db, trial_seed)?;
    let z = &draw.instance.compressed;
    let sensor = Sensor::new(*cfg, &draw.a)?;
    let (d_est, support_est) = match mode {
        Mode::KnownOffset => (
            z.true_d,
            sensor.recover_known_offset(z, z.true_d)?.support_est,
        ),
        Mode::UnknownOffset => {
            let res = sensor.estimate_offset_and_support(z, max_sweeps)?;
            (
                res.d_est.expect("offset search sets d_est"),
                res.support_est,
            )
        }
    };
    Ok(TrialRecord {
        seed: trial_seed,
        true_d: z.true_d,
        d_est,
        hits: z.true_support.intersection_count(&support_est),
        offset_exact: d_est == z.true_d,
        true_support: z.true_support.clone(),
        support_est,
    })
}

/// Self-describing dump of one trial's inputs, for regression against
/// other implementations. Complex values are `[re, im]` pairs; `a` is
/// row-major.
#[derive(Debug, Serialize)]
pub struct InstanceDump {
    pub n_sub: usize,
    pub n_cp: usize,
    pub k: usize,
    pub m: usize,
    pub n_blocks: usize,
    pub snr_db: Option<f64>,
    pub seed: u64,
    pub true_d: usize,
    /// 1-based.
    pub true_support: Vec<usize>,
    pub a: Vec<Vec<f64>>,
    pub z: Vec<[f64; 2]>,
}

impl InstanceDump {
    pub fn new(cfg: &OfdmConfig, snr_db: f64, seed: u64, draw: &TrialDraw) -> Self {
        let z = &draw.instance.compressed;
        Self {
            n_sub: cfg.n_sub,
            n_cp: cfg.n_cp,
            k: cfg.k,
            m: cfg.m,
            n_blocks: cfg.n_blocks,
            snr_db: snr_db.is_finite().then_some(snr_db),
            seed,
            true_d: z.true_d,
            true_support: z.true_support.one_based(),
            a: draw
                .a
                .a
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            z: z.stacked.iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dump serializes")
    }
}
