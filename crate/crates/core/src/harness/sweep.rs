//! Grid sweeps and metric aggregation.

use rayon::prelude::*;

use super::config::{Cell, SweepConfig};
use super::trial::{run_trial, TrialRecord};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub snr_db: f64,
    pub k: usize,
    pub n_blocks: usize,
    pub m: usize,
    pub trials: usize,
    pub p_offset: f64,
    pub ci95_offset: f64,
    pub p_active: f64,
    pub ci95_active: f64,
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for trial `trial` of cell `cell`. A pure function of its inputs,
/// so scheduling cannot change which randomness a trial sees.
pub fn trial_seed(seed: u64, cell: usize, trial: usize) -> u64 {
    mix(mix(mix(seed) ^ cell as u64) ^ trial as u64)
}

/// Normal-approximation 95% half-width for a proportion over `n` trials.
pub fn ci95(p: f64, n: usize) -> f64 {
    1.96 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Folds records in the order given.
pub fn aggregate(cell: &Cell, records: &[TrialRecord]) -> MetricsRow {
    let n = records.len();
    let exact = records.iter().filter(|r| r.offset_exact).count();
    let hits: usize = records.iter().map(|r| r.hits).sum();
    let p_offset = exact as f64 / n as f64;
    let p_active = hits as f64 / (cell.cfg.k * n) as f64;
    MetricsRow {
        snr_db: cell.snr_db,
        k: cell.cfg.k,
        n_blocks: cell.cfg.n_blocks,
        m: cell.cfg.m,
        trials: n,
        p_offset,
        ci95_offset: ci95(p_offset, n),
        p_active,
        ci95_active: ci95(p_active, n),
    }
}

/// Rows ordered by `(k, n_blocks, m, snr)`.
pub fn sort_rows(rows: &mut [MetricsRow]) {
    rows.sort_by(|a, b| {
        (a.k, a.n_blocks, a.m)
            .cmp(&(b.k, b.n_blocks, b.m))
            .then(a.snr_db.total_cmp(&b.snr_db))
    });
}

/// Runs every trial of every cell. Trials run in parallel on the current
/// rayon pool; records are collected by index so the output does not
/// depend on the worker count.
pub fn run_sweep(sc: &SweepConfig) -> Result<Vec<MetricsRow>> {
    let cells = sc.cells()?;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..sc.trials).map(move |t| (c, t)))
        .collect();
    let records: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(c, t)| {
            let cell = &cells[c];
            run_trial(
                &cell.cfg,
                cell.snr_db,
                sc.mode,
                trial_seed(sc.seed, c, t),
                sc.max_sweeps,
            )
        })
        .collect::<Result<_>>()?;

    let mut rows: Vec<MetricsRow> = cells
        .iter()
        .zip(records.chunks(sc.trials))
        .map(|(cell, recs)| aggregate(cell, recs))
        .collect();
    sort_rows(&mut rows);
    Ok(rows)
}
