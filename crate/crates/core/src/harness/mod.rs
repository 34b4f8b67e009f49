//! Experiment plumbing: configuration, seeded trials, grid sweeps, CSV and
//! plot output, and the property suites run by `sense verify`.

pub mod config;
pub mod output;
pub mod sweep;
pub mod trial;
pub mod verify;

pub use config::{parse_snr, Cell, Mode, SweepConfig};
pub use output::{csv_string, emit_csv, emit_plot_script, parse_csv, plot_script, CSV_HEADER};
pub use sweep::{aggregate, ci95, run_sweep, trial_seed, MetricsRow};
pub use trial::{draw_trial, run_trial, InstanceDump, TrialDraw, TrialRecord};
pub use verify::{run_suite, PropertyOutcome, Suite};
