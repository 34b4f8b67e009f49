//! Compressive identification of active OFDM subcarriers from sub-Nyquist
//! measurements, with known or unknown symbol timing offset.
//!
//! - [`model`]: DFT/IDFT blocks, sensing matrix, per-offset block dictionary.
//! - [`siggen`]: sparse 16-QAM symbol streams, offset frames, noise, compression.
//! - [`recovery`]: joint OMP, projected SOMP, and the offset/support alternation.
//! - [`analysis`]: brute-force spark and rank checks of the recoverability theory.
//! - [`harness`]: seeded Monte Carlo sweeps, CSV/plot output, property suites.

pub mod analysis;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod recovery;
pub mod siggen;

pub use error::{Result, SenseError};
pub use model::{MeasurementMatrix, OfdmConfig, SupportSet};
