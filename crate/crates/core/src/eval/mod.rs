//! Experiment harness: accuracy-vs-speed sweeps, event statistics, and the
//! HDR fan comparison.

pub mod hdr;
pub mod stats;
pub mod sweep;

use thiserror::Error;

pub use hdr::{hdr_comparison, HdrSpec, SectorReport};
pub use stats::{event_statistics, through_origin_fit, EventStats, IntervalHistogram, StatsParams};
pub use sweep::{
    dolp_error_growth, run_sweep, GrowthPoint, SweepPoint, SweepSpec, SweepStimulusKind,
};

use crate::polarization::PolError;
use crate::recon::ReconError;
use crate::sensor::SimError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Recon(#[from] ReconError),
    #[error(transparent)]
    Pol(#[from] PolError),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("unsorted input stream: {0}")]
    UnsortedInput(String),
}
