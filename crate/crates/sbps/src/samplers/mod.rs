//! Sampler event loops: the exact bouncy particle sampler, its stochastic
//! mini-batch variant with adaptive regression-based thinning (optionally
//! preconditioned), the exact-bound mini-batch variant for logistic
//! regression, and the discrete-time baselines.

mod baselines;
mod bps;
mod lipsbps;
mod precond;
mod sbps;

pub use baselines::{run_msgnht, run_sgld, BaselineConfig, ChainRun};
pub use bps::{run_bps, BpsConfig};
pub use lipsbps::run_lipsbps;
pub use precond::PreconditionerState;
pub use sbps::{run_psbps, run_sbps, SbpsConfig};

use serde::Serialize;
use thiserror::Error;

use crate::core::TrajectorySegment;

/// Stream ids carved out of the run seed: velocity draws, mini-batch
/// indices/noise, and event clocks (arrival exponentials, acceptance
/// uniforms) are independently seedable.
pub(crate) const STREAM_VELOCITY: u64 = 0;
pub(crate) const STREAM_BATCH: u64 = 1;
pub(crate) const STREAM_EVENT: u64 = 2;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("target provides neither an exactly simulable intensity nor a thinning bound")]
    MissingBound,
    #[error("exact thinning bound violated: observed {g_tilde} above bound {bound} (implementation bug)")]
    BoundViolation { g_tilde: f64, bound: f64 },
    #[error("proposal envelope accumulated no hazard out to horizon {horizon}; target may be degenerate")]
    EnvelopeStalled { horizon: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Event and cost accounting for one run.
///
/// Epochs are data-point gradient evaluations divided by `N`: every
/// evaluation of a batch of `n` points at a new position costs `n`,
/// regardless of whether the directional projection or the full vector is
/// formed; reuse of the same batch at the same position is free.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RunSummary {
    pub bounces: u64,
    pub proposals: u64,
    pub violations: u64,
    pub refreshes: u64,
    pub aux_observations: u64,
    pub data_evals: u64,
    pub epochs: f64,
    pub total_time: f64,
}

impl RunSummary {
    pub fn violation_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.violations as f64 / self.proposals as f64
        }
    }
}

/// A continuous-trajectory run: the recorded flights plus accounting.
#[derive(Debug, Clone)]
pub struct Run {
    pub segments: Vec<TrajectorySegment>,
    pub summary: RunSummary,
}

impl Run {
    /// Endpoint consistency: each segment must land on the next segment's
    /// start. Used by tests and the trajectory reader.
    pub fn check_contiguity(&self, tol: f64) -> bool {
        self.segments.windows(2).all(|pair| {
            pair[0]
                .end()
                .iter()
                .zip(&pair[1].start)
                .all(|(a, b)| (a - b).abs() <= tol)
        })
    }
}
