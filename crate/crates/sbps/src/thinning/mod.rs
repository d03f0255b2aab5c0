//! Adaptive thinning machinery: Bayesian linear regression over noisy
//! directional derivatives, the predictive upper band it induces, and exact
//! first-arrival sampling from piecewise-linear Poisson intensities.
//!
//! The sampler observes noisy values of the directional derivative `G~(t)`
//! along the current flight, fits a conjugate linear model `G~ = b1 t + b0`
//! weighted by each observation's estimated noise variance, and proposes
//! bounce times from the intensity `[mean(t) + k rho(t)]_+`, where `rho` is
//! the predictive standard deviation and `k` the confidence-band multiple
//! that trades bias for proposal efficiency.

mod envelope;
mod regression;

pub use envelope::{
    affine_first_arrival, build_envelope, sample_first_arrival, Envelope, FirstArrival,
    HazardInversion, PiecewiseLinearRate,
};
pub use regression::{
    accept_bounce, auxiliary_times, minibatch_variance, GradObservation, RegressionPrior,
    RegressionState, C2_FLOOR,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ThinningError {
    /// Mini-batch variance needs at least two points.
    #[error("mini-batch of {0} points cannot estimate a variance; use n >= 2")]
    DegenerateBatch(usize),
    /// The weighted design matrix could not be inverted.
    #[error("regression system is numerically singular")]
    SingularSystem,
    /// Malformed piecewise-linear rate.
    #[error("invalid piecewise-linear rate: {0}")]
    InvalidRate(String),
}
