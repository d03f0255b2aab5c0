//! Piecewise-deterministic Monte Carlo for big-data posteriors: a bouncy
//! particle sampler whose bounce times are simulated exactly where the
//! target allows it, and a stochastic mini-batch variant (SBPS) that
//! proposes bounce times from an adaptive regression-based thinning
//! envelope, trading a small, measured amount of bias for orders of
//! magnitude fewer data evaluations per bounce.
//!
//! The crate also ships a diagonally preconditioned variant, an
//! exact-bound mini-batch sampler for logistic regression, SGLD and mSGNHT
//! baselines, benchmark targets, and estimators/diagnostics for continuous
//! trajectories.
//!
//! ## Quick start
//!
//! ```
//! use sbps::samplers::{run_sbps, SbpsConfig};
//! use sbps::targets::LogisticRegressionTarget;
//!
//! let target = LogisticRegressionTarget::generate(5, 200, 7);
//! let config = SbpsConfig {
//!     batch_size: 20,
//!     total_epochs: 10.0,
//!     seed: 1,
//!     ..SbpsConfig::default()
//! };
//! let run = run_sbps(&target, &config).unwrap();
//! println!(
//!     "{} bounces over {:.1} epochs, violation rate {:.4}",
//!     run.summary.bounces,
//!     run.summary.epochs,
//!     run.summary.violation_rate()
//! );
//! ```
//!
//! The trajectory is a sequence of linear flights; expectations can be taken
//! over the continuous path rather than discrete samples:
//!
//! ```
//! # use sbps::samplers::{run_sbps, SbpsConfig};
//! # use sbps::targets::GaussianTarget;
//! use sbps::analysis::continuous_expectation;
//!
//! let target = GaussianTarget::standard(2);
//! let config = SbpsConfig {
//!     batch_size: 1,
//!     total_epochs: 2000.0,
//!     hyper_lr: 0.0,
//!     ..SbpsConfig::default()
//! };
//! let run = run_sbps(&target, &config).unwrap();
//! let mean = continuous_expectation(&run.segments, |w| w[0], 1e-8).unwrap();
//! assert!(mean.value.abs() < 0.5);
//! ```
//!
//! See the `examples/` directory for one runnable example per capability:
//! noise resilience of the exact sampler, the logistic-regression benchmark
//! against baselines, preconditioning, continuous-trajectory estimators,
//! hyperparameter scans, and the multimodal auxiliary-observation mechanism.
//! The `sbps` binary wraps the same machinery behind `run`, `scan` and
//! `diag` subcommands.

pub mod analysis;
pub mod cli;
pub mod core;
pub mod linalg;
pub mod samplers;
pub mod targets;
pub mod thinning;
