//! Concrete target distributions: a Gaussian oracle with optional injected
//! gradient noise, Bayesian logistic regression with its Laplace reference,
//! a scaling-symmetric hyperboloid posterior and a separable multimodal toy.
//!
//! Targets are immutable after construction and safe to share across chains.

mod hyperboloid;
mod logistic;
mod multimodal;

pub use hyperboloid::HyperboloidTarget;
pub use logistic::{generate_logistic_data, LaplaceReference, LogisticRegressionTarget};
pub use multimodal::MultimodalTarget;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::core::{Minibatch, TargetModel};
use crate::linalg::dot;

#[derive(Debug, Error)]
pub enum TargetError {
    #[error("optimizer did not reach gradient norm {tolerance} after {iterations} iterations (at {achieved})")]
    NoConvergence {
        iterations: usize,
        tolerance: f64,
        achieved: f64,
    },
    #[error("invalid dataset: {0}")]
    InvalidData(String),
}

/// Diagonal Gaussian `N(mean, diag(variances))`, the closed-form oracle
/// target. Its directional derivative along a flight is exactly affine in
/// time, so bounce times can be simulated without thinning error.
///
/// `with_noise` turns it into the noise-resilience testbed: every gradient
/// evaluation is perturbed by fresh `N(0, sd^2 I)` noise, independent across
/// evaluations, while the exact flow stays available for the dominating
/// proposal intensity.
#[derive(Debug, Clone)]
pub struct GaussianTarget {
    mean: Vec<f64>,
    variances: Vec<f64>,
    noise_sd: f64,
}

impl GaussianTarget {
    pub fn new(mean: Vec<f64>, variances: Vec<f64>) -> Self {
        assert_eq!(mean.len(), variances.len());
        assert!(variances.iter().all(|v| *v > 0.0));
        GaussianTarget {
            mean,
            variances,
            noise_sd: 0.0,
        }
    }

    pub fn standard(dim: usize) -> Self {
        GaussianTarget::new(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn with_noise(mut self, noise_sd: f64) -> Self {
        assert!(noise_sd >= 0.0);
        self.noise_sd = noise_sd;
        self
    }

    pub fn marginal_variance(&self, coord: usize) -> f64 {
        self.variances[coord]
    }

    /// Exact marginal CDF of one coordinate.
    pub fn marginal_cdf(&self, coord: usize, x: f64) -> f64 {
        crate::analysis::normal_cdf((x - self.mean[coord]) / self.variances[coord].sqrt())
    }
}

impl TargetModel for GaussianTarget {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn data_len(&self) -> usize {
        1
    }

    fn sample_batch(&self, _n: usize, rng: &mut dyn RngCore) -> Minibatch {
        let noise = (self.noise_sd > 0.0).then(|| {
            (0..self.dim())
                .map(|_| self.noise_sd * rng.sample::<f64, _>(StandardNormal))
                .collect()
        });
        Minibatch {
            indices: Vec::new(),
            noise,
        }
    }

    fn batch_directional(&self, batch: &Minibatch, w: &[f64], v: &[f64]) -> (f64, f64) {
        let exact = dot(v, &self.full_gradient(w));
        match &batch.noise {
            Some(noise) => (
                exact + dot(v, noise),
                self.noise_sd * self.noise_sd * dot(v, v),
            ),
            None => (exact, 0.0),
        }
    }

    fn minibatch_gradient(&self, batch: &Minibatch, w: &[f64]) -> Vec<f64> {
        let mut g = self.full_gradient(w);
        if let Some(noise) = &batch.noise {
            for (gi, ni) in g.iter_mut().zip(noise) {
                *gi += ni;
            }
        }
        g
    }

    fn full_gradient(&self, w: &[f64]) -> Vec<f64> {
        w.iter()
            .zip(&self.mean)
            .zip(&self.variances)
            .map(|((wi, mi), vi)| (wi - mi) / vi)
            .collect()
    }

    fn exact_log_density(&self, w: &[f64]) -> Option<f64> {
        let lp = w
            .iter()
            .zip(&self.mean)
            .zip(&self.variances)
            .map(|((wi, mi), vi)| {
                -0.5 * ((wi - mi) * (wi - mi) / vi + (2.0 * std::f64::consts::PI * vi).ln())
            })
            .sum();
        Some(lp)
    }

    fn directional_affine(&self, w: &[f64], v: &[f64]) -> Option<(f64, f64)> {
        let a = v
            .iter()
            .zip(w)
            .zip(self.mean.iter().zip(&self.variances))
            .map(|((vi, wi), (mi, si))| vi * (wi - mi) / si)
            .sum();
        let b = v
            .iter()
            .zip(&self.variances)
            .map(|(vi, si)| vi * vi / si)
            .sum();
        Some((a, b))
    }

    fn injected_noise_sd(&self) -> f64 {
        self.noise_sd
    }
}

/// Shared helper: `n` indices sampled uniformly without replacement.
pub(crate) fn sample_indices(n_data: usize, n: usize, rng: &mut dyn RngCore) -> Vec<usize> {
    debug_assert!(n <= n_data);
    rand::seq::index::sample(rng, n_data, n).into_vec()
}

/// Numerically stable `log(1 + exp(z))`.
pub(crate) fn log1p_exp(z: f64) -> f64 {
    if z > 35.0 {
        z
    } else if z < -35.0 {
        z.exp()
    } else {
        z.exp().ln_1p()
    }
}

/// Logistic sigmoid `1 / (1 + exp(-z))`.
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
pub(crate) fn finite_difference_gradient(
    f: impl Fn(&[f64]) -> f64,
    w: &[f64],
    h: f64,
) -> Vec<f64> {
    let mut g = Vec::with_capacity(w.len());
    for i in 0..w.len() {
        let mut hi = w.to_vec();
        let mut lo = w.to_vec();
        hi[i] += h;
        lo[i] -= h;
        g.push((f(&hi) - f(&lo)) / (2.0 * h));
    }
    g
}
