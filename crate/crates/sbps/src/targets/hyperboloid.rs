use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::sample_indices;
use crate::core::{Minibatch, TargetModel};
use crate::linalg::dot;

/// Two-dimensional hyperboloid posterior: data `y_i ~ N(w0* w1*, sigma)` and
/// log posterior
///
/// `L(w) = sum_i -(y_i - w0 w1)^2 / (2 sigma^2) - (ridge/2) |w|^2`.
///
/// The likelihood is invariant under `(w0, w1) -> (c w0, w1 / c)`, which
/// makes the posterior highly non-log-concave; only the weak ridge prior
/// breaks the symmetry.
#[derive(Debug, Clone)]
pub struct HyperboloidTarget {
    y: Vec<f64>,
    sigma: f64,
    ridge: f64,
}

impl HyperboloidTarget {
    pub fn new(y: Vec<f64>, sigma: f64, ridge: f64) -> Self {
        assert!(sigma > 0.0 && ridge >= 0.0 && !y.is_empty());
        HyperboloidTarget { y, sigma, ridge }
    }

    /// Data generated at the reference values `w0* = w1* = 0`, `sigma = 1`,
    /// with the weak ridge `1e-4`.
    pub fn generate(n_data: usize, rng: &mut dyn RngCore) -> Self {
        let sigma = 1.0;
        let y = (0..n_data)
            .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        HyperboloidTarget::new(y, sigma, 1e-4)
    }

    /// Per-point log-likelihood term.
    pub fn point_log_likelihood(&self, i: usize, w: &[f64]) -> f64 {
        let r = self.y[i] - w[0] * w[1];
        -r * r / (2.0 * self.sigma * self.sigma)
    }

    /// Gradient of the per-point negative log-likelihood term.
    pub fn point_grad(&self, i: usize, w: &[f64]) -> [f64; 2] {
        let c = -(self.y[i] - w[0] * w[1]) / (self.sigma * self.sigma);
        [c * w[1], c * w[0]]
    }

    /// Negative log posterior up to a constant.
    pub fn potential(&self, w: &[f64]) -> f64 {
        let like: f64 = (0..self.y.len())
            .map(|i| -self.point_log_likelihood(i, w))
            .sum();
        like + 0.5 * self.ridge * dot(w, w)
    }
}

impl TargetModel for HyperboloidTarget {
    fn dim(&self) -> usize {
        2
    }

    fn data_len(&self) -> usize {
        self.y.len()
    }

    fn sample_batch(&self, n: usize, rng: &mut dyn RngCore) -> Minibatch {
        Minibatch::from_indices(sample_indices(self.y.len(), n, rng))
    }

    fn batch_directional(&self, batch: &Minibatch, w: &[f64], v: &[f64]) -> (f64, f64) {
        let n = batch.indices.len();
        let per_point: Vec<f64> = batch
            .indices
            .iter()
            .map(|&i| {
                let g = self.point_grad(i, w);
                v[0] * g[0] + v[1] * g[1]
            })
            .collect();
        let scale = self.y.len() as f64 / n as f64;
        let g_tilde = scale * per_point.iter().sum::<f64>() + self.ridge * dot(v, w);
        let variance = if n >= 2 {
            crate::thinning::minibatch_variance(&per_point, self.y.len())
                .expect("n >= 2 checked above")
        } else {
            0.0
        };
        (g_tilde, variance)
    }

    fn minibatch_gradient(&self, batch: &Minibatch, w: &[f64]) -> Vec<f64> {
        let scale = self.y.len() as f64 / batch.indices.len() as f64;
        let mut g = [0.0f64; 2];
        for &i in &batch.indices {
            let p = self.point_grad(i, w);
            g[0] += p[0];
            g[1] += p[1];
        }
        vec![
            scale * g[0] + self.ridge * w[0],
            scale * g[1] + self.ridge * w[1],
        ]
    }

    fn full_gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut g = [0.0f64; 2];
        for i in 0..self.y.len() {
            let p = self.point_grad(i, w);
            g[0] += p[0];
            g[1] += p[1];
        }
        vec![g[0] + self.ridge * w[0], g[1] + self.ridge * w[1]]
    }
}
