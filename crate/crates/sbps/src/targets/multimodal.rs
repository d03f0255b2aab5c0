use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::sample_indices;
use crate::core::{Minibatch, TargetModel};

/// Separable multimodal toy target. Each data point contributes, per
/// coordinate, the log of a two-Gaussian mixture with modes near `+1` and
/// `-1` whose centers are jittered by `N(0, sigma_mu)` offsets:
///
/// `L_i(w_k) = log[ exp(-(w_k - 1 - mu_i_k)^2 / (2 s^2)) + exp(-(w_k + 1 - mu_i_{D+k})^2 / (2 s^2)) ]`
///
/// The potential is `-sum_i sum_k L_i(w_k)`, so the joint density factorizes
/// over coordinates and each marginal has two sharply separated modes.
#[derive(Debug, Clone)]
pub struct MultimodalTarget {
    /// `N x 2 dim` mode-center offsets.
    offsets: Vec<f64>,
    dim: usize,
    sigma_l: f64,
}

impl MultimodalTarget {
    pub fn generate(
        dim: usize,
        n_data: usize,
        sigma_l: f64,
        sigma_mu: f64,
        rng: &mut dyn RngCore,
    ) -> Self {
        assert!(dim >= 1 && n_data >= 1 && sigma_l > 0.0 && sigma_mu >= 0.0);
        let offsets = (0..n_data * 2 * dim)
            .map(|_| sigma_mu * rng.sample::<f64, _>(StandardNormal))
            .collect();
        MultimodalTarget {
            offsets,
            dim,
            sigma_l,
        }
    }

    fn offset(&self, i: usize, slot: usize) -> f64 {
        self.offsets[i * 2 * self.dim + slot]
    }

    /// Log of the per-point, per-coordinate mixture term, stabilized.
    pub fn point_coord_log_term(&self, i: usize, coord: usize, x: f64) -> f64 {
        let s2 = self.sigma_l * self.sigma_l;
        let e1 = -(x - 1.0 - self.offset(i, coord)).powi(2) / (2.0 * s2);
        let e2 = -(x + 1.0 - self.offset(i, coord + self.dim)).powi(2) / (2.0 * s2);
        let m = e1.max(e2);
        m + ((e1 - m).exp() + (e2 - m).exp()).ln()
    }

    /// Derivative of the negative per-point term with respect to `x`,
    /// computed with softmax weights for stability.
    pub fn point_coord_grad(&self, i: usize, coord: usize, x: f64) -> f64 {
        let s2 = self.sigma_l * self.sigma_l;
        let d1 = x - 1.0 - self.offset(i, coord);
        let d2 = x + 1.0 - self.offset(i, coord + self.dim);
        let e1 = -d1 * d1 / (2.0 * s2);
        let e2 = -d2 * d2 / (2.0 * s2);
        let m = e1.max(e2);
        let p1 = (e1 - m).exp();
        let p2 = (e2 - m).exp();
        let z = p1 + p2;
        (p1 / z * d1 + p2 / z * d2) / s2
    }

    /// Negative log density up to a constant.
    pub fn potential(&self, w: &[f64]) -> f64 {
        let mut u = 0.0;
        for i in 0..self.data_len() {
            for (k, x) in w.iter().enumerate() {
                u -= self.point_coord_log_term(i, k, *x);
            }
        }
        u
    }

    /// Unnormalized marginal log density of one coordinate (the target
    /// factorizes over coordinates).
    pub fn coordinate_log_density(&self, coord: usize, x: f64) -> f64 {
        (0..self.data_len())
            .map(|i| self.point_coord_log_term(i, coord, x))
            .sum()
    }

    /// Probability mass of the negative-side mode of one coordinate, by
    /// stabilized quadrature of the exact marginal on a fine grid over
    /// `[-lo, hi]`.
    pub fn negative_mode_mass(&self, coord: usize, grid: usize) -> f64 {
        let (lo, hi) = (-2.5, 2.5);
        let step = (hi - lo) / grid as f64;
        let log_values: Vec<f64> = (0..grid)
            .map(|j| {
                let x = lo + (j as f64 + 0.5) * step;
                self.coordinate_log_density(coord, x)
            })
            .collect();
        let max = log_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut below = 0.0;
        let mut total = 0.0;
        for (j, lv) in log_values.iter().enumerate() {
            let x = lo + (j as f64 + 0.5) * step;
            let p = (lv - max).exp();
            total += p;
            if x < 0.0 {
                below += p;
            }
        }
        below / total
    }
}

impl TargetModel for MultimodalTarget {
    fn dim(&self) -> usize {
        self.dim
    }

    fn data_len(&self) -> usize {
        self.offsets.len() / (2 * self.dim)
    }

    fn sample_batch(&self, n: usize, rng: &mut dyn RngCore) -> Minibatch {
        Minibatch::from_indices(sample_indices(self.data_len(), n, rng))
    }

    fn batch_directional(&self, batch: &Minibatch, w: &[f64], v: &[f64]) -> (f64, f64) {
        let n = batch.indices.len();
        let per_point: Vec<f64> = batch
            .indices
            .iter()
            .map(|&i| {
                (0..self.dim)
                    .map(|k| v[k] * self.point_coord_grad(i, k, w[k]))
                    .sum()
            })
            .collect();
        let scale = self.data_len() as f64 / n as f64;
        let g_tilde = scale * per_point.iter().sum::<f64>();
        let variance = if n >= 2 {
            crate::thinning::minibatch_variance(&per_point, self.data_len())
                .expect("n >= 2 checked above")
        } else {
            0.0
        };
        (g_tilde, variance)
    }

    fn minibatch_gradient(&self, batch: &Minibatch, w: &[f64]) -> Vec<f64> {
        let scale = self.data_len() as f64 / batch.indices.len() as f64;
        (0..self.dim)
            .map(|k| {
                scale
                    * batch
                        .indices
                        .iter()
                        .map(|&i| self.point_coord_grad(i, k, w[k]))
                        .sum::<f64>()
            })
            .collect()
    }

    fn full_gradient(&self, w: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|k| {
                (0..self.data_len())
                    .map(|i| self.point_coord_grad(i, k, w[k]))
                    .sum()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::RngStream;
    use crate::linalg::dot;
    use crate::targets::finite_difference_gradient;

    #[test]
    fn density_is_symmetric_without_offsets() {
        let mut rng = RngStream::new(41, 0).rng();
        let target = MultimodalTarget::generate(2, 20, 0.25, 0.0, &mut rng);
        for x in [0.1, 0.5, 1.0, 1.7] {
            let w = [x, -0.3];
            let m = [-x, -0.3];
            assert!(
                (target.coordinate_log_density(0, x)
                    - target.coordinate_log_density(0, -x))
                .abs()
                    < 1e-9
            );
            // joint potential symmetric coordinate-wise
            assert!((target.potential(&w) - target.potential(&m)).abs() < 1e-9);
        }
        // equal mode masses by symmetry
        let mass = target.negative_mode_mass(0, 20_000);
        assert!((mass - 0.5).abs() < 1e-9);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = RngStream::new(42, 0).rng();
        let target = MultimodalTarget::generate(2, 15, 0.25, 0.01, &mut rng);
        for _ in 0..20 {
            let w = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
            let g = target.full_gradient(&w);
            let fd = finite_difference_gradient(|x| target.potential(x), &w, 1e-6);
            for (a, b) in g.iter().zip(&fd) {
                assert!(
                    ((a - b) / b.abs().max(1.0)).abs() < 1e-5,
                    "{a} vs {b} at {w:?}"
                );
            }
        }
    }

    /// Two independent quadratures of the same marginal agree tightly.
    #[test]
    fn mode_mass_quadrature_is_grid_stable() {
        let mut rng = RngStream::new(43, 0).rng();
        let target = MultimodalTarget::generate(1, 50, 0.25, 0.01, &mut rng);
        let coarse = target.negative_mode_mass(0, 40_000);
        let fine = target.negative_mode_mass(0, 160_000);
        assert!((coarse - fine).abs() < 1e-6, "{coarse} vs {fine}");
    }

    #[test]
    fn minibatch_consistency() {
        let mut rng = RngStream::new(44, 0).rng();
        let target = MultimodalTarget::generate(2, 30, 0.25, 0.01, &mut rng);
        let w = [0.9, -1.1];
        let v = [0.8, 0.6];
        let ds = target.minibatch_directional(&w, &v, 10, &mut rng);
        let g = target.minibatch_gradient(&ds.batch, &w);
        assert!((dot(&v, &g) - ds.g_tilde).abs() < 1e-9);
        let full = target.minibatch_directional(&w, &v, 30, &mut rng);
        assert_eq!(full.variance, 0.0);
    }
}
