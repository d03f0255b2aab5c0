use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::{log1p_exp, sample_indices, sigmoid, TargetError};
use crate::core::{Minibatch, TargetModel};
use crate::linalg::{cholesky, chol_lt_solve, chol_solve, dot, norm};

/// Bayesian logistic regression posterior over `dim` weights given `N`
/// labelled covariate rows, with a weak zero-mean Gaussian prior on the
/// weights so that the potential is strictly convex and the MAP exists.
///
/// Potential: `U(w) = sum_i [log(1 + exp(w.x_i)) - y_i (w.x_i)] + |w|^2 / (2 prior_var)`.
#[derive(Debug, Clone)]
pub struct LogisticRegressionTarget {
    covariates: Vec<f64>, // N x dim, row-major
    labels: Vec<f64>,
    true_weights: Vec<f64>,
    prior_var: f64,
    dim: usize,
}

/// Synthetic dataset following the benchmark recipe: true weights uniform on
/// `[-5, 5]`, covariates zero-mean Gaussian with variance 6 in the first
/// component and 1 elsewhere, labels Bernoulli with logistic link.
pub fn generate_logistic_data(
    dim: usize,
    n_data: usize,
    rng: &mut dyn RngCore,
) -> LogisticRegressionTarget {
    assert!(dim >= 1 && n_data >= 1);
    let true_weights: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
    let mut covariates = Vec::with_capacity(n_data * dim);
    let mut labels = Vec::with_capacity(n_data);
    for _ in 0..n_data {
        let row_start = covariates.len();
        for j in 0..dim {
            let sd = if j == 0 { 6.0f64.sqrt() } else { 1.0 };
            covariates.push(sd * rng.sample::<f64, _>(StandardNormal));
        }
        let z = dot(&covariates[row_start..], &true_weights);
        let y = if rng.random::<f64>() < sigmoid(z) {
            1.0
        } else {
            0.0
        };
        labels.push(y);
    }
    LogisticRegressionTarget {
        covariates,
        labels,
        true_weights,
        prior_var: 1e4,
        dim,
    }
}

/// MAP estimate with the exact Hessian of the potential at it; the reference
/// for the per-data-point NLL band.
#[derive(Debug, Clone)]
pub struct LaplaceReference {
    pub map: Vec<f64>,
    /// Hessian of `U` at the MAP, row-major `dim x dim`.
    pub hessian: Vec<f64>,
    /// Likelihood-only negative log likelihood at the MAP.
    pub nll_at_map: f64,
    chol: Vec<f64>,
}

impl LaplaceReference {
    /// Draws from the Gaussian approximation `N(map, H^{-1})`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let dim = self.map.len();
        let z: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let shift = chol_lt_solve(&self.chol, &z, dim);
        self.map.iter().zip(&shift).map(|(m, s)| m + s).collect()
    }
}

impl LogisticRegressionTarget {
    /// Convenience constructor with a deterministic seed.
    pub fn generate(dim: usize, n_data: usize, seed: u64) -> Self {
        let mut rng = crate::core::RngStream::new(seed, 0).rng();
        generate_logistic_data(dim, n_data, &mut rng)
    }

    pub fn from_parts(
        covariates: Vec<f64>,
        labels: Vec<f64>,
        prior_var: f64,
    ) -> Result<Self, TargetError> {
        if labels.is_empty() || covariates.len() % labels.len() != 0 {
            return Err(TargetError::InvalidData(format!(
                "covariate length {} is not a multiple of label count {}",
                covariates.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|y| **y != 0.0 && **y != 1.0) {
            return Err(TargetError::InvalidData(format!(
                "label {bad} is not binary"
            )));
        }
        let dim = covariates.len() / labels.len();
        Ok(LogisticRegressionTarget {
            covariates,
            labels,
            true_weights: vec![0.0; dim],
            prior_var,
            dim,
        })
    }

    pub fn with_prior_var(mut self, prior_var: f64) -> Self {
        assert!(prior_var > 0.0);
        self.prior_var = prior_var;
        self
    }

    pub fn prior_var(&self) -> f64 {
        self.prior_var
    }

    pub fn true_weights(&self) -> &[f64] {
        &self.true_weights
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.covariates[i * self.dim..(i + 1) * self.dim]
    }

    /// Likelihood-only negative log likelihood.
    pub fn nll(&self, w: &[f64]) -> f64 {
        (0..self.labels.len())
            .map(|i| {
                let z = dot(self.row(i), w);
                log1p_exp(z) - self.labels[i] * z
            })
            .sum()
    }

    pub fn nll_per_datum(&self, w: &[f64]) -> f64 {
        self.nll(w) / self.labels.len() as f64
    }

    /// Negative log posterior up to a constant.
    pub fn potential(&self, w: &[f64]) -> f64 {
        self.nll(w) + 0.5 * dot(w, w) / self.prior_var
    }

    /// Exact Hessian of the potential.
    pub fn hessian(&self, w: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut h = vec![0.0; d * d];
        for i in 0..self.labels.len() {
            let x = self.row(i);
            let s = sigmoid(dot(x, w));
            let weight = s * (1.0 - s);
            for a in 0..d {
                let wa = weight * x[a];
                for b in a..d {
                    h[a * d + b] += wa * x[b];
                }
            }
        }
        for a in 0..d {
            h[a * d + a] += 1.0 / self.prior_var;
            for b in a + 1..d {
                h[b * d + a] = h[a * d + b];
            }
        }
        h
    }

    /// MAP by full-batch Newton iteration with backtracking line search,
    /// run to gradient norm below 1e-6, plus the exact Hessian there.
    /// Saturated sigmoids leave the potential too ill-conditioned for plain
    /// gradient descent to reach that tolerance; the Newton direction uses
    /// the same exact Hessian the Laplace reference needs anyway.
    pub fn laplace_reference(&self) -> Result<LaplaceReference, TargetError> {
        let tolerance = 1e-6;
        let max_iterations = 500;
        let mut w = vec![0.0; self.dim];
        let mut value = self.potential(&w);
        let mut grad_norm = f64::INFINITY;
        for _ in 0..max_iterations {
            let g = self.full_gradient(&w);
            grad_norm = norm(&g);
            let hessian = self.hessian(&w);
            let chol = cholesky(&hessian, self.dim).ok_or_else(|| {
                TargetError::InvalidData("Hessian is not positive definite".into())
            })?;
            if grad_norm < tolerance {
                return Ok(LaplaceReference {
                    nll_at_map: self.nll(&w),
                    map: w,
                    hessian,
                    chol,
                });
            }
            let direction = chol_solve(&chol, &g, self.dim);
            let slope = dot(&g, &direction);
            let mut step = 1.0;
            loop {
                let trial: Vec<f64> = w
                    .iter()
                    .zip(&direction)
                    .map(|(wi, di)| wi - step * di)
                    .collect();
                let trial_value = self.potential(&trial);
                if trial_value <= value - 0.25 * step * slope {
                    w = trial;
                    value = trial_value;
                    break;
                }
                step *= 0.5;
                if step < 1e-18 {
                    return Err(TargetError::NoConvergence {
                        iterations: max_iterations,
                        tolerance,
                        achieved: grad_norm,
                    });
                }
            }
        }
        Err(TargetError::NoConvergence {
            iterations: max_iterations,
            tolerance,
            achieved: grad_norm,
        })
    }

    /// Constant bound `sqrt(d) N max_ij |x_ij|` dominating the magnitude of
    /// the likelihood part of `v . grad U~` for every unit `v`, every
    /// position and every batch.
    pub fn covariate_bound(&self) -> f64 {
        let max_abs = self
            .covariates
            .iter()
            .fold(0.0f64, |acc, x| acc.max(x.abs()));
        (self.dim as f64).sqrt() * self.labels.len() as f64 * max_abs
    }

    /// Writes the dataset as a column CSV: header row, covariates
    /// `x_0..x_{d-1}` then the label `y`.
    pub fn write_dataset_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let header: Vec<String> = (0..self.dim)
            .map(|j| format!("x_{j}"))
            .chain(std::iter::once("y".to_string()))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.labels.len() {
            let mut fields: Vec<String> = self.row(i).iter().map(|x| format!("{x:.16e}")).collect();
            fields.push(format!("{}", self.labels[i] as u8));
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }

    /// Reads a dataset written by [`Self::write_dataset_csv`]. The true
    /// weights are unknown for data loaded this way and are set to zero.
    pub fn read_dataset_csv(path: &Path, prior_var: f64) -> Result<Self, TargetError> {
        let file = std::fs::File::open(path)
            .map_err(|e| TargetError::InvalidData(format!("{}: {e}", path.display())))?;
        let mut lines = std::io::BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| TargetError::InvalidData("empty dataset file".into()))?
            .map_err(|e| TargetError::InvalidData(e.to_string()))?;
        let dim = header.split(',').count() - 1;
        let mut covariates = Vec::new();
        let mut labels = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| TargetError::InvalidData(e.to_string()))?;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim + 1 {
                return Err(TargetError::InvalidData(format!(
                    "row {}: expected {} fields, found {}",
                    lineno + 2,
                    dim + 1,
                    fields.len()
                )));
            }
            for f in &fields[..dim] {
                covariates.push(f.parse::<f64>().map_err(|e| {
                    TargetError::InvalidData(format!("row {}: {e}", lineno + 2))
                })?);
            }
            labels.push(fields[dim].parse::<f64>().map_err(|e| {
                TargetError::InvalidData(format!("row {}: {e}", lineno + 2))
            })?);
        }
        LogisticRegressionTarget::from_parts(covariates, labels, prior_var)
    }
}

impl TargetModel for LogisticRegressionTarget {
    fn dim(&self) -> usize {
        self.dim
    }

    fn data_len(&self) -> usize {
        self.labels.len()
    }

    fn sample_batch(&self, n: usize, rng: &mut dyn RngCore) -> Minibatch {
        Minibatch::from_indices(sample_indices(self.labels.len(), n, rng))
    }

    fn batch_directional(&self, batch: &Minibatch, w: &[f64], v: &[f64]) -> (f64, f64) {
        let n = batch.indices.len();
        let n_data = self.labels.len();
        let per_point: Vec<f64> = batch
            .indices
            .iter()
            .map(|&i| {
                let x = self.row(i);
                dot(v, x) * (sigmoid(dot(x, w)) - self.labels[i])
            })
            .collect();
        let scale = n_data as f64 / n as f64;
        let prior_term = if self.prior_var.is_finite() {
            dot(v, w) / self.prior_var
        } else {
            0.0
        };
        let g_tilde = scale * per_point.iter().sum::<f64>() + prior_term;
        let variance = if n >= 2 {
            crate::thinning::minibatch_variance(&per_point, n_data)
                .expect("n >= 2 checked above")
        } else {
            0.0
        };
        (g_tilde, variance)
    }

    fn minibatch_gradient(&self, batch: &Minibatch, w: &[f64]) -> Vec<f64> {
        let scale = self.labels.len() as f64 / batch.indices.len() as f64;
        let mut g = vec![0.0; self.dim];
        for &i in &batch.indices {
            let x = self.row(i);
            let c = scale * (sigmoid(dot(x, w)) - self.labels[i]);
            crate::linalg::axpy(c, x, &mut g);
        }
        if self.prior_var.is_finite() {
            crate::linalg::axpy(1.0 / self.prior_var, w, &mut g);
        }
        g
    }

    fn full_gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for i in 0..self.labels.len() {
            let x = self.row(i);
            let c = sigmoid(dot(x, w)) - self.labels[i];
            crate::linalg::axpy(c, x, &mut g);
        }
        if self.prior_var.is_finite() {
            crate::linalg::axpy(1.0 / self.prior_var, w, &mut g);
        }
        g
    }

    /// Affine intensity dominating `[v . grad U~(w + v t)]_+` for unit `v`:
    /// the covariate bound plus the prior-gradient bound `(|w| + t) / prior_var`.
    fn directional_bound(&self, w: &[f64]) -> Option<(f64, f64)> {
        if self.prior_var.is_finite() {
            Some((
                self.covariate_bound() + norm(w) / self.prior_var,
                1.0 / self.prior_var,
            ))
        } else {
            Some((self.covariate_bound(), 0.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::RngStream;
    use crate::targets::finite_difference_gradient;

    fn small_target(seed: u64) -> LogisticRegressionTarget {
        LogisticRegressionTarget::generate(3, 40, seed)
    }

    #[test]
    fn dataset_recipe_moments() {
        let target = LogisticRegressionTarget::generate(20, 1000, 7);
        for j in 0..20 {
            let mean: f64 =
                (0..1000).map(|i| target.row(i)[j]).sum::<f64>() / 1000.0;
            let var: f64 = (0..1000)
                .map(|i| (target.row(i)[j] - mean).powi(2))
                .sum::<f64>()
                / 999.0;
            let expected = if j == 0 { 6.0 } else { 1.0 };
            assert!(
                (var - expected).abs() < 0.15 * expected,
                "component {j}: variance {var}, expected {expected}"
            );
        }
        assert!(target
            .true_weights()
            .iter()
            .all(|w| (-5.0..5.0).contains(w)));
    }

    #[test]
    fn labels_are_balanced_under_zero_weights() {
        let mut rng = RngStream::new(11, 0).rng();
        let mut target = generate_logistic_data(4, 2000, &mut rng);
        // force w_true = 0 and regenerate labels: p = 1/2 everywhere
        target.true_weights = vec![0.0; 4];
        let mut relabel_rng = RngStream::new(11, 1).rng();
        for y in &mut target.labels {
            *y = if relabel_rng.random::<f64>() < 0.5 {
                1.0
            } else {
                0.0
            };
        }
        let mean = target.labels.iter().sum::<f64>() / 2000.0;
        assert!((mean - 0.5).abs() < 0.05);
    }

    #[test]
    fn generation_replays_with_seed() {
        let a = LogisticRegressionTarget::generate(5, 100, 3);
        let b = LogisticRegressionTarget::generate(5, 100, 3);
        assert_eq!(a.covariates, b.covariates);
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.true_weights, b.true_weights);
    }

    #[test]
    fn single_point_gradient_at_zero() {
        let target =
            LogisticRegressionTarget::from_parts(vec![1.0, 0.0], vec![1.0], f64::INFINITY)
                .unwrap();
        let g = target.full_gradient(&[0.0, 0.0]);
        assert!((g[0] + 0.5).abs() < 1e-12);
        assert!(g[1].abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let target = small_target(5);
        let mut rng = RngStream::new(6, 0).rng();
        for _ in 0..20 {
            let w: Vec<f64> = (0..3)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let g = target.full_gradient(&w);
            let fd = finite_difference_gradient(|x| target.potential(x), &w, 1e-6);
            for (a, b) in g.iter().zip(&fd) {
                assert!(
                    ((a - b) / b.abs().max(1.0)).abs() < 1e-5,
                    "{a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn full_batch_directional_is_exact() {
        let target = small_target(5);
        let mut rng = RngStream::new(6, 1).rng();
        let w = vec![0.3, -0.2, 0.8];
        let v = vec![0.6, 0.0, 0.8];
        let ds = target.minibatch_directional(&w, &v, 40, &mut rng);
        assert_eq!(ds.variance, 0.0);
        let exact = dot(&v, &target.full_gradient(&w));
        assert!((ds.g_tilde - exact).abs() < 1e-9);
    }

    /// Exhaustive unbiasedness: the mean of the likelihood part of the
    /// directional estimator over all C(N, n) batches equals the full-data
    /// directional derivative of the likelihood.
    #[test]
    fn directional_estimator_is_unbiased_over_all_batches() {
        let target = LogisticRegressionTarget::generate(3, 10, 13).with_prior_var(f64::INFINITY);
        let w = vec![0.4, -0.1, 0.2];
        let v = vec![0.2, 0.7, -0.5];
        let n = 4;
        let n_data = 10;
        // enumerate all 210 subsets of size 4
        let mut total = 0.0;
        let mut count = 0usize;
        let mut idx = [0usize; 4];
        fn visit(
            start: usize,
            depth: usize,
            idx: &mut [usize; 4],
            n_data: usize,
            f: &mut impl FnMut(&[usize; 4]),
        ) {
            if depth == 4 {
                f(idx);
                return;
            }
            for i in start..n_data {
                idx[depth] = i;
                visit(i + 1, depth + 1, idx, n_data, f);
            }
        }
        visit(0, 0, &mut idx, n_data, &mut |subset| {
            let batch = Minibatch::from_indices(subset.to_vec());
            let (g, _) = target.batch_directional(&batch, &w, &v);
            total += g;
            count += 1;
        });
        assert_eq!(count, 210);
        let mean = total / count as f64;
        let exact = dot(&v, &target.full_gradient(&w));
        assert!((mean - exact).abs() < 1e-9, "{mean} vs {exact}");
        let _ = n;
    }

    #[test]
    fn laplace_reference_is_stationary_and_positive_definite() {
        let target = LogisticRegressionTarget::generate(5, 300, 21);
        let laplace = target.laplace_reference().unwrap();
        let g = target.full_gradient(&laplace.map);
        assert!(norm(&g) < 1e-6);
        // Cholesky succeeded inside laplace_reference; spot-check optimality
        let mut rng = RngStream::new(22, 0).rng();
        let base = target.potential(&laplace.map);
        for _ in 0..100 {
            let perturbed: Vec<f64> = laplace
                .map
                .iter()
                .map(|m| m + 0.1 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            assert!(target.potential(&perturbed) >= base);
        }
    }

    #[test]
    fn covariate_bound_dominates_all_single_point_batches() {
        let target =
            LogisticRegressionTarget::from_parts(vec![1.0, -2.0], vec![1.0, 0.0], f64::INFINITY)
                .unwrap();
        assert!((target.covariate_bound() - 4.0).abs() < 1e-12);
        // every n=1 batch, several positions and directions
        let mut rng = RngStream::new(2, 0).rng();
        for _ in 0..200 {
            let w = [rng.random_range(-3.0..3.0)];
            let v = [if rng.random::<bool>() { 1.0 } else { -1.0 }];
            for i in 0..2 {
                let batch = Minibatch::from_indices(vec![i]);
                let (g, _) = target.batch_directional(&batch, &w, &v);
                assert!(g.abs() <= 4.0 + 1e-12);
            }
        }
    }

    #[test]
    fn dataset_csv_round_trips(
    ) {
        let target = LogisticRegressionTarget::generate(3, 25, 9);
        let dir = std::env::temp_dir().join("sbps_dataset_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("data.csv");
        target.write_dataset_csv(&path).unwrap();
        let loaded = LogisticRegressionTarget::read_dataset_csv(&path, target.prior_var()).unwrap();
        assert_eq!(loaded.covariates, target.covariates);
        assert_eq!(loaded.labels, target.labels);
        std::fs::remove_dir_all(&dir).ok();
    }
}
