/// Adaptive diagonal preconditioner driven by a second-moment accumulator
/// over observed mini-batch gradients.
///
/// At each gradient observation `g` the accumulator updates as
/// `a_i <- decay * g_i^2 + (1 - decay) * a_i`, and the preconditioner is
/// `A = Diag(a_tilde / (sqrt(a_i) + eps))` with
/// `a_tilde = (1/d) sum_i 1 / (sqrt(a_i) + eps)`. The `a_tilde` factor keeps
/// the overall scale of preconditioned directional derivatives unchanged:
/// rescaling the whole gradient history cancels out of `A`.
#[derive(Debug, Clone)]
pub struct PreconditionerState {
    second_moment: Vec<f64>,
    decay: f64,
    eps: f64,
}

impl PreconditionerState {
    pub fn new(dim: usize, decay: f64, eps: f64) -> Self {
        assert!((0.0..=1.0).contains(&decay) && eps >= 0.0);
        PreconditionerState {
            second_moment: vec![0.0; dim],
            decay,
            eps,
        }
    }

    pub fn update(&mut self, grad: &[f64]) {
        debug_assert_eq!(grad.len(), self.second_moment.len());
        for (a, g) in self.second_moment.iter_mut().zip(grad) {
            *a = self.decay * g * g + (1.0 - self.decay) * *a;
        }
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    /// `a_tilde = (1/d) sum_i 1 / (sqrt(a_i) + eps)`.
    pub fn scale(&self) -> f64 {
        self.second_moment
            .iter()
            .map(|a| 1.0 / (a.sqrt() + self.eps))
            .sum::<f64>()
            / self.second_moment.len() as f64
    }

    /// Diagonal of the preconditioner `A`.
    pub fn diag(&self) -> Vec<f64> {
        let scale = self.scale();
        self.second_moment
            .iter()
            .map(|a| scale / (a.sqrt() + self.eps))
            .collect()
    }

    /// Component-wise product `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.diag().iter().zip(x).map(|(a, xi)| a * xi).collect()
    }

    /// Diagonal rescaled to unit geometric mean. The global scale of the
    /// preconditioner is a free constant that only relabels trajectory time;
    /// pinning it keeps grid spacings, refresh rates and horizon scales
    /// meaningful while preserving the anisotropy that matters.
    pub fn unit_scale_diag(&self) -> Vec<f64> {
        let d = self.diag();
        let log_mean = d.iter().map(|a| a.ln()).sum::<f64>() / d.len() as f64;
        let scale = (-log_mean).exp();
        d.into_iter().map(|a| a * scale).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_gradients_are_direction_neutral() {
        // equal component magnitudes leave no direction favored: the
        // preconditioner is a multiple of the identity (its global scale
        // only relabels time along the trajectory)
        let mut p = PreconditionerState::new(3, 0.5, 0.0);
        p.update(&[2.0, -2.0, 2.0]);
        p.update(&[-2.0, 2.0, 2.0]);
        let d = p.diag();
        for a in &d {
            assert!((a - d[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn single_full_weight_update_from_zero() {
        let mut p = PreconditionerState::new(2, 1.0, 0.0);
        p.update(&[1.0, 2.0]);
        let d = p.diag();
        assert!((d[0] - 0.75).abs() < 1e-12);
        assert!((d[1] - 0.375).abs() < 1e-12);
    }

    #[test]
    fn global_gradient_scale_preserves_geometry() {
        // rescaling the whole gradient history rescales the preconditioner
        // uniformly: relative components are unchanged, so flights follow
        // the same paths with relabeled time
        let mut a = PreconditionerState::new(3, 0.9, 0.0);
        let mut b = PreconditionerState::new(3, 0.9, 0.0);
        let history = [[1.0, 0.5, -0.2], [0.3, -2.0, 0.9], [1.4, 0.1, 0.7]];
        for g in &history {
            a.update(g);
            let scaled: Vec<f64> = g.iter().map(|x| 7.0 * x).collect();
            b.update(&scaled);
        }
        let (da, db) = (a.diag(), b.diag());
        for i in 1..3 {
            assert!((da[i] / da[0] - db[i] / db[0]).abs() < 1e-12);
        }
        // the preconditioned directional derivative is invariant: A picks up
        // 1/c^2 while the current gradient contributes c
        let v = [0.6, -0.8, 0.0];
        let g = [1.4, 0.1, 0.7];
        let g_scaled: Vec<f64> = g.iter().map(|x| 7.0 * x).collect();
        let ga: f64 = a.apply(&v).iter().zip(&g).map(|(x, y)| x * y).sum();
        let gb: f64 = b.apply(&v).iter().zip(&g_scaled).map(|(x, y)| x * y).sum();
        assert!((ga - 7.0 * gb).abs() < 1e-9 * ga.abs());
    }

    #[test]
    fn second_moment_is_positive_after_first_update() {
        let mut p = PreconditionerState::new(2, 0.99, 1e-4);
        p.update(&[0.5, -0.1]);
        assert!(p.second_moment().iter().all(|a| *a > 0.0));
        // eps keeps the diagonal finite even for a zero component
        let mut q = PreconditionerState::new(2, 0.99, 1e-4);
        q.update(&[0.0, 1.0]);
        assert!(q.diag().iter().all(|a| a.is_finite() && *a > 0.0));
    }
}
