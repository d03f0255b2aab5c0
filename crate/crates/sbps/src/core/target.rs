use rand::RngCore;

/// Handle to one mini-batch draw.
///
/// Keeping the handle around lets callers recompute quantities on the same
/// batch: after an accepted bounce the reflection must use the gradient of
/// the very mini-batch that produced the accepted directional estimate, so
/// that the post-bounce directional derivative is exactly its negation.
#[derive(Debug, Clone, PartialEq)]
pub struct Minibatch {
    /// Data row indices, sampled uniformly without replacement.
    pub indices: Vec<usize>,
    /// Realized additive gradient noise, for oracle targets that perturb
    /// gradients artificially instead of subsampling.
    pub noise: Option<Vec<f64>>,
}

impl Minibatch {
    pub fn from_indices(indices: Vec<usize>) -> Self {
        Minibatch {
            indices,
            noise: None,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// A noisy directional-derivative observation.
#[derive(Debug, Clone)]
pub struct DirectionalSample {
    /// Estimate of `v . grad U(w)` from the batch.
    pub g_tilde: f64,
    /// Estimated variance of `g_tilde` (zero for a full batch).
    pub variance: f64,
    pub batch: Minibatch,
}

/// Contract a target distribution `p(w) ~ exp(-U(w))` must satisfy.
///
/// `U` decomposes into per-data-point terms plus an optional deterministic
/// prior term, so that a mini-batch of `n` of the `N` points yields an
/// unbiased gradient estimate scaled by `N/n`. Directional evaluation must
/// not require forming the full gradient vector.
pub trait TargetModel {
    fn dim(&self) -> usize;

    /// Number of data points `N`.
    fn data_len(&self) -> usize;

    /// Draws a mini-batch handle of size `n`.
    fn sample_batch(&self, n: usize, rng: &mut dyn RngCore) -> Minibatch;

    /// Directional derivative estimate `v . grad U~(w)` and its variance on a
    /// fixed batch. `v` need not be unit length.
    fn batch_directional(&self, batch: &Minibatch, w: &[f64], v: &[f64]) -> (f64, f64);

    /// Full mini-batch gradient `grad U~(w)` on the same batch, consistent
    /// with [`TargetModel::batch_directional`]:
    /// `v . minibatch_gradient(batch, w) == g_tilde`.
    fn minibatch_gradient(&self, batch: &Minibatch, w: &[f64]) -> Vec<f64>;

    /// Exact gradient of `U` over the full data.
    fn full_gradient(&self, w: &[f64]) -> Vec<f64>;

    /// Normalized log density, where tractable. Oracle targets only.
    fn exact_log_density(&self, _w: &[f64]) -> Option<f64> {
        None
    }

    /// Draws a fresh batch and observes the directional derivative along `v`.
    fn minibatch_directional(
        &self,
        w: &[f64],
        v: &[f64],
        n: usize,
        rng: &mut dyn RngCore,
    ) -> DirectionalSample {
        let batch = self.sample_batch(n, rng);
        let (g_tilde, variance) = self.batch_directional(&batch, w, v);
        DirectionalSample {
            g_tilde,
            variance,
            batch,
        }
    }

    /// Coefficients `(a, b)` with `v . grad U(w + v t) = a + b t` exactly,
    /// for targets whose bounce intensity can be simulated in closed form.
    fn directional_affine(&self, _w: &[f64], _v: &[f64]) -> Option<(f64, f64)> {
        None
    }

    /// Coefficients `(base, slope)` of an affine intensity dominating
    /// `[v . grad U~(w + v t)]_+` for every unit `v`, every batch and all
    /// `t >= 0`, when such a bound exists.
    fn directional_bound(&self, _w: &[f64]) -> Option<(f64, f64)> {
        None
    }

    /// Standard deviation of injected directional gradient noise, for oracle
    /// targets that perturb gradients artificially. Zero for real targets.
    fn injected_noise_sd(&self) -> f64 {
        0.0
    }
}
