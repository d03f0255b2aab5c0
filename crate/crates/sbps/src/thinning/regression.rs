use rand::Rng;

use super::ThinningError;
use crate::linalg::{cholesky, chol_logdet, chol_solve, dot, solve_sym2};

/// Observation variances below this are floored to keep regression weights
/// finite in the exact full-batch case.
pub const C2_FLOOR: f64 = 1e-12;

/// One noisy directional-derivative observation: time since the last bounce,
/// the observed value, and its estimated noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradObservation {
    pub time: f64,
    pub value: f64,
    pub variance: f64,
}

/// Priors of the linear model: Gaussian `N(slope_mean, slope_var)` on the
/// slope, a very weak zero-mean Gaussian on the intercept (the model itself
/// only asks for a slope prior; the weak intercept prior keeps the posterior
/// proper with a single observation), and an optional exponential decay that
/// down-weights old observations for local regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionPrior {
    pub slope_mean: f64,
    pub slope_var: f64,
    pub intercept_var: f64,
    pub decay_scale: Option<f64>,
}

impl Default for RegressionPrior {
    fn default() -> Self {
        RegressionPrior {
            slope_mean: 0.0,
            slope_var: 1e4,
            intercept_var: 1e6,
            decay_scale: None,
        }
    }
}

/// Exact conjugate Gaussian posterior over `(b0, b1)` given the observations
/// collected since the last bounce, each weighted by its inverse noise
/// variance.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionState {
    prior: RegressionPrior,
    observations: Vec<GradObservation>,
    beta: [f64; 2],
    cov: [[f64; 2]; 2],
}

impl RegressionState {
    /// Empty state: the posterior is the prior.
    pub fn new(prior: RegressionPrior) -> Self {
        let mut s = RegressionState {
            prior,
            observations: Vec::new(),
            beta: [0.0; 2],
            cov: [[0.0; 2]; 2],
        };
        s.refit().expect("prior covariance is positive definite");
        s
    }

    pub fn prior(&self) -> &RegressionPrior {
        &self.prior
    }

    pub fn observations(&self) -> &[GradObservation] {
        &self.observations
    }

    /// Posterior mean `(b0, b1)`.
    pub fn beta(&self) -> [f64; 2] {
        self.beta
    }

    /// Posterior covariance.
    pub fn cov(&self) -> [[f64; 2]; 2] {
        self.cov
    }

    pub fn last_observation(&self) -> Option<&GradObservation> {
        self.observations.last()
    }

    /// Appends an observation and recomputes the exact posterior.
    pub fn observe(&mut self, obs: GradObservation) -> Result<(), ThinningError> {
        self.observations.push(obs);
        self.refit()
    }

    /// Predictive mean and standard deviation of `G~(t)`:
    /// `mean = b1 t + b0`, `rho^2 = x Cov x^T + c2_last` with `x = (1, t)`.
    /// The observation noise is extrapolated as that of the last mini-batch.
    pub fn predictive(&self, t: f64, c2_last: f64) -> (f64, f64) {
        let mean = self.beta[0] + self.beta[1] * t;
        let quad = self.cov[0][0] + 2.0 * t * self.cov[0][1] + t * t * self.cov[1][1];
        (mean, (quad.max(0.0) + c2_last).sqrt())
    }

    /// Fresh state after an accepted bounce. The reflected velocity sees the
    /// same mini-batch gradient with flipped sign, so the new episode starts
    /// from the single observation `(t = 0, -g_tilde, c2)`. Learned prior
    /// hyperparameters carry over.
    pub fn reset_after_bounce(&self, g_tilde: f64, c2: f64) -> Self {
        let mut s = RegressionState::new(self.prior);
        s.observe(GradObservation {
            time: 0.0,
            value: -g_tilde,
            variance: c2,
        })
        .expect("single observation with proper priors cannot be singular");
        s
    }

    /// Returns a copy whose slope is clamped to be nonnegative. When the
    /// fitted slope is negative, the intercept is moved so the mean
    /// prediction at the last observation time is preserved.
    pub fn clamp_slope(&self) -> Self {
        if self.beta[1] >= 0.0 {
            return self.clone();
        }
        let t_last = self.observations.last().map_or(0.0, |o| o.time);
        let mut out = self.clone();
        out.beta = [self.beta[0] + self.beta[1] * t_last, 0.0];
        out
    }

    /// Effective noise variances: floored, and inflated by the decay weight
    /// when local regression is enabled.
    fn effective_variances(&self) -> Vec<f64> {
        let t_last = self.observations.last().map_or(0.0, |o| o.time);
        self.observations
            .iter()
            .map(|o| {
                let c2 = o.variance.max(C2_FLOOR);
                match self.prior.decay_scale {
                    Some(scale) => c2 * ((t_last - o.time) / scale).exp(),
                    None => c2,
                }
            })
            .collect()
    }

    fn refit(&mut self) -> Result<(), ThinningError> {
        let variances = self.effective_variances();
        let mut lam = [
            [1.0 / self.prior.intercept_var, 0.0],
            [0.0, 1.0 / self.prior.slope_var],
        ];
        let mut rhs = [0.0, self.prior.slope_mean / self.prior.slope_var];
        for (o, c2) in self.observations.iter().zip(&variances) {
            let w = 1.0 / c2;
            lam[0][0] += w;
            lam[0][1] += w * o.time;
            lam[1][1] += w * o.time * o.time;
            rhs[0] += w * o.value;
            rhs[1] += w * o.value * o.time;
        }
        lam[1][0] = lam[0][1];
        let (beta, cov) = solve_sym2(lam, rhs).ok_or(ThinningError::SingularSystem)?;
        self.beta = beta;
        self.cov = cov;
        Ok(())
    }

    /// Log marginal likelihood of the observed values under hyperparameters
    /// `(mu, sigma2)` for the slope prior: `G~ ~ N(mu t, M)` with
    /// `M = s0^2 1 1^T + sigma2 t t^T + diag(c2)`.
    pub fn log_marginal(&self, mu: f64, sigma2: f64) -> f64 {
        let m = self.observations.len();
        if m == 0 {
            return 0.0;
        }
        let times: Vec<f64> = self.observations.iter().map(|o| o.time).collect();
        let resid: Vec<f64> = self
            .observations
            .iter()
            .map(|o| o.value - mu * o.time)
            .collect();
        let variances = self.effective_variances();
        let mut mat = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                mat[i * m + j] = self.prior.intercept_var + sigma2 * times[i] * times[j];
            }
            mat[i * m + i] += variances[i];
        }
        let l = cholesky(&mat, m).expect("marginal covariance is positive definite");
        let alpha = chol_solve(&l, &resid, m);
        -0.5 * (dot(&resid, &alpha)
            + chol_logdet(&l, m)
            + m as f64 * (2.0 * std::f64::consts::PI).ln())
    }

    /// Gradient of the log marginal likelihood with respect to
    /// `(mu, log sigma2)` at the current hyperparameters.
    pub fn hyper_gradient(&self) -> (f64, f64) {
        let m = self.observations.len();
        if m == 0 {
            return (0.0, 0.0);
        }
        let mu = self.prior.slope_mean;
        let sigma2 = self.prior.slope_var;
        let times: Vec<f64> = self.observations.iter().map(|o| o.time).collect();
        let resid: Vec<f64> = self
            .observations
            .iter()
            .map(|o| o.value - mu * o.time)
            .collect();
        let variances = self.effective_variances();
        let mut mat = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                mat[i * m + j] = self.prior.intercept_var + sigma2 * times[i] * times[j];
            }
            mat[i * m + i] += variances[i];
        }
        let l = cholesky(&mat, m).expect("marginal covariance is positive definite");
        let m_inv_r = chol_solve(&l, &resid, m);
        let m_inv_t = chol_solve(&l, &times, m);
        let t_mir = dot(&times, &m_inv_r);
        let t_mit = dot(&times, &m_inv_t);
        let d_mu = t_mir;
        let d_sigma2 = 0.5 * (t_mir * t_mir - t_mit);
        (d_mu, sigma2 * d_sigma2)
    }

    /// One gradient-ascent step on the marginal likelihood over
    /// `(mu, sigma2)`, keeping `sigma2` positive via log-parameterization,
    /// then refits the posterior under the new prior.
    pub fn hyperparameter_step(&mut self, lr: f64) -> Result<(), ThinningError> {
        if self.observations.is_empty() || lr == 0.0 {
            return Ok(());
        }
        let (d_mu, d_log_sigma2) = self.hyper_gradient();
        self.prior.slope_mean += lr * d_mu;
        self.prior.slope_var = (self.prior.slope_var.ln() + lr * d_log_sigma2).exp();
        self.refit()
    }
}

/// Variance of the mini-batch directional-derivative estimator
/// `(N/n) sum_i v . grad log p(x_i | w)` from the per-point values, with the
/// finite population correction for sampling without replacement:
///
/// `(N^2 / n) (1 - n/N) SampleVar(values)`
///
/// Sample variance uses the `1/(n-1)` normalization. Exactly zero when
/// `n == N`.
pub fn minibatch_variance(per_point_values: &[f64], data_len: usize) -> Result<f64, ThinningError> {
    let n = per_point_values.len();
    if n < 2 {
        return Err(ThinningError::DegenerateBatch(n));
    }
    debug_assert!(n <= data_len);
    if n == data_len {
        return Ok(0.0);
    }
    let nf = n as f64;
    let big_n = data_len as f64;
    let mean = per_point_values.iter().sum::<f64>() / nf;
    let var = per_point_values
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .sum::<f64>()
        / (nf - 1.0);
    Ok((big_n * big_n / nf) * (1.0 - nf / big_n) * var)
}

/// Accept/reject step of the thinning scheme: a proposal at intensity
/// `rate_at` observed `g_tilde`, and the bounce is accepted with probability
/// `min(1, [g_tilde]_+ / rate_at)`.
///
/// Returns `(accepted, violated)`. A violation (`[g_tilde]_+ > rate_at`) is
/// the bias event tracked by the diagnostic; a proposal landing on a zero
/// rate with positive `g_tilde` cannot arise from exact inverse-CDF sampling,
/// so it is counted as a violation and auto-accepted to keep the bias visible
/// rather than silent.
pub fn accept_bounce<R: Rng + ?Sized>(g_tilde: f64, rate_at: f64, rng: &mut R) -> (bool, bool) {
    debug_assert!(rate_at >= 0.0);
    let g_plus = g_tilde.max(0.0);
    if g_plus == 0.0 {
        return (false, false);
    }
    if rate_at <= 0.0 {
        return (true, true);
    }
    // relative slack so that exactly-simulable targets, where the observed
    // value structurally equals the rate, do not flag rounding noise
    let violated = g_plus > rate_at * (1.0 + 1e-9);
    let accepted = violated || rng.random::<f64>() < g_plus / rate_at;
    (accepted, violated)
}

/// Auxiliary observation schedule `{10 p t_bar : p = 1..=p_max}` where
/// `t_bar` is the mean proposal time of all past proposals. Empty when the
/// mechanism is disabled (`p_max = 0`).
pub fn auxiliary_times(t_bar: f64, p_max: usize) -> Vec<f64> {
    debug_assert!(t_bar > 0.0);
    (1..=p_max).map(|p| 10.0 * p as f64 * t_bar).collect()
}
