use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::{
    PreconditionerState, Run, RunSummary, SamplerError, STREAM_BATCH, STREAM_EVENT,
    STREAM_VELOCITY,
};
use crate::core::{
    reflect, reflect_preconditioned, refresh_velocity, EventKind, Minibatch, RngStream,
    TargetModel, TrajectorySegment,
};
use crate::thinning::{
    accept_bounce, Envelope, GradObservation, HazardInversion, RegressionPrior, RegressionState,
};

/// Knot-count guard for runs that coast without auxiliary observations.
const MAX_ENVELOPE_KNOTS: usize = 1_000_000;

/// Number of recent proposal gaps averaged into the auxiliary horizon scale.
const GAP_WINDOW: usize = 32;

/// Ceiling on one auxiliary coast, in grid steps. Bounds how far a single
/// blind stretch can carry the particle into low-density regions and caps
/// the envelope memory per cycle.
const MAX_AUX_STEPS: f64 = 2_000.0;

/// Configuration of the stochastic sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct SbpsConfig {
    /// Confidence-band multiple `k` on the predictive standard deviation.
    pub band_multiple: f64,
    /// Mini-batch size `n` (at least 2 so the noise variance is estimable).
    pub batch_size: usize,
    /// Velocity refresh rate; zero disables refreshes (mini-batch noise
    /// randomizes the velocity enough on the targets considered here).
    pub refresh_rate: f64,
    /// Knot spacing of the piecewise-linear proposal intensity.
    pub grid_dt: f64,
    /// Auxiliary-observation ladder depth; zero disables the mechanism and
    /// the envelope is extended indefinitely instead.
    pub aux_p_max: usize,
    /// Budget in epochs (data-point gradient evaluations / N).
    pub total_epochs: f64,
    pub seed: u64,
    /// Prior mean of the regression slope.
    pub slope_prior_mean: f64,
    /// Prior variance of the regression slope.
    pub slope_prior_var: f64,
    /// Variance of the weak zero-mean intercept prior.
    pub intercept_prior_var: f64,
    /// Learning rate of the marginal-likelihood ascent on the slope prior,
    /// applied once per bounce; zero disables learning.
    pub hyper_lr: f64,
    /// Optional decay length for local (recency-weighted) regression.
    pub decay_scale: Option<f64>,
    /// Starting position; origin when unset.
    pub initial_position: Option<Vec<f64>>,
    /// Mean proposal gap assumed before the first proposal, seeding the
    /// auxiliary-observation horizon.
    pub initial_t_bar: f64,
    /// Whether a proposal's recorded waiting time spans coasting stretches
    /// through auxiliary observations (long-leg regime) or only the final
    /// arrival leg (short-leg regime).
    pub gap_includes_coasts: bool,
    /// Weight of the newest squared gradient in the preconditioner's
    /// second-moment accumulator; the accumulator keeps `1 - decay` of its
    /// state per observation, so small values make `A` change slowly.
    pub precondition_decay: f64,
    /// Preconditioner regularizer added to root second moments.
    pub precondition_eps: f64,
}

impl Default for SbpsConfig {
    fn default() -> Self {
        SbpsConfig {
            band_multiple: 3.0,
            batch_size: 100,
            refresh_rate: 0.0,
            grid_dt: 0.01,
            aux_p_max: 1,
            total_epochs: 100.0,
            seed: 0,
            slope_prior_mean: 0.0,
            slope_prior_var: 1e4,
            intercept_prior_var: 1e6,
            hyper_lr: 1e-3,
            decay_scale: None,
            initial_position: None,
            initial_t_bar: 0.1,
            gap_includes_coasts: false,
            precondition_decay: 0.01,
            precondition_eps: 1e-4,
        }
    }
}

impl SbpsConfig {
    pub fn validate(&self, target_dim: usize, n_data: usize) -> Result<(), SamplerError> {
        let fail = |msg: String| Err(SamplerError::InvalidConfig(msg));
        if n_data > 1 && (self.batch_size < 2 || self.batch_size > n_data) {
            return fail(format!(
                "batch size {} outside 2..={n_data}",
                self.batch_size
            ));
        }
        if self.band_multiple < 0.0 {
            return fail(format!("band multiple {} negative", self.band_multiple));
        }
        let not_positive = |x: f64| x.is_nan() || x <= 0.0;
        if not_positive(self.grid_dt) {
            return fail(format!("grid spacing {} not positive", self.grid_dt));
        }
        if not_positive(self.total_epochs) {
            return fail(format!("epoch budget {} not positive", self.total_epochs));
        }
        if self.refresh_rate < 0.0 {
            return fail(format!("refresh rate {} negative", self.refresh_rate));
        }
        if not_positive(self.slope_prior_var) || not_positive(self.intercept_prior_var) {
            return fail("prior variances must be positive".into());
        }
        if not_positive(self.initial_t_bar) {
            return fail(format!("initial mean gap {} not positive", self.initial_t_bar));
        }
        if let Some(w0) = &self.initial_position {
            if w0.len() != target_dim {
                return fail(format!(
                    "initial position has dimension {}, target has {target_dim}",
                    w0.len()
                ));
            }
        }
        Ok(())
    }

    fn prior(&self) -> RegressionPrior {
        RegressionPrior {
            slope_mean: self.slope_prior_mean,
            slope_var: self.slope_prior_var,
            intercept_var: self.intercept_prior_var,
            decay_scale: self.decay_scale,
        }
    }
}

/// Stochastic bouncy particle sampler: flights between events, bounce times
/// proposed from the adaptive regression envelope and accepted against fresh
/// mini-batch directional derivatives.
pub fn run_sbps<T: TargetModel + ?Sized>(
    target: &T,
    config: &SbpsConfig,
) -> Result<Run, SamplerError> {
    Runner::new(target, config, false)?.run()
}

/// Preconditioned variant: flights move along `A v`, directional derivatives
/// are taken along `A v`, reflections use the preconditioned gradient, and
/// `A` adapts at every gradient observation.
pub fn run_psbps<T: TargetModel + ?Sized>(
    target: &T,
    config: &SbpsConfig,
) -> Result<Run, SamplerError> {
    Runner::new(target, config, true)?.run()
}

struct Runner<'a, T: TargetModel + ?Sized> {
    target: &'a T,
    config: &'a SbpsConfig,
    precond: Option<PreconditionerState>,
    position: Vec<f64>,
    unit_velocity: Vec<f64>,
    time: f64,
    reg: RegressionState,
    /// Time since the last bounce or refresh (regression episode clock).
    episode_t: f64,
    segments: Vec<TrajectorySegment>,
    summary: RunSummary,
    pending_evals: u64,
    /// Flight time accumulated since the last proposal (auxiliary stops do
    /// not close a proposal gap: a proposal's waiting time spans any coasting
    /// stretches inside its cycle).
    pending_gap: f64,
    /// Recent proposal gaps; their mean sets the auxiliary horizon. A global
    /// mean is unstable here: coasting gaps feed the horizon that produced
    /// them, and transients would pollute the scale for the rest of the run.
    recent_gaps: std::collections::VecDeque<f64>,
    last_batch: Option<Minibatch>,
    refresh_in: f64,
    vel_rng: ChaCha8Rng,
    batch_rng: ChaCha8Rng,
    event_rng: ChaCha8Rng,
    budget_evals: u64,
}

impl<'a, T: TargetModel + ?Sized> Runner<'a, T> {
    fn new(target: &'a T, config: &'a SbpsConfig, precondition: bool) -> Result<Self, SamplerError> {
        let dim = target.dim();
        let n_data = target.data_len();
        config.validate(dim, n_data)?;
        let mut vel_rng = RngStream::new(config.seed, STREAM_VELOCITY).rng();
        let batch_rng = RngStream::new(config.seed, STREAM_BATCH).rng();
        let mut event_rng = RngStream::new(config.seed, STREAM_EVENT).rng();
        let position = config
            .initial_position
            .clone()
            .unwrap_or_else(|| vec![0.0; dim]);
        let unit_velocity = refresh_velocity(dim, &mut vel_rng);
        let refresh_in = if config.refresh_rate > 0.0 {
            event_rng.sample::<f64, _>(Exp1) / config.refresh_rate
        } else {
            f64::INFINITY
        };
        Ok(Runner {
            target,
            config,
            precond: precondition.then(|| {
                PreconditionerState::new(dim, config.precondition_decay, config.precondition_eps)
            }),
            position,
            unit_velocity,
            time: 0.0,
            reg: RegressionState::new(config.prior()),
            episode_t: 0.0,
            segments: Vec::new(),
            summary: RunSummary::default(),
            pending_evals: 0,
            pending_gap: 0.0,
            recent_gaps: std::collections::VecDeque::with_capacity(GAP_WINDOW),
            last_batch: None,
            refresh_in,
            vel_rng,
            batch_rng,
            event_rng,
            budget_evals: (config.total_epochs * n_data as f64).ceil() as u64,
        })
    }

    /// Displacement per unit time: `A v` under preconditioning, with `A`
    /// pinned to unit geometric mean so flights move faster along wide
    /// posterior directions while time units stay comparable to the plain
    /// sampler's.
    fn motion(&self) -> Vec<f64> {
        match &self.precond {
            Some(p) => p
                .unit_scale_diag()
                .iter()
                .zip(&self.unit_velocity)
                .map(|(a, v)| a * v)
                .collect(),
            None => self.unit_velocity.clone(),
        }
    }

    fn t_bar(&self) -> f64 {
        if self.recent_gaps.is_empty() {
            self.config.initial_t_bar
        } else {
            self.recent_gaps.iter().sum::<f64>() / self.recent_gaps.len() as f64
        }
    }

    fn record_gap(&mut self, gap: f64) {
        if self.recent_gaps.len() == GAP_WINDOW {
            self.recent_gaps.pop_front();
        }
        self.recent_gaps.push_back(gap);
    }

    /// Gradient observation at the current position. Updates the
    /// preconditioner first (every gradient observation feeds it), then
    /// evaluates the directional derivative along the resulting motion
    /// direction. Costs one batch of data-point evaluations; auxiliary
    /// observations reuse the previous mini-batch rather than drawing fresh
    /// indices.
    fn observe(&mut self, reuse_batch: bool) -> (f64, f64) {
        let batch = match (&self.last_batch, reuse_batch) {
            (Some(b), true) => b.clone(),
            _ => self
                .target
                .sample_batch(self.config.batch_size, &mut self.batch_rng),
        };
        let cost = if batch.indices.is_empty() {
            self.target.data_len() as u64
        } else {
            batch.indices.len() as u64
        };
        self.pending_evals += cost;
        self.summary.data_evals += cost;
        if let Some(p) = &mut self.precond {
            let grad = self.target.minibatch_gradient(&batch, &self.position);
            p.update(&grad);
        }
        let direction = self.motion();
        let (g_tilde, c2) = self
            .target
            .batch_directional(&batch, &self.position, &direction);
        self.last_batch = Some(batch);
        (g_tilde, c2)
    }

    /// Moves the particle for `tau` along the current motion direction and
    /// returns the segment start and velocity for later emission.
    fn fly(&mut self, tau: f64) -> (Vec<f64>, Vec<f64>) {
        let start = self.position.clone();
        let motion = self.motion();
        for (w, m) in self.position.iter_mut().zip(&motion) {
            *w += m * tau;
        }
        self.time += tau;
        (start, motion)
    }

    fn emit(&mut self, start: Vec<f64>, velocity: Vec<f64>, duration: f64, event: EventKind) {
        self.segments.push(TrajectorySegment {
            start,
            velocity,
            duration,
            event,
            minibatch_evals: std::mem::take(&mut self.pending_evals),
        });
    }

    fn seed_regression(&mut self) {
        let (g_tilde, c2) = self.observe(false);
        self.reg
            .observe(GradObservation {
                time: 0.0,
                value: g_tilde,
                variance: c2,
            })
            .expect("proper priors keep the regression nonsingular");
    }

    fn do_refresh(&mut self) {
        let tau = self.refresh_in;
        let (start, motion) = self.fly(tau);
        self.summary.refreshes += 1;
        self.unit_velocity = refresh_velocity(self.target.dim(), &mut self.vel_rng);
        self.refresh_in = self.event_rng.sample::<f64, _>(Exp1) / self.config.refresh_rate;
        self.reg = RegressionState::new(*self.reg.prior());
        self.episode_t = 0.0;
        self.pending_gap = 0.0;
        self.seed_regression();
        self.emit(start, motion, tau, EventKind::Refresh);
    }

    fn run(mut self) -> Result<Run, SamplerError> {
        let n_data = self.target.data_len();
        let aux_enabled = self.config.aux_p_max >= 1;

        // Seed the episode regression with an observation at time zero; the
        // post-bounce reset plays the same role later in the run.
        self.seed_regression();

        loop {
            if self.summary.data_evals >= self.budget_evals {
                let start = self.position.clone();
                let motion = self.motion();
                self.emit(start, motion, 0.0, EventKind::RunEnd);
                break;
            }

            // Proposal cycle anchored at the current position: sample the
            // first arrival of the envelope intensity, lazily extending the
            // knot grid. With the auxiliary mechanism on, exhausting the
            // hazard out to 10 t_bar yields an auxiliary observation there
            // instead of an arrival.
            let clamped = self.reg.clamp_slope();
            let c2_last = self.reg.last_observation().map_or(0.0, |o| o.variance);
            let aux_gap = (10.0 * self.t_bar())
                .clamp(self.config.grid_dt, self.config.grid_dt * MAX_AUX_STEPS);
            let mut envelope = Envelope::from_regression(
                &clamped,
                self.config.band_multiple,
                self.config.grid_dt,
                self.episode_t,
                aux_gap,
                c2_last,
            );
            let mut remaining: f64 = self.event_rng.sample(Exp1);
            let mut from = 0.0;
            let arrival = loop {
                match envelope.rate.invert_hazard(from, remaining) {
                    HazardInversion::Arrival { time, rate } => break Some((time, rate)),
                    HazardInversion::Exhausted { consumed } => {
                        remaining -= consumed;
                        from = envelope.rate.horizon();
                        if aux_enabled {
                            break None;
                        }
                        if envelope.rate.knots().len() > MAX_ENVELOPE_KNOTS {
                            return Err(SamplerError::EnvelopeStalled {
                                horizon: envelope.rate.horizon(),
                            });
                        }
                        envelope.extend_to(2.0 * envelope.rate.horizon());
                    }
                }
            };

            match arrival {
                Some((tau, rate_at)) => {
                    if self.refresh_in <= tau {
                        self.do_refresh();
                        continue;
                    }
                    self.refresh_in -= tau;
                    let (start, motion) = self.fly(tau);
                    self.episode_t += tau;
                    let gap = if self.config.gap_includes_coasts {
                        self.pending_gap + tau
                    } else {
                        tau
                    };
                    self.record_gap(gap);
                    self.pending_gap = 0.0;
                    let (g_tilde, c2) = self.observe(false);
                    let (accepted, violated) =
                        accept_bounce(g_tilde, rate_at, &mut self.event_rng);
                    self.summary.proposals += 1;
                    if violated {
                        self.summary.violations += 1;
                    }
                    if accepted {
                        self.summary.bounces += 1;
                        self.emit(start, motion, tau, EventKind::Bounce);
                        let batch = self.last_batch.as_ref().expect("observation just stored");
                        let grad = self.target.minibatch_gradient(batch, &self.position);
                        let reflected = match &self.precond {
                            Some(p) => {
                                reflect_preconditioned(&self.unit_velocity, &grad, &p.diag())
                            }
                            None => reflect(&self.unit_velocity, &grad),
                        };
                        self.unit_velocity = reflected.unwrap_or_else(|_| {
                            refresh_velocity(self.target.dim(), &mut self.vel_rng)
                        });
                        if self.config.hyper_lr > 0.0 {
                            self.reg
                                .observe(GradObservation {
                                    time: self.episode_t,
                                    value: g_tilde,
                                    variance: c2,
                                })
                                .expect("proper priors keep the regression nonsingular");
                            self.reg
                                .hyperparameter_step(self.config.hyper_lr)
                                .expect("marginal covariance is positive definite");
                        }
                        self.reg = self.reg.reset_after_bounce(g_tilde, c2);
                        self.episode_t = 0.0;
                    } else {
                        self.emit(start, motion, tau, EventKind::ProposalRejected);
                        self.reg
                            .observe(GradObservation {
                                time: self.episode_t,
                                value: g_tilde,
                                variance: c2,
                            })
                            .expect("proper priors keep the regression nonsingular");
                    }
                }
                None => {
                    // Coasting: no arrival out to the auxiliary horizon.
                    // Advance there and observe with the same mini-batch as
                    // the last proposal to repair the envelope.
                    let tau = envelope.rate.horizon();
                    if self.refresh_in <= tau {
                        self.do_refresh();
                        continue;
                    }
                    self.refresh_in -= tau;
                    let (start, motion) = self.fly(tau);
                    self.episode_t += tau;
                    self.pending_gap += tau;
                    let (g_tilde, c2) = self.observe(true);
                    self.summary.aux_observations += 1;
                    self.emit(start, motion, tau, EventKind::AuxObservation);
                    self.reg
                        .observe(GradObservation {
                            time: self.episode_t,
                            value: g_tilde,
                            variance: c2,
                        })
                        .expect("proper priors keep the regression nonsingular");
                }
            }
        }

        self.summary.epochs = self.summary.data_evals as f64 / n_data as f64;
        self.summary.total_time = self.time;
        Ok(Run {
            segments: self.segments,
            summary: self.summary,
        })
    }
}
