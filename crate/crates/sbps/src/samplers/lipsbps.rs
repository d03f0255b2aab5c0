use rand::Rng;
use rand_distr::Exp1;

use super::{Run, RunSummary, SamplerError, STREAM_BATCH, STREAM_EVENT, STREAM_VELOCITY};
use crate::core::{
    reflect, refresh_velocity, EventKind, ParticleState, RngStream, TargetModel,
    TrajectorySegment,
};
use crate::thinning::affine_first_arrival;

/// Mini-batch bouncy particle sampler with an exact thinning bound, for
/// logistic-regression targets (the bound
/// `sqrt(d) N max |x_ij|` plus the prior-gradient term is valid there and
/// nowhere else in this crate).
///
/// Unbiased: proposals come from an intensity that provably dominates every
/// realizable directional derivative, so violations indicate an
/// implementation bug and abort the run. The price is proposal rates several
/// orders of magnitude above the adaptive envelope, which is the point of
/// the comparison.
pub fn run_lipsbps(
    target: &crate::targets::LogisticRegressionTarget,
    batch_size: usize,
    total_epochs: f64,
    seed: u64,
    initial_position: Option<Vec<f64>>,
) -> Result<Run, SamplerError> {
    if batch_size < 1 || batch_size > target.data_len() {
        return Err(SamplerError::InvalidConfig(format!(
            "batch size {batch_size} outside 1..={}",
            target.data_len()
        )));
    }
    if !(total_epochs > 0.0) {
        return Err(SamplerError::InvalidConfig(format!(
            "epoch budget {total_epochs} not positive"
        )));
    }
    let dim = target.dim();
    let mut vel_rng = RngStream::new(seed, STREAM_VELOCITY).rng();
    let mut batch_rng = RngStream::new(seed, STREAM_BATCH).rng();
    let mut event_rng = RngStream::new(seed, STREAM_EVENT).rng();

    let mut state = ParticleState::new(
        initial_position.unwrap_or_else(|| vec![0.0; dim]),
        refresh_velocity(dim, &mut vel_rng),
    );
    let budget_evals = (total_epochs * target.data_len() as f64).ceil() as u64;
    let mut summary = RunSummary::default();
    let mut segments = Vec::new();
    let mut pending_evals: u64 = 0;

    while summary.data_evals < budget_evals {
        let (base, slope) = target
            .directional_bound(&state.position)
            .expect("logistic targets always provide the bound");
        let e: f64 = event_rng.sample(Exp1);
        let Some((tau, rate_at)) = affine_first_arrival(base, slope, 0.0, e) else {
            // all-zero covariates with a flat prior: the bound is zero and
            // the particle coasts forever
            segments.push(TrajectorySegment {
                start: state.position.clone(),
                velocity: state.velocity.clone(),
                duration: 0.0,
                event: EventKind::RunEnd,
                minibatch_evals: std::mem::take(&mut pending_evals),
            });
            break;
        };
        let start = state.position.clone();
        let velocity = state.velocity.clone();
        state.advance(tau);
        let ds = target.minibatch_directional(
            &state.position,
            &state.velocity,
            batch_size,
            &mut batch_rng,
        );
        pending_evals += batch_size as u64;
        summary.data_evals += batch_size as u64;
        summary.proposals += 1;
        let g_plus = ds.g_tilde.max(0.0);
        if g_plus > rate_at * (1.0 + 1e-12) {
            return Err(SamplerError::BoundViolation {
                g_tilde: ds.g_tilde,
                bound: rate_at,
            });
        }
        let event = if g_plus > 0.0 && event_rng.random::<f64>() < g_plus / rate_at {
            summary.bounces += 1;
            let grad = target.minibatch_gradient(&ds.batch, &state.position);
            state.velocity = reflect(&state.velocity, &grad)
                .unwrap_or_else(|_| refresh_velocity(dim, &mut vel_rng));
            EventKind::Bounce
        } else {
            EventKind::ProposalRejected
        };
        segments.push(TrajectorySegment {
            start,
            velocity,
            duration: tau,
            event,
            minibatch_evals: std::mem::take(&mut pending_evals),
        });
    }

    summary.total_time = state.time;
    summary.epochs = summary.data_evals as f64 / target.data_len() as f64;
    Ok(Run { segments, summary })
}
