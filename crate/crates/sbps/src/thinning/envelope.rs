use rand::Rng;
use rand_distr::Exp1;

use super::{RegressionState, ThinningError};

/// Piecewise-linear Poisson intensity defined by knots `(t_i, value_i)` with
/// strictly increasing times starting at zero and nonnegative values; between
/// knots the rate is the linear interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearRate {
    knots: Vec<(f64, f64)>,
}

impl PiecewiseLinearRate {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self, ThinningError> {
        if knots.is_empty() {
            return Err(ThinningError::InvalidRate("no knots".into()));
        }
        if knots[0].0 != 0.0 {
            return Err(ThinningError::InvalidRate(format!(
                "first knot at t = {}, expected 0",
                knots[0].0
            )));
        }
        for pair in knots.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(ThinningError::InvalidRate(format!(
                    "knot times not strictly increasing at t = {}",
                    pair[1].0
                )));
            }
        }
        if let Some((t, v)) = knots.iter().find(|(_, v)| *v < 0.0 || !v.is_finite()) {
            return Err(ThinningError::InvalidRate(format!(
                "rate {v} at t = {t} is not a finite nonnegative value"
            )));
        }
        Ok(PiecewiseLinearRate { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// End of the represented domain.
    pub fn horizon(&self) -> f64 {
        self.knots.last().unwrap().0
    }

    pub fn push_knot(&mut self, t: f64, value: f64) {
        assert!(t > self.horizon() && value >= 0.0);
        self.knots.push((t, value));
    }

    /// Interpolated rate, clamped to the boundary values outside the domain.
    pub fn value_at(&self, t: f64) -> f64 {
        if t <= self.knots[0].0 {
            return self.knots[0].1;
        }
        for pair in self.knots.windows(2) {
            let ((t0, y0), (t1, y1)) = (pair[0], pair[1]);
            if t <= t1 {
                return y0 + (y1 - y0) * (t - t0) / (t1 - t0);
            }
        }
        self.knots.last().unwrap().1
    }

    /// Integral of the rate over the whole domain.
    pub fn total_hazard(&self) -> f64 {
        self.knots
            .windows(2)
            .map(|p| 0.5 * (p[0].1 + p[1].1) * (p[1].0 - p[0].0))
            .sum()
    }

    /// Deterministic core of inverse-CDF sampling: finds the time at which
    /// the cumulative hazard from `from` reaches `target`. Linear segments
    /// give a quadratic in the crossing time, solved in a form stable as the
    /// slope vanishes.
    pub fn invert_hazard(&self, from: f64, target: f64) -> HazardInversion {
        debug_assert!(target >= 0.0);
        let mut remaining = target;
        for pair in self.knots.windows(2) {
            let ((t0, y0), (t1, y1)) = (pair[0], pair[1]);
            if t1 <= from {
                continue;
            }
            let (seg_start, y_start) = if from > t0 {
                (from, y0 + (y1 - y0) * (from - t0) / (t1 - t0))
            } else {
                (t0, y0)
            };
            let dt = t1 - seg_start;
            let hazard = 0.5 * (y_start + y1) * dt;
            if hazard < remaining {
                remaining -= hazard;
                continue;
            }
            let slope = (y1 - y0) / (t1 - t0);
            let disc = (y_start * y_start + 2.0 * slope * remaining).max(0.0);
            let denom = y_start + disc.sqrt();
            if denom <= 0.0 {
                // zero-rate stretch with zero remaining hazard
                remaining -= hazard;
                continue;
            }
            let s = 2.0 * remaining / denom;
            let time = seg_start + s.min(dt);
            return HazardInversion::Arrival {
                time,
                rate: y_start + slope * (time - seg_start),
            };
        }
        HazardInversion::Exhausted {
            consumed: target - remaining,
        }
    }
}

/// Outcome of [`PiecewiseLinearRate::invert_hazard`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HazardInversion {
    Arrival { time: f64, rate: f64 },
    /// The domain ended before the hazard target was met; `consumed` is the
    /// hazard integrated up to the horizon.
    Exhausted { consumed: f64 },
}

/// Outcome of [`sample_first_arrival`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FirstArrival {
    At { time: f64, rate: f64 },
    /// Cumulative hazard over the domain fell short of the exponential draw;
    /// callers extend the envelope or take an auxiliary observation.
    Exhausted { horizon: f64 },
}

/// First arrival of an inhomogeneous Poisson process with the given
/// piecewise-linear rate, by exact inverse-CDF sampling of
/// `integral_0^tau rate = E`, `E ~ Exp(1)`.
pub fn sample_first_arrival<R: Rng + ?Sized>(
    rate: &PiecewiseLinearRate,
    rng: &mut R,
) -> FirstArrival {
    let target: f64 = rng.sample(Exp1);
    match rate.invert_hazard(rate.knots[0].0, target) {
        HazardInversion::Arrival { time, rate } => FirstArrival::At { time, rate },
        HazardInversion::Exhausted { .. } => FirstArrival::Exhausted {
            horizon: rate.horizon(),
        },
    }
}

/// Thinning proposal envelope: the predictive upper band
/// `[mean(t) + k rho(t)]_+` of a regression snapshot, tabulated on a grid of
/// spacing `dt` and interpolated linearly. The band is convex in `t`, so the
/// interpolant dominates it everywhere between knots.
#[derive(Debug, Clone)]
pub struct Envelope {
    beta: [f64; 2],
    cov: [[f64; 2]; 2],
    c2_last: f64,
    band_multiple: f64,
    dt: f64,
    /// Band argument corresponding to rate time zero (time of the current
    /// position within the episode).
    offset: f64,
    pub rate: PiecewiseLinearRate,
}

impl Envelope {
    /// Builds the envelope from explicit band parameters over `[0, horizon]`
    /// in times relative to the current position; the band itself is
    /// evaluated at `offset + t`.
    pub fn from_band(
        beta: [f64; 2],
        cov: [[f64; 2]; 2],
        c2_last: f64,
        band_multiple: f64,
        dt: f64,
        offset: f64,
        horizon: f64,
    ) -> Self {
        assert!(dt > 0.0 && horizon > 0.0);
        let mut env = Envelope {
            beta,
            cov,
            c2_last,
            band_multiple,
            dt,
            offset,
            rate: PiecewiseLinearRate {
                knots: vec![(0.0, 0.0)],
            },
        };
        env.rate.knots[0].1 = env.band_value(0.0);
        env.extend_to(horizon);
        env
    }

    /// Builds from a regression snapshot (callers clamp the slope first when
    /// the clamping rule is in effect).
    pub fn from_regression(
        reg: &RegressionState,
        band_multiple: f64,
        dt: f64,
        offset: f64,
        horizon: f64,
        c2_last: f64,
    ) -> Self {
        Envelope::from_band(
            reg.beta(),
            reg.cov(),
            c2_last,
            band_multiple,
            dt,
            offset,
            horizon,
        )
    }

    /// `[mean + k rho]_+` at time `t` relative to the current position.
    pub fn band_value(&self, t: f64) -> f64 {
        let u = self.offset + t;
        let mean = self.beta[0] + self.beta[1] * u;
        let quad = self.cov[0][0] + 2.0 * u * self.cov[0][1] + u * u * self.cov[1][1];
        let rho = (quad.max(0.0) + self.c2_last).sqrt();
        (mean + self.band_multiple * rho).max(0.0)
    }

    /// Grows the knot grid (spacing `dt`) to cover at least `horizon`.
    pub fn extend_to(&mut self, horizon: f64) {
        while self.rate.horizon() < horizon {
            let t = self.rate.horizon() + self.dt;
            self.rate.push_knot(t, self.band_value(t));
        }
    }
}

/// Thinning proposal intensity from a regression state: knots of spacing
/// `dt` over `[0, horizon]` with values `[b1 (offset+t) + b0 + k rho]_+`.
pub fn build_envelope(
    reg: &RegressionState,
    band_multiple: f64,
    dt: f64,
    horizon: f64,
    c2_last: f64,
) -> PiecewiseLinearRate {
    Envelope::from_regression(reg, band_multiple, dt, 0.0, horizon, c2_last).rate
}

/// First arrival of a Poisson process with intensity
/// `[a + b t]_+ + floor` for `t >= 0`, in closed form.
///
/// Returns `None` when the total hazard is finite and below the target
/// (possible only for `floor = 0` with a nonincreasing positive part), which
/// means the process never fires. Used for targets with exactly simulable or
/// exactly dominated linear intensities.
pub fn affine_first_arrival(
    a: f64,
    b: f64,
    floor: f64,
    target_hazard: f64,
) -> Option<(f64, f64)> {
    debug_assert!(floor >= 0.0 && target_hazard >= 0.0);
    let rate_at = |t: f64| (a + b * t).max(0.0) + floor;
    let mut remaining = target_hazard;
    let mut t = 0.0;

    // piece 1: the region where a + b t <= 0 (constant rate = floor)
    if a < 0.0 {
        if b <= 0.0 {
            // positive part never activates
            return if floor > 0.0 {
                Some((remaining / floor, floor))
            } else {
                None
            };
        }
        let t_kink = -a / b;
        let hazard = floor * t_kink;
        if remaining < hazard {
            return Some((remaining / floor, floor));
        }
        remaining -= hazard;
        t = t_kink;
    }

    // piece 2: affine rate y0 + b s (with y0 = rate at t), s >= 0
    let y0 = rate_at(t);
    if b > 0.0 || (b == 0.0 && y0 > 0.0) {
        let disc = (y0 * y0 + 2.0 * b * remaining).max(0.0);
        let s = 2.0 * remaining / (y0 + disc.sqrt());
        return Some((t + s, rate_at(t + s)));
    }
    if b == 0.0 {
        return None;
    }

    // b < 0 with a >= 0: decreasing to the floor at t_kink = -a/b
    let t_kink = -a / b;
    let hazard_to_kink = 0.5 * (y0 + floor) * t_kink;
    if remaining <= hazard_to_kink {
        let disc = (y0 * y0 + 2.0 * b * remaining).max(0.0);
        let s = 2.0 * remaining / (y0 + disc.sqrt());
        return Some((t + s, rate_at(t + s)));
    }
    remaining -= hazard_to_kink;
    if floor > 0.0 {
        Some((t_kink + remaining / floor, floor))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thinning::{GradObservation, RegressionPrior};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn constant_rate(value: f64, horizon: f64) -> PiecewiseLinearRate {
        PiecewiseLinearRate::new(vec![(0.0, value), (horizon, value)]).unwrap()
    }

    #[test]
    fn rejects_malformed_knots() {
        assert!(PiecewiseLinearRate::new(vec![]).is_err());
        assert!(PiecewiseLinearRate::new(vec![(1.0, 2.0)]).is_err());
        assert!(PiecewiseLinearRate::new(vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(PiecewiseLinearRate::new(vec![(0.0, 1.0), (1.0, -0.1)]).is_err());
    }

    #[test]
    fn constant_rate_inverts_like_exponential() {
        let rate = constant_rate(2.0, 100.0);
        match rate.invert_hazard(0.0, 1.0) {
            HazardInversion::Arrival { time, rate } => {
                assert!((time - 0.5).abs() < 1e-12);
                assert!((rate - 2.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn linear_ramp_inverts_quadratically() {
        // rate(t) = t: integral to tau is tau^2/2, so target 2 gives tau 2
        let rate = PiecewiseLinearRate::new(vec![(0.0, 0.0), (10.0, 10.0)]).unwrap();
        match rate.invert_hazard(0.0, 2.0) {
            HazardInversion::Arrival { time, rate } => {
                assert!((time - 2.0).abs() < 1e-12);
                assert!((rate - 2.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exhaustion_reports_consumed_hazard() {
        let rate = constant_rate(0.5, 2.0);
        match rate.invert_hazard(0.0, 5.0) {
            HazardInversion::Exhausted { consumed } => {
                assert!((consumed - 1.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_rate_stretch_is_skipped() {
        let rate =
            PiecewiseLinearRate::new(vec![(0.0, 0.0), (1.0, 0.0), (2.0, 2.0), (10.0, 2.0)])
                .unwrap();
        match rate.invert_hazard(0.0, 1.0 + 1e-9) {
            HazardInversion::Arrival { time, .. } => {
                // hazard 1 accumulates over the ramp [1,2]
                assert!(time > 1.9 && time < 2.1, "time {time}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    /// Empirical CDF of sampled arrivals against the survival function
    /// computed by independent numerical integration of the same rate.
    #[test]
    fn first_arrival_matches_integration_oracle() {
        let rate =
            PiecewiseLinearRate::new(vec![(0.0, 0.5), (1.0, 3.0), (3.0, 2.0), (60.0, 2.0)])
                .unwrap();
        // oracle: cumulative hazard by fine Riemann sums
        let grid = 200_000;
        let t_max = 60.0;
        let mut hazard = vec![0.0f64; grid + 1];
        for i in 0..grid {
            let t0 = t_max * i as f64 / grid as f64;
            let t1 = t_max * (i + 1) as f64 / grid as f64;
            let mid = rate.value_at(0.5 * (t0 + t1));
            hazard[i + 1] = hazard[i] + mid * (t1 - t0);
        }
        let oracle_cdf = |t: f64| -> f64 {
            let idx = ((t / t_max) * grid as f64).floor() as usize;
            let idx = idx.min(grid);
            1.0 - (-hazard[idx]).exp()
        };

        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let draws = 100_000;
        let mut samples = Vec::with_capacity(draws);
        for _ in 0..draws {
            match sample_first_arrival(&rate, &mut rng) {
                FirstArrival::At { time, .. } => samples.push(time),
                FirstArrival::Exhausted { .. } => {
                    panic!("horizon hazard is ~115, exhaustion should never happen")
                }
            }
        }
        samples.sort_by(f64::total_cmp);
        let mut ks: f64 = 0.0;
        for (i, t) in samples.iter().enumerate() {
            let f = oracle_cdf(*t);
            ks = ks
                .max((f - i as f64 / draws as f64).abs())
                .max((f - (i as f64 + 1.0) / draws as f64).abs());
        }
        assert!(ks < 0.01, "KS distance {ks}");
    }

    #[test]
    fn envelope_is_constant_for_point_posterior() {
        let env = Envelope::from_band([5.0, 0.0], [[0.0; 2]; 2], 0.0, 3.0, 0.01, 0.0, 1.0);
        for (_, v) in env.rate.knots() {
            assert!((v - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_clamps_to_zero_when_band_is_negative() {
        let env = Envelope::from_band([-100.0, 0.0], [[1.0, 0.0], [0.0, 1.0]], 0.0, 0.5, 0.05, 0.0, 2.0);
        assert_eq!(env.rate.total_hazard(), 0.0);
    }

    #[test]
    fn envelope_knots_match_pointwise_band() {
        let prior = RegressionPrior::default();
        let mut reg = RegressionState::new(prior);
        for (t, g) in [(0.1, 0.2), (0.4, 0.9), (0.9, 1.4)] {
            reg.observe(GradObservation {
                time: t,
                value: g,
                variance: 0.3,
            })
            .unwrap();
        }
        let k = 3.0;
        let rate = build_envelope(&reg, k, 0.01, 0.5, 0.3);
        for &(t, v) in rate.knots() {
            let (mean, rho) = reg.predictive(t, 0.3);
            assert!((v - (mean + k * rho).max(0.0)).abs() < 1e-12);
            // envelope dominates the positive part of the mean
            assert!(v >= mean.max(0.0) - 1e-12);
        }
    }

    #[test]
    fn envelope_extension_continues_the_grid() {
        let mut env = Envelope::from_band([0.5, 0.2], [[0.1, 0.0], [0.0, 0.1]], 0.05, 2.0, 0.1, 0.0, 1.0);
        let before = env.rate.knots().len();
        env.extend_to(2.0);
        assert!(env.rate.horizon() >= 2.0);
        assert!(env.rate.knots().len() > before);
        for pair in env.rate.knots().windows(2) {
            assert!((pair[1].0 - pair[0].0 - 0.1).abs() < 1e-9);
        }
    }

    #[test]
    fn affine_arrival_exponential_case() {
        let (t, rate) = affine_first_arrival(2.0, 0.0, 0.0, 1.0).unwrap();
        assert!((t - 0.5).abs() < 1e-12);
        assert!((rate - 2.0).abs() < 1e-12);
    }

    #[test]
    fn affine_arrival_with_dead_zone() {
        // rate 0 until t=1, then ramps with slope 1: hazard after kink is s^2/2
        let (t, _) = affine_first_arrival(-1.0, 1.0, 0.0, 2.0).unwrap();
        assert!((t - 3.0).abs() < 1e-12);
    }

    #[test]
    fn affine_arrival_floor_only() {
        let (t, rate) = affine_first_arrival(-5.0, 0.0, 0.25, 1.0).unwrap();
        assert!((t - 4.0).abs() < 1e-12);
        assert!((rate - 0.25).abs() < 1e-12);
        assert_eq!(affine_first_arrival(-5.0, 0.0, 0.0, 1.0), None);
    }

    #[test]
    fn affine_arrival_decreasing_exhausts_without_floor() {
        // rate = [1 - t]_+: total hazard 1/2
        assert_eq!(affine_first_arrival(1.0, -1.0, 0.0, 0.6), None);
        let (t, _) = affine_first_arrival(1.0, -1.0, 0.0, 0.375).unwrap();
        // integral of (1-s) to t is t - t^2/2 = 0.375 at t = 0.5
        assert!((t - 0.5).abs() < 1e-12);
        // with a floor the tail picks up the remainder
        let (t2, r2) = affine_first_arrival(1.0, -1.0, 0.5, 1.75).unwrap();
        // hazard to kink (t=1): 0.5*(1.5+0.5)*1 = 1.0; tail at rate 0.5 adds 0.75 over 1.5
        assert!((t2 - 2.5).abs() < 1e-12);
        assert!((r2 - 0.5).abs() < 1e-12);
    }

    /// Monte Carlo check of the affine sampler against direct hazard
    /// inversion on a matching piecewise-linear rate.
    #[test]
    fn affine_arrival_agrees_with_piecewise_rate() {
        let (a, b, floor) = (-0.5, 0.8, 0.3);
        let rate_fn = |t: f64| (a + b * t).max(0.0) + floor;
        let mut knots = vec![(0.0, rate_fn(0.0))];
        let kink: f64 = 0.625;
        knots.push((kink, rate_fn(kink)));
        knots.push((50.0, rate_fn(50.0)));
        let rate = PiecewiseLinearRate::new(knots).unwrap();
        for target in [0.05, 0.4, 1.3, 4.0, 9.0] {
            let (t_affine, r_affine) = affine_first_arrival(a, b, floor, target).unwrap();
            match rate.invert_hazard(0.0, target) {
                HazardInversion::Arrival { time, rate } => {
                    assert!((time - t_affine).abs() < 1e-9, "{time} vs {t_affine}");
                    assert!((rate - r_affine).abs() < 1e-9);
                }
                other => panic!("unexpected {other:?}"),
            }
        }
    }
}
