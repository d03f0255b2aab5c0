//! Estimators and diagnostics over recorded runs: continuous-trajectory
//! expectations, uniform path discretization, autocorrelation, per-data-point
//! NLL traces against the Laplace band, and KS/QQ utilities.

use serde::Serialize;
use thiserror::Error;

use crate::core::{EventKind, TrajectorySegment};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("adaptive quadrature did not reach tolerance {tolerance} within depth {max_depth}")]
    QuadratureFailure { tolerance: f64, max_depth: usize },
    #[error("series is constant; autocorrelation is undefined")]
    DegenerateSeries,
    #[error("empty trajectory")]
    EmptyTrajectory,
}

/// Expectation of a test function along the continuous trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousEstimate {
    pub value: f64,
    pub total_time: f64,
    pub segments: usize,
}

/// Standard normal CDF via the Abramowitz-Stegun 7.1.26 rational
/// approximation of erf (absolute error below 1.5e-7).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Standard normal quantile by bisection of [`normal_cdf`] on `[-12, 12]`.
pub fn normal_quantile(p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p));
    let (mut lo, mut hi) = (-12.0f64, 12.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

/// Time-averaged expectation `(1/T) sum_i integral_0^{d_i} f(w_i + v_i t) dt`
/// over the recorded flights, each 1D integral by adaptive Simpson (exact
/// for polynomials up to cubic without subdivision).
pub fn continuous_expectation(
    segments: &[TrajectorySegment],
    f: impl Fn(&[f64]) -> f64,
    tolerance: f64,
) -> Result<ContinuousEstimate, AnalysisError> {
    let total_time: f64 = segments.iter().map(|s| s.duration).sum();
    if total_time <= 0.0 {
        return Err(AnalysisError::EmptyTrajectory);
    }
    let mut sum = 0.0;
    let mut used = 0;
    for seg in segments {
        if seg.duration == 0.0 {
            continue;
        }
        used += 1;
        let g = |t: f64| {
            let w: Vec<f64> = seg
                .start
                .iter()
                .zip(&seg.velocity)
                .map(|(wi, vi)| wi + vi * t)
                .collect();
            f(&w)
        };
        sum += adaptive_simpson(&g, 0.0, seg.duration, tolerance, 40)?;
    }
    Ok(ContinuousEstimate {
        value: sum / total_time,
        total_time,
        segments: used,
    })
}

fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tolerance: f64,
    max_depth: usize,
) -> Result<f64, AnalysisError> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tolerance, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tolerance: f64,
    depth: usize,
) -> Result<f64, AnalysisError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tolerance {
        return Ok(left + right + err / 15.0);
    }
    if depth == 0 {
        return Err(AnalysisError::QuadratureFailure {
            tolerance,
            max_depth: 40,
        });
    }
    let half_tol = 0.5 * tolerance;
    Ok(
        simpson_rec(f, a, m, fa, flm, fm, left, half_tol, depth - 1)?
            + simpson_rec(f, m, b, fm, frm, fb, right, half_tol, depth - 1)?,
    )
}

/// Positions at times `j T / m`, `j = 0..m-1`, located by walking the
/// segments.
pub fn discretize(segments: &[TrajectorySegment], m: usize) -> Vec<Vec<f64>> {
    assert!(m >= 1);
    let total: f64 = segments.iter().map(|s| s.duration).sum();
    assert!(total > 0.0, "cannot discretize a zero-length trajectory");
    let mut out = Vec::with_capacity(m);
    let mut seg_idx = 0;
    let mut seg_start_time = 0.0;
    for j in 0..m {
        let t = total * j as f64 / m as f64;
        while seg_idx + 1 < segments.len()
            && seg_start_time + segments[seg_idx].duration <= t
        {
            seg_start_time += segments[seg_idx].duration;
            seg_idx += 1;
        }
        let seg = &segments[seg_idx];
        let local = (t - seg_start_time).clamp(0.0, seg.duration);
        out.push(
            seg.start
                .iter()
                .zip(&seg.velocity)
                .map(|(wi, vi)| wi + vi * local)
                .collect(),
        );
    }
    out
}

/// Fraction of trajectory time with coordinate `coord` below `threshold`,
/// exact per segment (a linear flight crosses the threshold at most once).
pub fn fraction_below(segments: &[TrajectorySegment], coord: usize, threshold: f64) -> f64 {
    let mut below = 0.0;
    let mut total = 0.0;
    for seg in segments {
        if seg.duration == 0.0 {
            continue;
        }
        total += seg.duration;
        let w0 = seg.start[coord];
        let v = seg.velocity[coord];
        let w1 = w0 + v * seg.duration;
        if v == 0.0 {
            if w0 < threshold {
                below += seg.duration;
            }
            continue;
        }
        let t_cross = ((threshold - w0) / v).clamp(0.0, seg.duration);
        if w0 < threshold {
            below += if w1 < threshold { seg.duration } else { t_cross };
        } else if w1 < threshold {
            below += seg.duration - t_cross;
        }
    }
    if total > 0.0 {
        below / total
    } else {
        0.0
    }
}

/// Normalized autocorrelation with the biased `1/L` autocovariance
/// normalization; lag zero is one.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>, AnalysisError> {
    assert!(series.len() > max_lag);
    let len = series.len() as f64;
    let mean = series.iter().sum::<f64>() / len;
    let var = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / len;
    if var <= 0.0 {
        return Err(AnalysisError::DegenerateSeries);
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let cov = series[..series.len() - lag]
            .iter()
            .zip(&series[lag..])
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / len;
        out.push(cov / var);
    }
    Ok(out)
}

/// Center and spread of the per-data-point NLL band under the Laplace
/// approximation: the NLL of approximate posterior draws is distributed as
/// `NLL(map)/N + chi2(dim) / (2N)`, so the band is
/// `center = NLL(map)/N + dim/(2N)` and `spread = sqrt(dim/2) / N`.
pub fn laplace_band(nll_map_per_datum: f64, dim: usize, n_data: usize) -> (f64, f64) {
    let center = nll_map_per_datum + dim as f64 / (2.0 * n_data as f64);
    let spread = (dim as f64 / 2.0).sqrt() / n_data as f64;
    (center, spread)
}

/// Per-epoch trace of a scalar function of position over a recorded run.
///
/// Each segment contributes its trapezoid time average weighted by the
/// mini-batch evaluations it consumed; values are bucketed by cumulative
/// epochs so that runs of different samplers are comparable at equal data
/// cost. Returns `(epoch_end, mean_value)` pairs.
pub fn trace_by_epoch(
    segments: &[TrajectorySegment],
    f: impl Fn(&[f64]) -> f64,
    n_data: usize,
) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut bucket_weight = 0.0;
    let mut bucket_sum = 0.0;
    let mut evals: u64 = 0;
    let mut next_epoch = 1.0;
    for seg in segments {
        let value = if seg.duration > 0.0 {
            0.5 * (f(&seg.start) + f(&seg.end()))
        } else {
            f(&seg.start)
        };
        let weight = seg.minibatch_evals as f64;
        if weight > 0.0 {
            bucket_sum += weight * value;
            bucket_weight += weight;
        }
        evals += seg.minibatch_evals;
        let epoch = evals as f64 / n_data as f64;
        if epoch >= next_epoch && bucket_weight > 0.0 {
            out.push((epoch, bucket_sum / bucket_weight));
            bucket_sum = 0.0;
            bucket_weight = 0.0;
            next_epoch = epoch.floor() + 1.0;
        }
    }
    if bucket_weight > 0.0 {
        out.push((evals as f64 / n_data as f64, bucket_sum / bucket_weight));
    }
    out
}

/// Per-epoch trace over discrete sampler output: positions visited in order,
/// each costing `evals_per_step` data-point evaluations.
pub fn trace_by_epoch_positions(
    positions: &[Vec<f64>],
    f: impl Fn(&[f64]) -> f64,
    evals_per_step: u64,
    n_data: usize,
) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut bucket_sum = 0.0;
    let mut bucket_count = 0u64;
    let mut evals = 0u64;
    let mut next_epoch = 1.0;
    for w in positions {
        bucket_sum += f(w);
        bucket_count += 1;
        evals += evals_per_step;
        let epoch = evals as f64 / n_data as f64;
        if epoch >= next_epoch {
            out.push((epoch, bucket_sum / bucket_count as f64));
            bucket_sum = 0.0;
            bucket_count = 0;
            next_epoch = epoch.floor() + 1.0;
        }
    }
    if bucket_count > 0 {
        out.push((evals as f64 / n_data as f64, bucket_sum / bucket_count as f64));
    }
    out
}

/// Sup-norm distance between the empirical CDF of `samples` and an exact CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!samples.is_empty());
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        d = d
            .max((f - i as f64 / n).abs())
            .max((f - (i as f64 + 1.0) / n).abs());
    }
    d
}

/// Paired quantiles of two samples for QQ plots.
pub fn qq_points(a: &[f64], b: &[f64], quantiles: usize) -> Vec<(f64, f64)> {
    assert!(!a.is_empty() && !b.is_empty() && quantiles >= 2);
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let pick = |s: &[f64], q: f64| {
        let idx = (q * (s.len() - 1) as f64).round() as usize;
        s[idx]
    };
    (0..quantiles)
        .map(|i| {
            let q = (i as f64 + 0.5) / quantiles as f64;
            (pick(&sa, q), pick(&sb, q))
        })
        .collect()
}

/// Travel times between consecutive bounces, accumulated through rejected
/// proposals and auxiliary observations; the count restarts at refreshes.
pub fn inter_bounce_times(segments: &[TrajectorySegment]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut acc = 0.0;
    let mut live = false;
    for seg in segments {
        acc += seg.duration;
        match seg.event {
            EventKind::Bounce => {
                if live {
                    out.push(acc);
                }
                acc = 0.0;
                live = true;
            }
            EventKind::Refresh => {
                acc = 0.0;
                live = false;
            }
            _ => {}
        }
    }
    out
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// One ACF series with a label, for the diagnostics report.
#[derive(Debug, Clone, Serialize)]
pub struct AcfSeries {
    pub label: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KsEntry {
    pub label: String,
    pub distance: f64,
}

/// Diagnostics computed from one recorded run.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub violation_rate: f64,
    pub epochs: f64,
    pub bounces: u64,
    pub proposals: u64,
    pub refreshes: u64,
    pub aux_observations: u64,
    pub nll_trace: Vec<(f64, f64)>,
    pub acf: Vec<AcfSeries>,
    pub ks: Vec<KsEntry>,
    pub qq: Vec<(f64, f64)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn segment(start: Vec<f64>, velocity: Vec<f64>, duration: f64) -> TrajectorySegment {
        TrajectorySegment {
            start,
            velocity,
            duration,
            event: EventKind::Bounce,
            minibatch_evals: 0,
        }
    }

    #[test]
    fn constant_function_integrates_exactly() {
        let segs = vec![
            segment(vec![0.0], vec![1.0], 0.7),
            segment(vec![0.7], vec![-1.0], 1.3),
        ];
        let est = continuous_expectation(&segs, |_| 2.5, 1e-10).unwrap();
        assert_eq!(est.value, 2.5);
        assert!((est.total_time - 2.0).abs() < 1e-15);
    }

    #[test]
    fn linear_function_single_segment() {
        let segs = vec![segment(vec![0.0], vec![1.0], 2.0)];
        let est = continuous_expectation(&segs, |w| w[0], 1e-12).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_function_matches_riemann_oracle() {
        let segs = vec![
            segment(vec![0.1, 0.0], vec![0.6, 0.8], 1.1),
            segment(vec![0.76, 0.88], vec![-0.8, 0.6], 0.9),
        ];
        let f = |w: &[f64]| (w[0] * 37.0).sin() + 0.3 * (w[1] * 11.0).cos();
        let est = continuous_expectation(&segs, f, 1e-10).unwrap();
        // fine-grid Riemann oracle
        let mut sum = 0.0;
        let grid = 400_000;
        for seg in &segs {
            for j in 0..grid {
                let t = seg.duration * (j as f64 + 0.5) / grid as f64;
                let w: Vec<f64> = seg
                    .start
                    .iter()
                    .zip(&seg.velocity)
                    .map(|(wi, vi)| wi + vi * t)
                    .collect();
                sum += f(&w) * seg.duration / grid as f64;
            }
        }
        let oracle = sum / 2.0;
        assert!((est.value - oracle).abs() < 1e-6, "{} vs {oracle}", est.value);
    }

    #[test]
    fn discretize_walks_segments() {
        let segs = vec![segment(vec![0.0], vec![1.0], 2.0)];
        let pts = discretize(&segs, 2);
        assert_eq!(pts.len(), 2);
        assert!((pts[0][0] - 0.0).abs() < 1e-12);
        assert!((pts[1][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn discretize_total_time_is_consistent() {
        let segs = vec![
            segment(vec![0.0], vec![1.0], 0.3),
            segment(vec![0.3], vec![1.0], 0.9),
            segment(vec![1.2], vec![-1.0], 0.5),
        ];
        let m = 1000;
        let pts = discretize(&segs, m);
        assert_eq!(pts.len(), m);
        // last point is within one step of the trajectory endpoint
        let t_last = 1.7 * (m as f64 - 1.0) / m as f64;
        let expected = if t_last <= 1.2 { t_last } else { 1.2 - (t_last - 1.2) };
        assert!((pts[m - 1][0] - expected).abs() < 1e-9);
    }

    #[test]
    fn discretized_mean_converges_to_continuous_estimate() {
        let segs = vec![
            segment(vec![0.0], vec![1.0], 1.0),
            segment(vec![1.0], vec![-0.5], 2.0),
        ];
        let f = |w: &[f64]| w[0] * w[0];
        let exact = continuous_expectation(&segs, f, 1e-12).unwrap().value;
        let mut last_err = f64::INFINITY;
        for m in [100, 1000, 10000] {
            let pts = discretize(&segs, m);
            let mean = pts.iter().map(|w| f(w)).sum::<f64>() / m as f64;
            let err = (mean - exact).abs();
            assert!(err < last_err + 1e-12);
            last_err = err;
        }
        assert!(last_err < 1e-3);
    }

    #[test]
    fn fraction_below_handles_crossings() {
        // coordinate goes 0 -> 2 over 2 time units: below 1 for half the time
        let segs = vec![segment(vec![0.0], vec![1.0], 2.0)];
        assert!((fraction_below(&segs, 0, 1.0) - 0.5).abs() < 1e-12);
        // descending crossing
        let segs = vec![segment(vec![2.0], vec![-1.0], 2.0)];
        assert!((fraction_below(&segs, 0, 1.0) - 0.5).abs() < 1e-12);
        // no crossing
        let segs = vec![segment(vec![5.0], vec![0.0], 3.0)];
        assert_eq!(fraction_below(&segs, 0, 1.0), 0.0);
    }

    #[test]
    fn acf_of_constant_series_is_degenerate() {
        assert_eq!(
            acf(&[1.0; 50], 3),
            Err(AnalysisError::DegenerateSeries)
        );
    }

    #[test]
    fn acf_of_white_noise_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let series: Vec<f64> = (0..100_000)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let rho = acf(&series, 5).unwrap();
        assert_eq!(rho[0], 1.0);
        for r in &rho[1..] {
            assert!(r.abs() < 0.02, "lag correlation {r}");
        }
    }

    #[test]
    fn acf_of_ar1_matches_coefficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut x = 0.0;
        let series: Vec<f64> = (0..200_000)
            .map(|_| {
                let e: f64 = rng.sample(rand_distr::StandardNormal);
                x = 0.5 * x + e;
                x
            })
            .collect();
        let rho = acf(&series, 2).unwrap();
        assert!((rho[1] - 0.5).abs() < 0.02, "lag-1 {}", rho[1]);
    }

    #[test]
    fn laplace_band_arithmetic() {
        let (center, spread) = laplace_band(0.25, 20, 1000);
        assert!((center - 0.26).abs() < 1e-15);
        assert!((spread - 10.0f64.sqrt() / 1000.0).abs() < 1e-12);
    }

    #[test]
    fn ks_of_exact_samples_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let samples: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        let d = ks_distance(&samples, |x| x.clamp(0.0, 1.0));
        assert!(d < 0.006, "KS {d}");
    }

    #[test]
    fn ks_of_point_mass_is_large_and_bounded() {
        let samples = vec![0.5; 200];
        let d = ks_distance(&samples, |x| x.clamp(0.0, 1.0));
        assert!(d >= 0.5 && d <= 1.0);
    }

    #[test]
    fn normal_cdf_reference_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-9);
        assert!((normal_cdf(1.0) - 0.841344746).abs() < 1e-6);
        assert!((normal_cdf(-1.96) - 0.024997895).abs() < 1e-6);
        assert!((normal_cdf(3.0) - 0.998650102).abs() < 1e-6);
    }

    #[test]
    fn inter_bounce_times_reset_on_refresh() {
        let mk = |event, duration| TrajectorySegment {
            start: vec![0.0],
            velocity: vec![1.0],
            duration,
            event,
            minibatch_evals: 0,
        };
        let segs = vec![
            mk(EventKind::Bounce, 1.0),
            mk(EventKind::ProposalRejected, 0.5),
            mk(EventKind::Bounce, 0.5),
            mk(EventKind::Refresh, 2.0),
            mk(EventKind::Bounce, 0.25),
            mk(EventKind::Bounce, 0.75),
        ];
        let times = inter_bounce_times(&segs);
        assert_eq!(times, vec![1.0, 0.75]);
    }

    #[test]
    fn epoch_trace_buckets_by_data_cost() {
        let mk = |x: f64, evals| TrajectorySegment {
            start: vec![x],
            velocity: vec![0.0],
            duration: 1.0,
            event: EventKind::Bounce,
            minibatch_evals: evals,
        };
        let segs = vec![mk(1.0, 50), mk(2.0, 50), mk(3.0, 50), mk(5.0, 50)];
        let trace = trace_by_epoch(&segs, |w| w[0], 100);
        assert_eq!(trace.len(), 2);
        assert!((trace[0].0 - 1.0).abs() < 1e-12);
        assert!((trace[0].1 - 1.5).abs() < 1e-12);
        assert!((trace[1].1 - 4.0).abs() < 1e-12);
    }
}
