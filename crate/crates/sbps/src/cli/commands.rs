use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{config::RunConfig, plot, trajectory, CliError, SamplerKind, TargetKind};
use crate::analysis::{
    self, acf, discretize, inter_bounce_times, ks_distance, laplace_band, normal_quantile,
    AcfSeries, DiagnosticsReport, KsEntry,
};
use crate::core::{EventKind, RngStream, TargetModel, TrajectorySegment};
use crate::samplers::{
    run_bps, run_lipsbps, run_msgnht, run_psbps, run_sbps, run_sgld, BaselineConfig, BpsConfig,
    Run, RunSummary, SbpsConfig,
};
use crate::targets::{
    GaussianTarget, HyperboloidTarget, LaplaceReference, LogisticRegressionTarget,
    MultimodalTarget,
};

/// Everything cmd_run leaves on disk.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub trajectory_path: PathBuf,
    pub summary_path: PathBuf,
    pub summary: RunSummary,
}

/// Summary JSON schema: run accounting plus the config echo that reproduces
/// the run bit-exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub epochs: f64,
    pub bounces: u64,
    pub proposals: u64,
    pub violations: u64,
    pub violation_rate: f64,
    pub refreshes: u64,
    pub aux_observations: u64,
    pub data_evals: u64,
    pub total_time: f64,
    pub wall_time_s: f64,
    pub seed: u64,
    pub config: RunConfig,
}

enum BuiltTarget {
    Gaussian(GaussianTarget),
    Logistic(LogisticRegressionTarget),
    Hyperboloid(HyperboloidTarget),
    Multimodal(MultimodalTarget),
}

impl BuiltTarget {
    fn as_model(&self) -> &dyn TargetModel {
        match self {
            BuiltTarget::Gaussian(t) => t,
            BuiltTarget::Logistic(t) => t,
            BuiltTarget::Hyperboloid(t) => t,
            BuiltTarget::Multimodal(t) => t,
        }
    }
}

fn build_target(config: &RunConfig) -> Result<BuiltTarget, CliError> {
    Ok(match config.target {
        TargetKind::Gaussian => {
            let variances = if config.variances.is_empty() {
                vec![1.0; config.dim]
            } else {
                config.variances.clone()
            };
            BuiltTarget::Gaussian(
                GaussianTarget::new(vec![0.0; config.dim], variances)
                    .with_noise(config.noise_sd),
            )
        }
        TargetKind::Logistic => BuiltTarget::Logistic(
            LogisticRegressionTarget::generate(config.dim, config.n_data, config.data_seed)
                .with_prior_var(config.prior_var),
        ),
        TargetKind::Hyperboloid => {
            let mut rng = RngStream::new(config.data_seed, 0).rng();
            BuiltTarget::Hyperboloid(HyperboloidTarget::generate(config.n_data, &mut rng))
        }
        TargetKind::Multimodal => {
            let mut rng = RngStream::new(config.data_seed, 0).rng();
            BuiltTarget::Multimodal(MultimodalTarget::generate(
                config.dim,
                config.n_data,
                config.sigma_l,
                config.sigma_mu,
                &mut rng,
            ))
        }
    })
}

fn sbps_config(config: &RunConfig, initial: Option<Vec<f64>>) -> SbpsConfig {
    SbpsConfig {
        band_multiple: config.band_multiple,
        batch_size: config.batch_size,
        refresh_rate: config.refresh_rate,
        grid_dt: config.grid_dt,
        aux_p_max: config.aux_p_max,
        total_epochs: config.epochs,
        seed: config.seed,
        hyper_lr: config.hyper_lr,
        initial_position: initial,
        ..SbpsConfig::default()
    }
}

fn initial_position(
    config: &RunConfig,
    target: &BuiltTarget,
) -> Result<Option<Vec<f64>>, CliError> {
    if !config.init_at_map {
        return Ok(None);
    }
    match target {
        BuiltTarget::Logistic(t) => Ok(Some(t.laplace_reference()?.map)),
        _ => Err(CliError::Validation(
            "init_at_map requires the logistic target".into(),
        )),
    }
}

/// Discrete chains as unit-duration linear hops so they share the trajectory
/// file format: velocity is the step displacement, each hop costs one batch.
fn chain_to_segments(positions: &[Vec<f64>], evals_per_step: u64) -> Vec<TrajectorySegment> {
    let mut out = Vec::with_capacity(positions.len());
    for (i, w) in positions.iter().enumerate() {
        if i + 1 < positions.len() {
            let velocity: Vec<f64> = positions[i + 1]
                .iter()
                .zip(w)
                .map(|(next, cur)| next - cur)
                .collect();
            out.push(TrajectorySegment {
                start: w.clone(),
                velocity,
                duration: 1.0,
                event: EventKind::Refresh,
                minibatch_evals: evals_per_step,
            });
        } else {
            out.push(TrajectorySegment {
                start: w.clone(),
                velocity: vec![0.0; w.len()],
                duration: 0.0,
                event: EventKind::RunEnd,
                minibatch_evals: evals_per_step,
            });
        }
    }
    out
}

fn execute(config: &RunConfig) -> Result<Run, CliError> {
    let target = build_target(config)?;
    let initial = initial_position(config, &target)?;
    let model = target.as_model();
    let run = match config.sampler {
        SamplerKind::Bps => {
            let bps = BpsConfig {
                refresh_rate: config.refresh_rate,
                max_events: config.max_events,
                seed: config.seed,
                noise_pad_z: config.noise_pad_z,
                initial_position: initial,
            };
            run_bps(model, &bps)?
        }
        SamplerKind::Sbps => run_sbps(model, &sbps_config(config, initial))?,
        SamplerKind::Psbps => run_psbps(model, &sbps_config(config, initial))?,
        SamplerKind::Lipsbps => {
            let BuiltTarget::Logistic(t) = &target else {
                return Err(CliError::Validation(
                    "lipsbps requires the logistic target".into(),
                ));
            };
            run_lipsbps(t, config.batch_size, config.epochs, config.seed, initial)?
        }
        SamplerKind::Sgld | SamplerKind::Msgnht => {
            let baseline = BaselineConfig {
                step_size: config.step_size,
                batch_size: config.batch_size,
                steps: config.steps,
                seed: config.seed,
                initial_position: initial,
                ..BaselineConfig::default()
            };
            let chain = if config.sampler == SamplerKind::Sgld {
                run_sgld(model, &baseline)?
            } else {
                run_msgnht(model, &baseline)?
            };
            Run {
                segments: chain_to_segments(&chain.positions, config.batch_size as u64),
                summary: chain.summary,
            }
        }
    };
    Ok(run)
}

/// Runs one configuration and writes `trajectory.csv` plus `summary.json`
/// into the output directory.
pub fn cmd_run(config: &RunConfig) -> Result<RunArtifacts, CliError> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir)?;
    let started = Instant::now();
    let run = execute(config)?;
    let wall_time_s = started.elapsed().as_secs_f64();

    let trajectory_path = config.out_dir.join("trajectory.csv");
    trajectory::write_trajectory(&trajectory_path, &run.segments)?;
    let record = RunRecord {
        epochs: run.summary.epochs,
        bounces: run.summary.bounces,
        proposals: run.summary.proposals,
        violations: run.summary.violations,
        violation_rate: run.summary.violation_rate(),
        refreshes: run.summary.refreshes,
        aux_observations: run.summary.aux_observations,
        data_evals: run.summary.data_evals,
        total_time: run.summary.total_time,
        wall_time_s,
        seed: config.seed,
        config: config.clone(),
    };
    let summary_path = config.out_dir.join("summary.json");
    let json = serde_json::to_string_pretty(&record)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(&summary_path, json)?;
    Ok(RunArtifacts {
        trajectory_path,
        summary_path,
        summary: run.summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    BandMultiple,
    BatchSize,
    StepSize,
}

impl ScanAxis {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "k" | "band_multiple" => ScanAxis::BandMultiple,
            "n" | "batch_size" => ScanAxis::BatchSize,
            "step_size" | "eta" => ScanAxis::StepSize,
            other => {
                return Err(CliError::Validation(format!(
                    "unknown scan axis '{other}' (expected k|n|step_size)"
                )))
            }
        })
    }

    fn label(self) -> &'static str {
        match self {
            ScanAxis::BandMultiple => "band_multiple",
            ScanAxis::BatchSize => "batch_size",
            ScanAxis::StepSize => "step_size",
        }
    }

    fn apply(self, config: &mut RunConfig, value: f64) {
        match self {
            ScanAxis::BandMultiple => config.band_multiple = value,
            ScanAxis::BatchSize => config.batch_size = value.round() as usize,
            ScanAxis::StepSize => config.step_size = value,
        }
    }
}

/// Per-value scan aggregate (median over seeds).
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub value: f64,
    pub completed: usize,
    pub violation_rate: f64,
    pub mean_inter_bounce_time: f64,
    pub nll_per_datum_variance: f64,
    pub errors: Vec<String>,
}

/// Variance of the per-data-point NLL over post-burn-in samples of a run
/// (uniform discretization of continuous paths; the recorded positions for
/// discrete chains are already samples).
fn nll_sample_variance(segments: &[TrajectorySegment], target: &LogisticRegressionTarget) -> f64 {
    let total: f64 = segments.iter().map(|s| s.duration).sum();
    if total <= 0.0 {
        return f64::NAN;
    }
    let points = discretize(segments, 4000);
    let kept = &points[points.len() / 10..];
    let values: Vec<f64> = kept.iter().map(|w| target.nll_per_datum(w)).collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64
}

/// One run per (value, seed) cell, cells run concurrently up to the worker
/// cap; per-value medians land in `scan.csv` in the output directory.
/// Failures are recorded per row and the scan continues.
pub fn cmd_scan(
    base: &RunConfig,
    axis: ScanAxis,
    values: &[f64],
    seeds: u64,
    out_dir: &Path,
) -> Result<Vec<ScanRow>, CliError> {
    if values.is_empty() || seeds == 0 {
        return Err(CliError::Validation(
            "scan needs at least one value and one seed".into(),
        ));
    }
    std::fs::create_dir_all(out_dir)?;

    struct Cell {
        value: f64,
        result: Result<(RunSummary, f64, f64), String>,
    }

    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let cells: Vec<(f64, u64)> = values
        .iter()
        .flat_map(|v| (0..seeds).map(move |s| (*v, s)))
        .collect();
    let mut results: Vec<Option<Cell>> = Vec::with_capacity(cells.len());
    results.resize_with(cells.len(), || None);

    let logistic_ref = match base.target {
        TargetKind::Logistic => Some(
            LogisticRegressionTarget::generate(base.dim, base.n_data, base.data_seed)
                .with_prior_var(base.prior_var),
        ),
        _ => None,
    };

    std::thread::scope(|scope| {
        for (chunk_idx, chunk) in cells.chunks(workers).enumerate() {
            let mut handles = Vec::with_capacity(chunk.len());
            for (offset, (value, seed)) in chunk.iter().enumerate() {
                let index = chunk_idx * workers + offset;
                let logistic_ref = &logistic_ref;
                handles.push((
                    index,
                    *value,
                    scope.spawn(move || -> Result<(RunSummary, f64, f64), String> {
                        let mut config = base.clone();
                        axis.apply(&mut config, *value);
                        config.seed = base.seed + seed;
                        config.validate().map_err(|e| e.to_string())?;
                        let run = execute(&config).map_err(|e| e.to_string())?;
                        let mut gaps = inter_bounce_times(&run.segments);
                        let mean_gap = if gaps.is_empty() {
                            f64::NAN
                        } else {
                            gaps.iter().sum::<f64>() / gaps.len() as f64
                        };
                        gaps.clear();
                        let nll_var = logistic_ref
                            .as_ref()
                            .map(|t| nll_sample_variance(&run.segments, t))
                            .unwrap_or(f64::NAN);
                        Ok((run.summary, mean_gap, nll_var))
                    }),
                ));
            }
            for (index, value, handle) in handles {
                let result = handle.join().unwrap_or_else(|_| Err("worker panicked".into()));
                results[index] = Some(Cell { value, result });
            }
        }
    });

    let mut rows = Vec::with_capacity(values.len());
    for value in values {
        let mut violation_rates = Vec::new();
        let mut gaps = Vec::new();
        let mut nll_vars = Vec::new();
        let mut errors = Vec::new();
        for cell in results.iter().flatten() {
            if cell.value != *value {
                continue;
            }
            match &cell.result {
                Ok((summary, gap, nll_var)) => {
                    violation_rates.push(summary.violation_rate());
                    if gap.is_finite() {
                        gaps.push(*gap);
                    }
                    if nll_var.is_finite() {
                        nll_vars.push(*nll_var);
                    }
                }
                Err(e) => errors.push(e.clone()),
            }
        }
        let med = |v: &mut Vec<f64>| {
            if v.is_empty() {
                f64::NAN
            } else {
                analysis::median(v)
            }
        };
        rows.push(ScanRow {
            value: *value,
            completed: violation_rates.len(),
            violation_rate: med(&mut violation_rates),
            mean_inter_bounce_time: med(&mut gaps),
            nll_per_datum_variance: med(&mut nll_vars),
            errors,
        });
    }

    // step-size selection rule: largest step whose sample NLL variance stays
    // below the Laplace value d/(2N^2)
    let laplace_var = base.dim as f64 / (2.0 * (base.n_data as f64).powi(2));
    let selected = if axis == ScanAxis::StepSize {
        rows.iter()
            .filter(|r| r.nll_per_datum_variance.is_finite())
            .filter(|r| r.nll_per_datum_variance <= laplace_var)
            .map(|r| r.value)
            .fold(f64::NAN, f64::max)
    } else {
        f64::NAN
    };

    let path = out_dir.join("scan.csv");
    let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(
        out,
        "axis,value,completed,violation_rate,mean_inter_bounce_time,nll_per_datum_variance,laplace_nll_variance,selected,errors"
    )?;
    for row in &rows {
        writeln!(
            out,
            "{},{:?},{},{:?},{:?},{:?},{:?},{},{}",
            axis.label(),
            row.value,
            row.completed,
            row.violation_rate,
            row.mean_inter_bounce_time,
            row.nll_per_datum_variance,
            laplace_var,
            if axis == ScanAxis::StepSize && row.value == selected {
                "yes"
            } else {
                ""
            },
            row.errors.join("; ").replace(',', ";"),
        )?;
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct DiagOptions {
    pub max_lag: usize,
    pub discretize_points: usize,
}

impl Default for DiagOptions {
    fn default() -> Self {
        DiagOptions {
            max_lag: 200,
            discretize_points: 20_000,
        }
    }
}

/// Reads a recorded run, computes NLL traces, ACFs and KS/QQ data, and
/// writes `diagnostics.json` plus plot-ready CSV and SVG files next to it.
pub fn cmd_diag(
    trajectory_path: &Path,
    config: &RunConfig,
    record: Option<&RunRecord>,
    options: &DiagOptions,
    out_dir: &Path,
) -> Result<DiagnosticsReport, CliError> {
    let segments = trajectory::read_trajectory(trajectory_path)?;
    std::fs::create_dir_all(out_dir)?;
    let target = build_target(config)?;

    let mut bounces = 0;
    let mut rejects = 0;
    let mut refreshes = 0;
    let mut aux = 0;
    for seg in &segments {
        match seg.event {
            EventKind::Bounce => bounces += 1,
            EventKind::ProposalRejected => rejects += 1,
            EventKind::Refresh => refreshes += 1,
            EventKind::AuxObservation => aux += 1,
            EventKind::RunEnd => {}
        }
    }
    let evals: u64 = segments.iter().map(|s| s.minibatch_evals).sum();
    let epochs = evals as f64 / config.n_data as f64;

    // NLL trace and Laplace band (logistic targets)
    let mut nll_trace = Vec::new();
    let mut laplace: Option<LaplaceReference> = None;
    if let BuiltTarget::Logistic(t) = &target {
        nll_trace = analysis::trace_by_epoch(&segments, |w| t.nll_per_datum(w), config.n_data);
        laplace = Some(t.laplace_reference()?);
    }

    // coordinate series for ACF / KS / QQ
    let total_time: f64 = segments.iter().map(|s| s.duration).sum();
    let mut acf_series = Vec::new();
    let mut ks_entries = Vec::new();
    let mut qq = Vec::new();
    if total_time > 0.0 {
        let points = discretize(&segments, options.discretize_points.max(options.max_lag + 2));
        let burn = points.len() / 10;
        let kept = &points[burn..];
        let coord0: Vec<f64> = kept.iter().map(|w| w[0]).collect();
        if let Ok(values) = acf(&coord0, options.max_lag) {
            acf_series.push(AcfSeries {
                label: "w_0".into(),
                values,
            });
        }
        if let Some(laplace) = &laplace {
            // projections on the extreme curvature directions of the
            // Laplace Hessian (largest eigenvalue = narrowest direction)
            let dim = config.dim;
            let narrow = crate::linalg::dominant_eigvec(&laplace.hessian, dim, 400);
            let wide = crate::linalg::smallest_eigvec(&laplace.hessian, dim, 400)
                .unwrap_or_else(|| narrow.clone());
            for (label, direction) in [("narrowest", &narrow), ("widest", &wide)] {
                let series: Vec<f64> = kept
                    .iter()
                    .map(|w| {
                        w.iter()
                            .zip(direction.iter())
                            .map(|(wi, di)| (wi - 0.0) * di)
                            .sum()
                    })
                    .collect();
                if let Ok(values) = acf(&series, options.max_lag) {
                    acf_series.push(AcfSeries {
                        label: format!("projection_{label}"),
                        values,
                    });
                }
            }
        }
        if let BuiltTarget::Gaussian(t) = &target {
            for coord in 0..config.dim {
                let series: Vec<f64> = kept.iter().map(|w| w[coord]).collect();
                ks_entries.push(KsEntry {
                    label: format!("w_{coord}"),
                    distance: ks_distance(&series, |x| t.marginal_cdf(coord, x)),
                });
            }
            // QQ of the first coordinate against exact marginal quantiles
            let mut sorted = coord0.clone();
            sorted.sort_by(f64::total_cmp);
            let sd = t.marginal_variance(0).sqrt();
            qq = (0..200)
                .map(|i| {
                    let p = (i as f64 + 0.5) / 200.0;
                    let exact = normal_quantile(p) * sd;
                    let idx = (p * (sorted.len() - 1) as f64).round() as usize;
                    (exact, sorted[idx])
                })
                .collect();
        }
    }

    let report = DiagnosticsReport {
        violation_rate: record.map_or(f64::NAN, |r| r.violation_rate),
        epochs,
        bounces,
        proposals: bounces + rejects,
        refreshes,
        aux_observations: aux,
        nll_trace,
        acf: acf_series,
        ks: ks_entries,
        qq,
    };

    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(out_dir.join("diagnostics.json"), json)?;

    // plot-ready CSVs
    if !report.nll_trace.is_empty() {
        let mut out = std::io::BufWriter::new(std::fs::File::create(out_dir.join("nll_trace.csv"))?);
        writeln!(out, "epoch,nll_per_datum")?;
        for (e, v) in &report.nll_trace {
            writeln!(out, "{e:?},{v:?}")?;
        }
    }
    if !report.acf.is_empty() {
        let mut out = std::io::BufWriter::new(std::fs::File::create(out_dir.join("acf.csv"))?);
        let labels: Vec<&str> = report.acf.iter().map(|s| s.label.as_str()).collect();
        writeln!(out, "lag,{}", labels.join(","))?;
        for lag in 0..=options.max_lag {
            let row: Vec<String> = report
                .acf
                .iter()
                .map(|s| format!("{:?}", s.values.get(lag).copied().unwrap_or(f64::NAN)))
                .collect();
            writeln!(out, "{lag},{}", row.join(","))?;
        }
    }

    // plots
    if !report.nll_trace.is_empty() {
        let mut series = vec![plot::Series::line("run", report.nll_trace.clone())];
        if let Some(laplace) = &laplace {
            let (center, spread) =
                laplace_band(laplace.nll_at_map / config.n_data as f64, config.dim, config.n_data);
            let max_e = report.nll_trace.last().map(|p| p.0).unwrap_or(1.0);
            for (label, offset) in [("band center", 0.0), ("band +3sd", 3.0), ("band -3sd", -3.0)]
            {
                series.push(plot::Series::line(
                    label,
                    vec![(0.0, center + offset * spread), (max_e, center + offset * spread)],
                ));
            }
        }
        plot::write_svg(
            &out_dir.join("nll_trace.svg"),
            "per-data-point NLL",
            "epochs",
            "NLL / N",
            &series,
        )?;
    }
    if !report.acf.is_empty() {
        let series: Vec<plot::Series> = report
            .acf
            .iter()
            .map(|s| {
                plot::Series::line(
                    s.label.clone(),
                    s.values
                        .iter()
                        .enumerate()
                        .map(|(lag, v)| (lag as f64, *v))
                        .collect(),
                )
            })
            .collect();
        plot::write_svg(
            &out_dir.join("acf.svg"),
            "autocorrelation",
            "lag",
            "ACF",
            &series,
        )?;
    }
    if total_time > 0.0 && config.dim >= 2 {
        let points = discretize(&segments, 4000);
        let xy: Vec<(f64, f64)> = points.iter().map(|w| (w[0], w[1])).collect();
        plot::write_svg(
            &out_dir.join("trace.svg"),
            "trajectory (first two coordinates)",
            "w_0",
            "w_1",
            &[plot::Series::line("path", xy)],
        )?;
    }
    if !report.qq.is_empty() {
        let lo = report.qq.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = report.qq.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        plot::write_svg(
            &out_dir.join("qq.svg"),
            "QQ vs exact marginal (w_0)",
            "exact quantile",
            "empirical quantile",
            &[
                plot::Series::scatter("quantiles", report.qq.clone()),
                plot::Series::line("diagonal", vec![(lo, lo), (hi, hi)]),
            ],
        )?;
    }

    Ok(report)
}

/// Loads the summary JSON written by [`cmd_run`].
pub fn load_record(path: &Path) -> Result<RunRecord, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_dir(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("sbps_cmd_{name}"));
        std::fs::remove_dir_all(&dir).ok();
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn small_logistic_config(dir: &Path) -> RunConfig {
        let mut config = RunConfig::default();
        config.dim = 4;
        config.n_data = 80;
        config.batch_size = 8;
        config.epochs = 3.0;
        config.out_dir = dir.to_path_buf();
        config
    }

    #[test]
    fn run_writes_identical_files_for_identical_seeds() {
        let dir = temp_dir("replay");
        let config = small_logistic_config(&dir.join("a"));
        let first = cmd_run(&config).unwrap();
        let mut again = config.clone();
        again.out_dir = dir.join("b");
        let second = cmd_run(&again).unwrap();
        let a = std::fs::read(&first.trajectory_path).unwrap();
        let b = std::fs::read(&second.trajectory_path).unwrap();
        assert_eq!(a, b);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn run_rejects_oversized_batches_before_running() {
        let dir = temp_dir("validate");
        let mut config = small_logistic_config(&dir);
        config.batch_size = config.n_data + 5;
        let err = cmd_run(&config).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(!dir.join("trajectory.csv").exists());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn summary_echo_reproduces_the_run() {
        let dir = temp_dir("echo");
        let config = small_logistic_config(&dir.join("first"));
        let artifacts = cmd_run(&config).unwrap();
        let record = load_record(&artifacts.summary_path).unwrap();
        let mut replay = record.config.clone();
        replay.out_dir = dir.join("second");
        let replayed = cmd_run(&replay).unwrap();
        assert_eq!(
            std::fs::read(&artifacts.trajectory_path).unwrap(),
            std::fs::read(&replayed.trajectory_path).unwrap()
        );
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn diag_emits_reports_and_plots() {
        let dir = temp_dir("diag");
        let config = small_logistic_config(&dir);
        let artifacts = cmd_run(&config).unwrap();
        let record = load_record(&artifacts.summary_path).unwrap();
        let report = cmd_diag(
            &artifacts.trajectory_path,
            &config,
            Some(&record),
            &DiagOptions {
                max_lag: 20,
                discretize_points: 2000,
            },
            &dir,
        )
        .unwrap();
        assert!(report.proposals > 0);
        assert!(!report.nll_trace.is_empty());
        assert!(dir.join("diagnostics.json").exists());
        assert!(dir.join("nll_trace.svg").exists());
        assert!(dir.join("acf.svg").exists());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn diag_reports_parse_errors_with_row_numbers() {
        let dir = temp_dir("diag_bad");
        let path = dir.join("broken.csv");
        std::fs::write(
            &path,
            "segment_index,t_start,duration,event,w_0,v_0,minibatch_evals\n0,0.0,oops,bounce,0,1,5\n",
        )
        .unwrap();
        let config = small_logistic_config(&dir);
        let err = cmd_diag(&path, &config, None, &DiagOptions::default(), &dir).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn baseline_runs_share_the_trajectory_format() {
        let dir = temp_dir("baseline");
        let mut config = small_logistic_config(&dir);
        config.sampler = SamplerKind::Sgld;
        config.steps = 50;
        config.step_size = 0.001;
        let artifacts = cmd_run(&config).unwrap();
        let segments = trajectory::read_trajectory(&artifacts.trajectory_path).unwrap();
        assert_eq!(segments.len(), 50);
        let run = Run {
            segments,
            summary: artifacts.summary,
        };
        assert!(run.check_contiguity(1e-9));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn scan_continues_past_failing_cells() {
        let dir = temp_dir("scan");
        let mut base = small_logistic_config(&dir);
        base.epochs = 2.0;
        // batch size 200 exceeds n_data = 80 and must fail validation while
        // the other cells complete
        let rows = cmd_scan(&base, ScanAxis::BatchSize, &[8.0, 200.0], 2, &dir).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].completed, 2);
        assert!(rows[0].errors.is_empty());
        assert_eq!(rows[1].completed, 0);
        assert_eq!(rows[1].errors.len(), 2);
        assert!(dir.join("scan.csv").exists());
        std::fs::remove_dir_all(&dir).ok();
    }
}
