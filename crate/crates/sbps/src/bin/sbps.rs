use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sbps::cli::{cmd_diag, cmd_run, cmd_scan, CliError, DiagOptions, RunConfig, ScanAxis};

/// Piecewise-deterministic samplers with mini-batch thinning: run
/// experiments, scan hyperparameters, diagnose recorded trajectories.
#[derive(Parser)]
#[command(name = "sbps", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one sampler configuration; writes trajectory.csv and summary.json.
    Run {
        /// Key-value config file (defaults apply when omitted).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides, e.g. --set sampler=sbps --set epochs=50
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory (falls back to SBPS_OUT_DIR, then ./sbps-out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one configuration per (axis value, seed) and tabulate summaries.
    Scan {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Scan axis: k (band multiple), n (batch size), or step_size.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Seeds per value (run seeds are base seed + 0..seeds).
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute diagnostics and plots for a recorded trajectory.
    Diag {
        /// Trajectory CSV written by `run`.
        #[arg(long)]
        trajectory: PathBuf,
        /// Config file; when omitted, the config echo in the sibling
        /// summary.json is used.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        max_lag: usize,
        /// Number of uniform discretization points for series diagnostics.
        #[arg(long, default_value_t = 20000)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(
    path: &Option<PathBuf>,
    overrides: &[String],
    out: &Option<PathBuf>,
) -> Result<RunConfig, CliError> {
    let mut config = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("--set {item}: expected KEY=VALUE")))?;
        config.apply(key.trim(), value.trim())?;
    }
    if let Some(out) = out {
        config.out_dir = out.clone();
    }
    Ok(config)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, set, out } => {
            let config = load_config(&config, &set, &out)?;
            let artifacts = cmd_run(&config)?;
            let s = &artifacts.summary;
            println!(
                "wrote {} and {}",
                artifacts.trajectory_path.display(),
                artifacts.summary_path.display()
            );
            println!(
                "epochs {:.2}  bounces {}  proposals {}  violation rate {:.4}",
                s.epochs,
                s.bounces,
                s.proposals,
                s.violation_rate()
            );
            Ok(())
        }
        Command::Scan {
            config,
            set,
            axis,
            values,
            seeds,
            out,
        } => {
            let config = load_config(&config, &set, &out)?;
            let axis = ScanAxis::parse(&axis)?;
            let out_dir = out.unwrap_or_else(|| config.out_dir.clone());
            let rows = cmd_scan(&config, axis, &values, seeds, &out_dir)?;
            println!("wrote {}", out_dir.join("scan.csv").display());
            for row in rows {
                println!(
                    "value {:<10} runs {}  violation rate {:.4}  mean inter-bounce {:.5}  nll var {:.3e}{}",
                    row.value,
                    row.completed,
                    row.violation_rate,
                    row.mean_inter_bounce_time,
                    row.nll_per_datum_variance,
                    if row.errors.is_empty() {
                        String::new()
                    } else {
                        format!("  ({} failed)", row.errors.len())
                    }
                );
            }
            Ok(())
        }
        Command::Diag {
            trajectory,
            config,
            max_lag,
            points,
            out,
        } => {
            let record = if config.is_none() {
                let sibling = trajectory
                    .parent()
                    .map(|d| d.join("summary.json"))
                    .filter(|p| p.exists())
                    .ok_or_else(|| {
                        CliError::Validation(
                            "no --config given and no summary.json next to the trajectory".into(),
                        )
                    })?;
                Some(sbps::cli::load_record(&sibling)?)
            } else {
                None
            };
            let run_config = match &config {
                Some(p) => RunConfig::load(p)?,
                None => record.as_ref().expect("loaded above").config.clone(),
            };
            let out_dir = out.unwrap_or_else(|| {
                trajectory
                    .parent()
                    .map(|p| p.to_path_buf())
                    .unwrap_or_else(sbps::cli::default_out_dir)
            });
            let options = DiagOptions {
                max_lag,
                discretize_points: points,
            };
            let report = cmd_diag(
                &trajectory,
                &run_config,
                record.as_ref(),
                &options,
                &out_dir,
            )?;
            println!("wrote diagnostics to {}", out_dir.display());
            println!(
                "epochs {:.2}  bounces {}  proposals {}  violation rate {:.4}",
                report.epochs, report.bounces, report.proposals, report.violation_rate
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
