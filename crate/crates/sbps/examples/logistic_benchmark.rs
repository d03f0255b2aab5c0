//! The logistic-regression benchmark: stochastic bouncy particle sampling
//! against SGLD, mSGNHT and the exact-bound mini-batch sampler, all at equal
//! data cost, with the Laplace approximation's NLL band as the reference.
//!
//! ```bash
//! cargo run --release --example logistic_benchmark
//! ```

use sbps::analysis::{laplace_band, trace_by_epoch, trace_by_epoch_positions};
use sbps::cli::{write_svg, Series};
use sbps::samplers::{
    run_lipsbps, run_msgnht, run_sbps, run_sgld, BaselineConfig, SbpsConfig,
};
use sbps::targets::LogisticRegressionTarget;

fn main() {
    let (dim, n_data) = (20, 1000);
    let epochs = 120.0;
    let target = LogisticRegressionTarget::generate(dim, n_data, 2024);
    let laplace = target.laplace_reference().expect("MAP solve");
    let (center, spread) = laplace_band(laplace.nll_at_map / n_data as f64, dim, n_data);
    println!("Laplace band: {center:.4} +- {:.4} (3 sd)", 3.0 * spread);

    let mut series = Vec::new();

    let sbps_run = run_sbps(
        &target,
        &SbpsConfig {
            batch_size: 100,
            total_epochs: epochs,
            refresh_rate: 0.3,
            seed: 0,
            ..SbpsConfig::default()
        },
    )
    .expect("sbps");
    let trace = trace_by_epoch(&sbps_run.segments, |w| target.nll_per_datum(w), n_data);
    summarize("sbps (n=100, k=3)", &trace, center, spread);
    series.push(Series::line("sbps", trace));

    // exact-bound sampler: unbiased but orders of magnitude more proposals
    let lip = run_lipsbps(&target, 1, epochs, 0, None).expect("lipsbps");
    let trace = trace_by_epoch(&lip.segments, |w| target.nll_per_datum(w), n_data);
    summarize(
        &format!("lipsbps (n=1, {} proposals)", lip.summary.proposals),
        &trace,
        center,
        spread,
    );
    series.push(Series::line("lipsbps", trace));

    for (label, step) in [("sgld eta=0.1", 0.1), ("sgld eta=0.01", 0.01)] {
        let chain = run_sgld(
            &target,
            &BaselineConfig {
                step_size: step,
                batch_size: 100,
                steps: (epochs * n_data as f64 / 100.0) as usize,
                seed: 0,
                ..BaselineConfig::default()
            },
        )
        .expect("sgld");
        let trace =
            trace_by_epoch_positions(&chain.positions, |w| target.nll_per_datum(w), 100, n_data);
        summarize(label, &trace, center, spread);
        series.push(Series::line(label, trace));
    }

    for (label, step) in [("msgnht h=0.1", 0.1), ("msgnht h=0.01", 0.01)] {
        let chain = run_msgnht(
            &target,
            &BaselineConfig {
                step_size: step,
                batch_size: 100,
                steps: (epochs * n_data as f64 / 100.0) as usize,
                seed: 0,
                ..BaselineConfig::default()
            },
        )
        .expect("msgnht");
        let trace =
            trace_by_epoch_positions(&chain.positions, |w| target.nll_per_datum(w), 100, n_data);
        summarize(label, &trace, center, spread);
        series.push(Series::line(label, trace));
    }

    for (label, offset) in [("band center", 0.0), ("band +3sd", 3.0), ("band -3sd", -3.0)] {
        series.push(Series::line(
            label,
            vec![(0.0, center + offset * spread), (epochs, center + offset * spread)],
        ));
    }
    let out_dir = sbps::cli::default_out_dir();
    std::fs::create_dir_all(&out_dir).expect("output directory");
    let path = out_dir.join("logistic_benchmark_nll.svg");
    write_svg(
        &path,
        "per-data-point NLL at equal data cost",
        "epochs",
        "NLL / N",
        &series,
    )
    .expect("plot");
    println!("wrote {}", path.display());
}

fn summarize(label: &str, trace: &[(f64, f64)], center: f64, spread: f64) {
    let entry = {
        let mut entry = None;
        for (epoch, value) in trace {
            if (value - center).abs() <= 3.0 * spread {
                entry.get_or_insert(*epoch);
            } else {
                entry = None;
            }
        }
        entry
    };
    let last = trace.last().map(|(_, v)| *v).unwrap_or(f64::NAN);
    let note = if last.is_nan() { " (diverged at this step size)" } else { "" };
    println!(
        "{label:>32}: final NLL/N {last:.4}, in band from epoch {}{note}",
        entry.map_or("never".to_string(), |e| format!("{e:.0}"))
    );
}
