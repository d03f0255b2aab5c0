//! Continuous-trajectory expectations: for test functions varying on scales
//! much shorter than the mean flight, integrating along the path beats
//! averaging the same number of discrete samples.
//!
//! ```bash
//! cargo run --release --example continuous_estimates
//! ```

use sbps::analysis::{continuous_expectation, discretize};
use sbps::cli::{write_svg, Series};
use sbps::samplers::{run_sbps, SbpsConfig};
use sbps::targets::LogisticRegressionTarget;

fn main() {
    let target = LogisticRegressionTarget::generate(20, 1000, 2024);
    let laplace = target.laplace_reference().expect("MAP solve");
    let map0 = laplace.map[0];

    let ratios = [1e-2, 3e-2, 1e-1, 3e-1, 1.0];
    let runs = 5;
    let mut cont_err = vec![0.0f64; ratios.len()];
    let mut disc_err = vec![0.0f64; ratios.len()];

    for seed in 0..runs {
        let config = SbpsConfig {
            batch_size: 100,
            total_epochs: 600.0,
            seed: 600 + seed,
            initial_position: Some(laplace.map.clone()),
            ..SbpsConfig::default()
        };
        let run = run_sbps(&target, &config).expect("run");
        let start = run.segments.len() / 10;
        let segments = &run.segments[start..];
        let flights = segments.iter().filter(|s| s.duration > 0.0).count();
        let total: f64 = segments.iter().map(|s| s.duration).sum();
        let mean_flight = total / flights as f64;
        if seed == 0 {
            println!("mean flight length b = {mean_flight:.4} over {flights} flights");
        }
        let points = discretize(segments, flights);
        for (i, ratio) in ratios.iter().enumerate() {
            let r = ratio * mean_flight;
            // odd in (w_0 - map_0): its posterior expectation is ~zero
            let f = |w: &[f64]| ((w[0] - map0) / r).sin();
            let cont = continuous_expectation(segments, f, 1e-10).expect("quadrature");
            let disc = points.iter().map(|w| f(w)).sum::<f64>() / points.len() as f64;
            cont_err[i] += cont.value.abs() / runs as f64;
            disc_err[i] += disc.abs() / runs as f64;
        }
    }

    println!("\n  r/b       |continuous err|   |discrete err|   (mean over {runs} runs)");
    for (i, ratio) in ratios.iter().enumerate() {
        println!(
            "  {ratio:<8} {:>16.5} {:>16.5}",
            cont_err[i], disc_err[i]
        );
    }
    println!("\nthe continuous estimator wins when the test function varies within a flight (r/b << 1)");

    let out_dir = sbps::cli::default_out_dir();
    std::fs::create_dir_all(&out_dir).expect("output directory");
    let to_points = |errs: &[f64]| {
        ratios
            .iter()
            .zip(errs)
            .map(|(r, e)| (r.log10(), (e + 1e-12).log10()))
            .collect()
    };
    let path = out_dir.join("continuous_estimates.svg");
    write_svg(
        &path,
        "estimator error vs test-function scale",
        "log10(r/b)",
        "log10 |error|",
        &[
            Series::line("continuous", to_points(&cont_err)),
            Series::line("discrete", to_points(&disc_err)),
        ],
    )
    .expect("plot");
    println!("wrote {}", path.display());
}
