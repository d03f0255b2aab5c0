//! A highly non-log-concave 2D posterior: data generated as
//! y ~ N(w0* w1*, 1) make the likelihood invariant under
//! (w0, w1) -> (c w0, w1/c), so the posterior concentrates on a hyperboloid
//! neighborhood. The adaptive thinning needs no problem-specific bounds here.
//!
//! ```bash
//! cargo run --release --example hyperboloid
//! ```

use sbps::analysis::discretize;
use sbps::cli::{write_svg, Series};
use sbps::core::RngStream;
use sbps::samplers::{run_sbps, SbpsConfig};
use sbps::targets::HyperboloidTarget;

fn main() {
    let mut data_rng = RngStream::new(99, 0).rng();
    let target = HyperboloidTarget::generate(1000, &mut data_rng);

    let config = SbpsConfig {
        batch_size: 100,
        total_epochs: 400.0,
        refresh_rate: 0.1,
        seed: 3,
        ..SbpsConfig::default()
    };
    let run = run_sbps(&target, &config).expect("run");
    println!(
        "bounces {}, proposals {}, violation rate {:.4}",
        run.summary.bounces,
        run.summary.proposals,
        run.summary.violation_rate()
    );

    let points = discretize(&run.segments, 20_000);
    let kept = &points[2000..];
    let mean_prod = kept.iter().map(|w| w[0] * w[1]).sum::<f64>() / kept.len() as f64;
    let mean_w0 = kept.iter().map(|w| w[0]).sum::<f64>() / kept.len() as f64;
    println!("posterior means: E[w0] = {mean_w0:.3}, E[w0 w1] = {mean_prod:.3} (data generated at w0* w1* = 0)");

    let out_dir = sbps::cli::default_out_dir();
    std::fs::create_dir_all(&out_dir).expect("output directory");
    let path = out_dir.join("hyperboloid_trace.svg");
    write_svg(
        &path,
        "posterior samples on the hyperboloid",
        "w_0",
        "w_1",
        &[Series::scatter(
            "samples",
            kept.iter().step_by(4).map(|w| (w[0], w[1])).collect(),
        )],
    )
    .expect("plot");
    println!("wrote {}", path.display());
}
