//! Minimal end-to-end run: sample a Bayesian logistic-regression posterior
//! with the stochastic bouncy particle sampler and summarize the result.
//!
//! ```bash
//! cargo run --example quickstart
//! ```

use sbps::analysis::{laplace_band, trace_by_epoch};
use sbps::samplers::{run_sbps, SbpsConfig};
use sbps::targets::LogisticRegressionTarget;

fn main() {
    let target = LogisticRegressionTarget::generate(10, 500, 7);
    let laplace = target.laplace_reference().expect("MAP solve");
    let (center, spread) = laplace_band(laplace.nll_at_map / 500.0, 10, 500);

    let config = SbpsConfig {
        batch_size: 50,
        total_epochs: 60.0,
        refresh_rate: 0.3,
        seed: 1,
        ..SbpsConfig::default()
    };
    let run = run_sbps(&target, &config).expect("sampler run");

    println!(
        "{} bounces / {} proposals over {:.0} epochs ({:.1} time units)",
        run.summary.bounces, run.summary.proposals, run.summary.epochs, run.summary.total_time
    );
    println!(
        "violation rate {:.4} (bias diagnostic; nominal for k=3 is ~0.001)",
        run.summary.violation_rate()
    );
    println!("Laplace band: {:.4} +- {:.4} (3 sd)", center, 3.0 * spread);

    let trace = trace_by_epoch(&run.segments, |w| target.nll_per_datum(w), 500);
    for (epoch, value) in trace.iter().step_by(6) {
        let marker = if (value - center).abs() <= 3.0 * spread {
            "in band"
        } else {
            ""
        };
        println!("  epoch {epoch:5.0}  NLL/N {value:.4}  {marker}");
    }
}
