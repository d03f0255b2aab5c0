//! Hyperparameter scans on the logistic benchmark: band multiple k (bias vs
//! proposal efficiency), mini-batch size n (noise vs flight length), and the
//! SGLD step-size selection rule.
//!
//! ```bash
//! cargo run --release --example scans
//! ```

use sbps::cli::{cmd_scan, RunConfig, SamplerKind, ScanAxis};

fn main() {
    let out_dir = sbps::cli::default_out_dir().join("scans");
    let mut base = RunConfig::default();
    base.dim = 20;
    base.n_data = 1000;
    base.data_seed = 2024;
    base.epochs = 40.0;
    base.refresh_rate = 0.3;
    base.init_at_map = true; // equilibrium quantities, not burn-in
    base.out_dir = out_dir.clone();

    println!("band-multiple scan (violation rate should fall with k):");
    let rows = cmd_scan(
        &base,
        ScanAxis::BandMultiple,
        &[0.1, 1.0, 3.0, 10.0],
        3,
        &out_dir.join("k"),
    )
    .expect("scan");
    for row in &rows {
        println!(
            "  k = {:<5} violation rate {:.4}, mean inter-bounce {:.4}",
            row.value, row.violation_rate, row.mean_inter_bounce_time
        );
    }

    println!("\nmini-batch scan (flights lengthen as noise shrinks):");
    let rows = cmd_scan(
        &base,
        ScanAxis::BatchSize,
        &[50.0, 100.0, 200.0, 500.0],
        3,
        &out_dir.join("n"),
    )
    .expect("scan");
    for row in &rows {
        println!(
            "  n = {:<5} mean inter-bounce {:.4}, violation rate {:.4}",
            row.value, row.mean_inter_bounce_time, row.violation_rate
        );
    }

    println!("\nSGLD step-size scan (largest step whose NLL variance stays below the Laplace value):");
    let mut sgld = base.clone();
    sgld.sampler = SamplerKind::Sgld;
    sgld.steps = 4000;
    sgld.batch_size = 100;
    let values: Vec<f64> = (0..10).map(|i| 10f64.powf(-(i as f64) / 2.0)).collect();
    let rows = cmd_scan(&sgld, ScanAxis::StepSize, &values, 3, &out_dir.join("eta")).expect("scan");
    let laplace_var = 20.0 / (2.0 * 1000.0f64.powi(2));
    let mut selected = f64::NAN;
    for row in &rows {
        let ok = row.nll_per_datum_variance <= laplace_var;
        if ok && !(selected > row.value) {
            selected = row.value;
        }
        println!(
            "  eta = {:<8.4} NLL/N variance {:.3e} vs Laplace {laplace_var:.3e} {}",
            row.value,
            row.nll_per_datum_variance,
            if ok { "(acceptable)" } else { "(too biased)" }
        );
    }
    println!("selected step size: {selected}");
    println!("\nscan tables written under {}", out_dir.display());
}
