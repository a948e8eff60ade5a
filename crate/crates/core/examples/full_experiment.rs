//! Runs the three-step experiment from a config file and prints the
//! baseline-vs-augmented table.
//!
//! cargo run --release --example full_experiment -- crates/core/configs/default.toml

use std::error::Error;
use std::path::PathBuf;

use overlap_check::evaluation::render_report;
use overlap_check::runner::{run_experiment, ExperimentConfig};

fn main() -> Result<(), Box<dyn Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/default.toml")));
    let config = ExperimentConfig::load(&path)?;
    let report = run_experiment(&config)?;

    for s in &report.seeds {
        println!(
            "seed {:>2}: baseline acc {:.4} -> augmented {:.4} | pool acc {:.4} | selected {} noise {:.4} | epochs {}/{}",
            s.seed,
            s.baseline.accuracy,
            s.augmented.accuracy,
            s.baseline_pool_accuracy.unwrap_or(f64::NAN),
            s.selection.selected_count,
            s.selected_noise_rate.unwrap_or(f64::NAN),
            s.baseline_training.epochs_run,
            s.augmented_training.epochs_run,
        );
    }
    println!();
    print!("{}", render_report(&report.table_rows(), true)?.text);
    let s = &report.summary;
    println!(
        "\nmean accuracy delta {:+.4} (worst seed {:+.4}); selected noise {:.4} vs pool {:.4}",
        s.accuracy_delta_mean,
        s.accuracy_delta_min,
        s.selected_noise_rate_mean.unwrap_or(f64::NAN),
        s.pool_noise_rate_mean.unwrap_or(f64::NAN),
    );
    Ok(())
}
