//! Pseudo-labels a noisy pool with a baseline model and keeps the most
//! confident samples whose pseudo-label agrees with the distant label.
//! With the truth table at hand, compares the noise of the pool with the
//! noise of the selection.

use std::error::Error;

use overlap_check::runner::{train_baseline, ExperimentConfig};
use overlap_check::selection::{overlap_select, RankBy, SelectionConfig};
use overlap_check::synthgen::{generate, noise_rate, SynthConfig};

fn main() -> Result<(), Box<dyn Error>> {
    let data = generate(&SynthConfig { n_pool: 10_000, seed: 2, ..SynthConfig::default() })?;
    let (model, _, _, _) = train_baseline(&data.labeled, &ExperimentConfig::default(), 0)?;
    println!("pool noise {:.4}", data.pool_noise_rate());

    for (balanced, rank_by) in [(false, RankBy::Confidence), (true, RankBy::Confidence), (false, RankBy::RawP)] {
        let config = SelectionConfig { n: 1000, balanced, rank_by, ..SelectionConfig::default() };
        let report = overlap_select(&model, &data.pool, &config)?;
        let noise = noise_rate(
            report.selected.iter().map(|s| (s.example.id.as_str(), s.example.label)),
            &data.pool_truth,
        );
        println!(
            "balanced={balanced:<5} rank={rank_by:?}: agreement {} / {}, selected {} (neg {}, pos {}), confidence >= {:.4}, noise {:.4}",
            report.agreement_size,
            report.pool_size,
            report.selected.len(),
            report.per_class_counts.0,
            report.per_class_counts.1,
            report.confidence_min.unwrap_or(f64::NAN),
            noise.unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
