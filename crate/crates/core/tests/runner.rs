mod common;

use common::SMALL_CONFIG;
use overlap_check::runner::{run_experiment, run_seed, ExperimentConfig, RunData};
use overlap_check::synthgen::SynthConfig;

fn small() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(SMALL_CONFIG).unwrap()
}

#[test]
fn selection_is_cleaner_than_the_pool() {
    let config = ExperimentConfig { num_seeds: 6, ..small() };
    let report = run_experiment(&config).unwrap();
    for s in &report.seeds {
        let pool = s.pool_noise_rate.unwrap();
        let selected = s.selected_noise_rate.unwrap();
        assert!((pool - 0.3).abs() < 0.05, "seed {}: pool noise {pool}", s.seed);
        assert!(selected < pool, "seed {}: selected noise {selected} vs pool {pool}", s.seed);
        assert!(s.baseline_pool_accuracy.unwrap() > 0.7);
    }
    assert!(report.summary.selected_noise_rate_mean.unwrap() < 0.2);
}

#[test]
fn parallel_seeds_equal_sequential_runs() {
    let config = small();
    let report = run_experiment(&config).unwrap();
    for (i, outcome) in report.seeds.iter().enumerate() {
        let data = RunData::synthetic(&SynthConfig {
            seed: config.synth.seed + i as u64,
            ..config.synth.clone()
        })
        .unwrap();
        let alone = run_seed(&data, &config, config.train.seed + i as u64).unwrap();
        assert_eq!(&alone, outcome);
    }
    assert_eq!(run_experiment(&config).unwrap(), report);
}

#[test]
fn summary_aggregates_seeds() {
    let report = run_experiment(&small()).unwrap();
    let s = &report.summary;
    let n = report.seeds.len() as f64;
    let mean = |f: fn(&overlap_check::runner::SeedOutcome) -> f64| report.seeds.iter().map(f).sum::<f64>() / n;
    assert_eq!(s.num_seeds, 2);
    assert!((s.baseline.mean.accuracy - mean(|o| o.baseline.accuracy)).abs() < 1e-12);
    assert!((s.accuracy_delta_mean - mean(|o| o.augmented.accuracy - o.baseline.accuracy)).abs() < 1e-12);
    let min = report
        .seeds
        .iter()
        .map(|o| o.augmented.accuracy - o.baseline.accuracy)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(s.accuracy_delta_min, min);
    assert!(s.empty_selection_seeds.is_empty());
}
