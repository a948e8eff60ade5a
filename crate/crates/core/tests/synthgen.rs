use overlap_check::corpus::{Label, Source};
use overlap_check::evaluation::evaluate;
use overlap_check::runner::{train_baseline, ExperimentConfig};
use overlap_check::synthgen::{generate, load_truth, save_truth, SynthConfig};

/// Half-width of the 99% normal-approximation binomial interval.
fn ci99(eta: f64, n: usize) -> f64 {
    2.5758 * (eta * (1.0 - eta) / n as f64).sqrt()
}

#[test]
fn flip_rate_is_within_the_binomial_interval() {
    let config = SynthConfig::default();
    assert_eq!((config.noise_rate, config.n_pool), (0.3, 20_000));
    let half_width = ci99(0.3, 20_000);
    assert!((half_width - 0.0084).abs() < 1e-4);

    let data = generate(&config).unwrap();
    let observed = data.pool_noise_rate();
    assert!((observed - 0.3).abs() <= half_width, "seed 0 flip fraction {observed}");

    // Averaged over 10 seeds the interval shrinks by sqrt(10).
    let rates: Vec<f64> = (1..=10)
        .map(|seed| generate(&SynthConfig { seed, ..config.clone() }).unwrap().pool_noise_rate())
        .collect();
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    assert!((mean - 0.3).abs() <= ci99(0.3, 200_000), "mean flip fraction {mean}");
}

#[test]
fn flips_are_independent_of_class() {
    let data = generate(&SynthConfig { seed: 4, ..SynthConfig::default() }).unwrap();
    for class in [Label::Negative, Label::Positive] {
        let members: Vec<_> = data.pool.iter().filter(|e| data.pool_truth[&e.id] == class).collect();
        let flipped = members.iter().filter(|e| e.label != Some(class)).count();
        let rate = flipped as f64 / members.len() as f64;
        assert!((rate - 0.3).abs() <= ci99(0.3, members.len()), "{class:?}: {rate}");
    }
}

#[test]
fn default_problem_is_learnable() {
    let config = ExperimentConfig {
        synth: SynthConfig { noise_rate: 0.0, ..SynthConfig::default() },
        ..ExperimentConfig::default()
    };
    let data = generate(&config.synth).unwrap();
    let (model, _, _, _) = train_baseline(&data.labeled, &config, 0).unwrap();
    let acc = evaluate(&model, &data.test, 0.5).unwrap().metrics.accuracy;
    assert!(acc >= 0.85, "test accuracy {acc}");
}

#[test]
fn corpora_have_expected_shape() {
    let config = SynthConfig { n_pool: 3000, seed: 9, ..SynthConfig::default() };
    let data = generate(&config).unwrap();
    assert_eq!(data.labeled.len(), 500);
    assert_eq!(data.pool.len(), 3000);
    assert_eq!(data.test.len(), 1000);
    assert_eq!(data.pool_truth.len(), 3000);
    assert!(data.pool.iter().all(|e| e.source == Source::Distant && data.pool_truth.contains_key(&e.id)));
    assert!(data.labeled.iter().chain(&data.test).all(|e| e.source == Source::Manual && e.label.is_some()));
    let positives = data.test.iter().filter(|e| e.label == Some(Label::Positive)).count() as f64 / 1000.0;
    assert!((positives - 0.5).abs() < ci99(0.5, 1000));
    let all_long = data.labeled.iter().all(|e| e.text.split(' ').count() >= 5);
    assert!(all_long);
    assert_eq!(generate(&config).unwrap(), data);
}

#[test]
fn truth_table_round_trips() {
    let data = generate(&SynthConfig { n_pool: 200, ..SynthConfig::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("truth.json");
    save_truth(&path, &data.pool_truth).unwrap();
    assert_eq!(load_truth(&path).unwrap(), data.pool_truth);
}
