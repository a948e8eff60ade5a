//! Three-step experiment: train a baseline on manually labelled data until
//! it converges, select pseudo-labelled samples from the distant pool with
//! the overlap check, then retrain jointly on labelled and selected data.
//! Both models are evaluated on the test set; runs repeat over consecutive
//! seeds and are aggregated.
//!
//! The experiment config is TOML. Every section is optional:
//!
//! ```toml
//! num_seeds = 10
//! pseudo_weight = 1.0
//! val_fraction = 0.2
//! threshold = 0.5
//! fine_tune = false
//!
//! [data]            # corpora on disk; omit to generate data from [synth]
//! labeled = "labeled.jsonl"
//! pool = "pool.jsonl"
//! test = "test.jsonl"
//! truth = "pool_truth.json"
//!
//! [synth]           # SynthConfig
//! [features]        # FeaturizerConfig
//! [train]           # TrainConfig for the baseline; `seed` is the base seed
//! [retrain]         # optional per-field overrides for joint retraining
//! [selection]       # n, min_confidence, balanced, rank_by
//! ```
//!
//! Relative paths in `[data]` resolve against the config file's directory.
//! Seed `i` (0-based) uses training seed `train.seed + i` and, for synthetic
//! data, generator seed `synth.seed + i`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{train_samples, samples_from_corpus, LinearModel, TrainConfig, TrainHistory};
use crate::corpus::{Corpus, Label, Role};
use crate::error::{Error, Result, StageContext};
use crate::evaluation::{evaluate, ConfusionMatrix, Metrics};
use crate::features::FeaturizerConfig;
use crate::output::read_to_string;
use crate::selection::{pseudo_label, select_from_pseudo, PseudoLabeled, SelectionConfig, SelectionReport};
use crate::synthgen::{self, generate, SynthConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataFiles {
    pub labeled: PathBuf,
    pub pool: PathBuf,
    pub test: PathBuf,
    #[serde(default)]
    pub truth: Option<PathBuf>,
}

/// Per-field overrides applied on top of the baseline [`TrainConfig`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOverride {
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub max_epochs: Option<usize>,
    pub l2_lambda: Option<f64>,
    pub patience: Option<usize>,
    pub min_delta: Option<f64>,
}

impl TrainOverride {
    pub fn apply(&self, base: &TrainConfig) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate.unwrap_or(base.learning_rate),
            batch_size: self.batch_size.unwrap_or(base.batch_size),
            max_epochs: self.max_epochs.unwrap_or(base.max_epochs),
            l2_lambda: self.l2_lambda.unwrap_or(base.l2_lambda),
            patience: self.patience.unwrap_or(base.patience),
            min_delta: self.min_delta.unwrap_or(base.min_delta),
            seed: base.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub num_seeds: usize,
    /// Loss weight of pseudo samples in joint retraining, in (0, 1].
    pub pseudo_weight: f64,
    /// Fraction of the labelled set held out for early stopping.
    pub val_fraction: f64,
    /// Decision threshold used for evaluation.
    pub threshold: f64,
    /// Retrain starting from the baseline weights instead of zeros.
    pub fine_tune: bool,
    pub data: Option<DataFiles>,
    pub synth: SynthConfig,
    pub features: FeaturizerConfig,
    pub train: TrainConfig,
    pub retrain: TrainOverride,
    pub selection: SelectionConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            num_seeds: 1,
            pseudo_weight: 1.0,
            val_fraction: 0.2,
            threshold: 0.5,
            fine_tune: false,
            data: None,
            synth: SynthConfig::default(),
            features: FeaturizerConfig::default(),
            train: TrainConfig::default(),
            retrain: TrainOverride::default(),
            selection: SelectionConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<ExperimentConfig> {
        let config: ExperimentConfig =
            toml::from_str(s).map_err(|e| Error::config(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Parses a TOML file and resolves relative data paths against its directory.
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::from_toml_str(&read_to_string(path)?)
            .map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
                other => other,
            })?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(data) = config.data.as_mut() {
            for p in [&mut data.labeled, &mut data.pool, &mut data.test] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
            if let Some(t) = data.truth.as_mut() {
                if t.is_relative() {
                    *t = base.join(&*t);
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_seeds == 0 {
            return Err(Error::config("num_seeds must be positive"));
        }
        if !(self.pseudo_weight > 0.0 && self.pseudo_weight <= 1.0) {
            return Err(Error::config(format!(
                "pseudo_weight must be in (0, 1], got {}",
                self.pseudo_weight
            )));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::config("val_fraction must be in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::config("threshold must be in [0, 1]"));
        }
        if self.data.is_none() {
            self.synth.validate()?;
        }
        self.features.validate()?;
        self.train.validate()?;
        self.retrain_config(self.train.seed).validate()?;
        self.selection_config().validate()
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.num_seeds as u64).map(|i| self.train.seed + i).collect()
    }

    pub fn baseline_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            ..self.train.clone()
        }
    }

    pub fn retrain_config(&self, seed: u64) -> TrainConfig {
        self.retrain.apply(&self.baseline_config(seed))
    }

    pub fn selection_config(&self) -> SelectionConfig {
        SelectionConfig {
            pseudo_weight: self.pseudo_weight,
            ..self.selection.clone()
        }
    }
}

/// Step 1: hold out a validation split of `labeled` and train to convergence.
pub fn train_baseline(
    labeled: &Corpus,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(LinearModel, TrainHistory, Corpus, Corpus)> {
    let (train, val) = labeled.holdout(config.val_fraction, seed)?;
    let train_samples_ = samples_from_corpus(&train, &config.features)?;
    let val_samples = samples_from_corpus(&val, &config.features)?;
    let (model, history) = train_samples(
        &train_samples_,
        &val_samples,
        &config.baseline_config(seed),
        &config.features,
        None,
    )?;
    Ok((model, history, train, val))
}

/// Step 3: train on `train ∪ pseudo`, validating on `val`.
pub fn retrain_joint(
    train: &Corpus,
    val: &Corpus,
    pseudo: &Corpus,
    config: &ExperimentConfig,
    seed: u64,
    init: Option<&LinearModel>,
) -> Result<(LinearModel, TrainHistory)> {
    let joint = train.concat(pseudo, Role::Mixed)?;
    let joint_samples = samples_from_corpus(&joint, &config.features)?;
    let val_samples = samples_from_corpus(val, &config.features)?;
    let init = if config.fine_tune { init } else { None };
    if config.fine_tune && init.is_none() {
        return Err(Error::config("fine_tune requires an initial model"));
    }
    train_samples(
        &joint_samples,
        &val_samples,
        &config.retrain_config(seed),
        &config.features,
        init,
    )
}

/// Corpora for one run.
#[derive(Clone, Debug)]
pub struct RunData {
    pub labeled: Corpus,
    pub pool: Corpus,
    pub test: Corpus,
    pub truth: Option<BTreeMap<String, Label>>,
}

impl RunData {
    pub fn load(files: &DataFiles) -> Result<RunData> {
        Ok(RunData {
            labeled: Corpus::load_jsonl_as(&files.labeled, Role::Labeled).stage("loading labeled corpus")?,
            pool: Corpus::load_jsonl_as(&files.pool, Role::Pool).stage("loading pool corpus")?,
            test: Corpus::load_jsonl_as(&files.test, Role::Test).stage("loading test corpus")?,
            truth: files.truth.as_deref().map(synthgen::load_truth).transpose()?,
        })
    }

    pub fn synthetic(config: &SynthConfig) -> Result<RunData> {
        let data = generate(config)?;
        Ok(RunData {
            labeled: data.labeled,
            pool: data.pool,
            test: data.test.with_role(Role::Test)?,
            truth: Some(data.pool_truth),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub converged: bool,
}

impl From<&TrainHistory> for TrainingSummary {
    fn from(h: &TrainHistory) -> Self {
        TrainingSummary {
            epochs_run: h.stopped_epoch,
            best_epoch: h.best_epoch,
            best_val_loss: h.best_val_loss,
            converged: h.converged,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub pool_size: usize,
    pub agreement_size: usize,
    pub eligible_size: usize,
    pub selected_count: usize,
    pub shortfall: usize,
    pub per_class_counts: (usize, usize),
    pub confidence_min: Option<f64>,
    pub confidence_mean: Option<f64>,
    pub confidence_max: Option<f64>,
}

impl From<&SelectionReport> for SelectionSummary {
    fn from(r: &SelectionReport) -> Self {
        SelectionSummary {
            pool_size: r.pool_size,
            agreement_size: r.agreement_size,
            eligible_size: r.eligible_size,
            selected_count: r.selected.len(),
            shortfall: r.shortfall,
            per_class_counts: r.per_class_counts,
            confidence_min: r.confidence_min,
            confidence_mean: r.confidence_mean,
            confidence_max: r.confidence_max,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub baseline: Metrics,
    pub augmented: Metrics,
    pub baseline_confusion: ConfusionMatrix,
    pub augmented_confusion: ConfusionMatrix,
    pub baseline_training: TrainingSummary,
    pub augmented_training: TrainingSummary,
    pub selection: SelectionSummary,
    /// Distant-label noise of the whole pool (needs truth).
    pub pool_noise_rate: Option<f64>,
    /// Distant-label noise among the selected samples (needs truth).
    pub selected_noise_rate: Option<f64>,
    /// Accuracy of the baseline's pseudo-labels on the pool (needs truth).
    pub baseline_pool_accuracy: Option<f64>,
    pub empty_selection: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Metrics,
    /// Sample standard deviation; zero for a single seed.
    pub stddev: Metrics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub num_seeds: usize,
    pub baseline: MetricSummary,
    pub augmented: MetricSummary,
    pub accuracy_delta_mean: f64,
    pub f1_delta_mean: f64,
    pub accuracy_delta_min: f64,
    pub selected_count_mean: f64,
    pub pool_noise_rate_mean: Option<f64>,
    pub selected_noise_rate_mean: Option<f64>,
    pub baseline_pool_accuracy_mean: Option<f64>,
    pub empty_selection_seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub summary: ExperimentSummary,
    pub seeds: Vec<SeedOutcome>,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn stddev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

fn optional_mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let collected: Option<Vec<f64>> = values.collect();
    collected.filter(|v| !v.is_empty()).map(|v| mean(&v))
}

fn summarize(metrics: &[&Metrics]) -> MetricSummary {
    let column = |f: fn(&Metrics) -> f64| metrics.iter().map(|m| f(m)).collect::<Vec<f64>>();
    let cols = [
        column(|m| m.accuracy),
        column(|m| m.precision),
        column(|m| m.recall),
        column(|m| m.f1),
    ];
    MetricSummary {
        mean: Metrics::new(mean(&cols[0]), mean(&cols[1]), mean(&cols[2]), mean(&cols[3])),
        stddev: Metrics::new(stddev(&cols[0]), stddev(&cols[1]), stddev(&cols[2]), stddev(&cols[3])),
    }
}

impl ExperimentReport {
    pub fn from_outcomes(seeds: Vec<SeedOutcome>) -> ExperimentReport {
        let acc_deltas: Vec<f64> = seeds.iter().map(|s| s.augmented.accuracy - s.baseline.accuracy).collect();
        let f1_deltas: Vec<f64> = seeds.iter().map(|s| s.augmented.f1 - s.baseline.f1).collect();
        let counts: Vec<f64> = seeds.iter().map(|s| s.selection.selected_count as f64).collect();
        let summary = ExperimentSummary {
            num_seeds: seeds.len(),
            baseline: summarize(&seeds.iter().map(|s| &s.baseline).collect::<Vec<_>>()),
            augmented: summarize(&seeds.iter().map(|s| &s.augmented).collect::<Vec<_>>()),
            accuracy_delta_mean: mean(&acc_deltas),
            f1_delta_mean: mean(&f1_deltas),
            accuracy_delta_min: acc_deltas.iter().copied().fold(f64::INFINITY, f64::min),
            selected_count_mean: mean(&counts),
            pool_noise_rate_mean: optional_mean(seeds.iter().map(|s| s.pool_noise_rate)),
            selected_noise_rate_mean: optional_mean(seeds.iter().map(|s| s.selected_noise_rate)),
            baseline_pool_accuracy_mean: optional_mean(seeds.iter().map(|s| s.baseline_pool_accuracy)),
            empty_selection_seeds: seeds.iter().filter(|s| s.empty_selection).map(|s| s.seed).collect(),
        };
        ExperimentReport { summary, seeds }
    }

    pub const CSV_HEADER: &'static str =
        "seed,baseline_acc,baseline_f1,aug_acc,aug_f1,selected_count,selected_noise_rate";

    /// One row per seed; floats in shortest round-trip form, a missing noise
    /// rate as an empty cell.
    pub fn per_seed_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for s in &self.seeds {
            let noise = s.selected_noise_rate.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.seed,
                s.baseline.accuracy,
                s.baseline.f1,
                s.augmented.accuracy,
                s.augmented.f1,
                s.selection.selected_count,
                noise
            );
        }
        out
    }

    pub fn table_rows(&self) -> Vec<(String, Metrics)> {
        vec![
            ("baseline (mean)".to_string(), self.summary.baseline.mean.clone()),
            ("overlap-check (mean)".to_string(), self.summary.augmented.mean.clone()),
        ]
    }
}

fn fraction_matching<'a>(
    pairs: impl Iterator<Item = (&'a str, Label)>,
    truth: &BTreeMap<String, Label>,
) -> Option<f64> {
    synthgen::noise_rate(pairs.map(|(id, l)| (id, Some(l))), truth).map(|wrong| 1.0 - wrong)
}

/// Runs the three steps for one seed.
pub fn run_seed(data: &RunData, config: &ExperimentConfig, seed: u64) -> Result<SeedOutcome> {
    let (baseline, baseline_history, train, val) =
        train_baseline(&data.labeled, config, seed).stage("baseline training")?;

    let pseudo: Vec<PseudoLabeled> = pseudo_label(&baseline, &data.pool).stage("pseudo-labelling")?;
    let selection =
        select_from_pseudo(&data.pool, &pseudo, &config.selection_config()).stage("overlap selection")?;
    if selection.is_empty() {
        log::warn!("seed {seed}: overlap selection is empty; augmented model equals the baseline setup");
    }

    let (augmented, augmented_history) = retrain_joint(
        &train,
        &val,
        &selection.pseudo_corpus(),
        config,
        seed,
        Some(&baseline),
    )
    .stage("joint retraining")?;

    let base_eval = evaluate(&baseline, &data.test, config.threshold).stage("baseline evaluation")?;
    let aug_eval = evaluate(&augmented, &data.test, config.threshold).stage("augmented evaluation")?;

    let truth = data.truth.as_ref();
    let pool_noise_rate =
        truth.and_then(|t| synthgen::noise_rate(data.pool.iter().map(|e| (e.id.as_str(), e.label)), t));
    let selected_noise_rate = truth.and_then(|t| {
        // distant label == pseudo-label for every selected sample
        synthgen::noise_rate(
            selection.selected.iter().map(|s| (s.example.id.as_str(), s.example.label)),
            t,
        )
    });
    let baseline_pool_accuracy = truth.and_then(|t| {
        fraction_matching(pseudo.iter().map(|p| (p.example_id.as_str(), p.pseudo_label)), t)
    });

    Ok(SeedOutcome {
        seed,
        baseline: base_eval.metrics,
        augmented: aug_eval.metrics,
        baseline_confusion: base_eval.confusion,
        augmented_confusion: aug_eval.confusion,
        baseline_training: (&baseline_history).into(),
        augmented_training: (&augmented_history).into(),
        selection: (&selection).into(),
        pool_noise_rate,
        selected_noise_rate,
        baseline_pool_accuracy,
        empty_selection: selection.is_empty(),
    })
}

/// Runs every seed (in parallel) and aggregates in seed order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let shared = config.data.as_ref().map(RunData::load).transpose()?;
    let outcomes: Result<Vec<SeedOutcome>> = config
        .seeds()
        .into_par_iter()
        .enumerate()
        .map(|(i, seed)| {
            let outcome = match &shared {
                Some(data) => run_seed(data, config, seed),
                None => {
                    let synth = SynthConfig {
                        seed: config.synth.seed + i as u64,
                        ..config.synth.clone()
                    };
                    let data = RunData::synthetic(&synth).stage("generating synthetic data")?;
                    run_seed(&data, config, seed)
                }
            };
            outcome.stage(&format!("seed {seed}"))
        })
        .collect();
    Ok(ExperimentReport::from_outcomes(outcomes?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            num_seeds: 2,
            synth: SynthConfig {
                n_labeled: 120,
                n_pool: 600,
                n_test: 200,
                ..SynthConfig::default()
            },
            features: FeaturizerConfig {
                num_buckets: 1 << 14,
                ..FeaturizerConfig::default()
            },
            train: TrainConfig {
                max_epochs: 20,
                ..TrainConfig::default()
            },
            selection: SelectionConfig {
                n: 100,
                ..SelectionConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn toml_round_trip_with_defaults() {
        let config = ExperimentConfig::from_toml_str("num_seeds = 3\n[selection]\nn = 50\n").unwrap();
        assert_eq!(config.num_seeds, 3);
        assert_eq!(config.selection.n, 50);
        assert_eq!(config.train, TrainConfig::default());
        let text = toml::to_string(&config).unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), config);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(ExperimentConfig::from_toml_str("bogus = 1\n").is_err());
        assert!(ExperimentConfig::from_toml_str("pseudo_weight = 0.0\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[selection]\nn = 0\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[retrain]\nlearning_rate = -1.0\n").is_err());
    }

    #[test]
    fn override_applies_per_field() {
        let base = TrainConfig::default();
        let o = TrainOverride {
            max_epochs: Some(7),
            ..TrainOverride::default()
        };
        let merged = o.apply(&base);
        assert_eq!(merged.max_epochs, 7);
        assert_eq!(merged.learning_rate, base.learning_rate);
    }

    #[test]
    fn experiment_is_deterministic_and_consistent() {
        let config = tiny();
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.seeds.len(), 2);
        assert_eq!(a.seeds[1].seed, config.train.seed + 1);
        let mean_acc = (a.seeds[0].augmented.accuracy + a.seeds[1].augmented.accuracy) / 2.0;
        assert!((a.summary.augmented.mean.accuracy - mean_acc).abs() < 1e-12);
        for s in &a.seeds {
            assert_eq!(s.selection.selected_count, 100);
        }
    }

    #[test]
    fn empty_selection_degenerates_to_baseline() {
        let config = ExperimentConfig {
            num_seeds: 1,
            selection: SelectionConfig {
                n: 100,
                min_confidence: 0.999_999,
                ..SelectionConfig::default()
            },
            ..tiny()
        };
        let report = run_experiment(&config).unwrap();
        let s = &report.seeds[0];
        assert!(s.empty_selection);
        assert_eq!(report.summary.empty_selection_seeds, vec![s.seed]);
        assert_eq!(s.baseline, s.augmented);
        assert_eq!(s.selected_noise_rate, None);
    }

    #[test]
    fn fine_tune_mode_runs() {
        let config = ExperimentConfig {
            num_seeds: 1,
            fine_tune: true,
            ..tiny()
        };
        let report = run_experiment(&config).unwrap();
        assert!(!report.seeds[0].empty_selection);
    }

    #[test]
    fn stddev_is_sample_stddev() {
        assert_eq!(stddev(&[1.0]), 0.0);
        assert!((stddev(&[1.0, 3.0]) - 2f64.sqrt()).abs() < 1e-15);
    }
}
