//! Binary logistic regression over hashed n-gram features.
//!
//! Training is plain mini-batch gradient descent with a constant learning
//! rate, weighted cross-entropy and L2 regularization, starting from zero
//! weights. Each epoch is followed by a validation pass; training stops once
//! the validation loss has failed to improve by `min_delta` for `patience`
//! consecutive epochs, and the snapshot with the lowest validation loss is
//! returned.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label};
use crate::error::{Error, Result};
use crate::features::{featurize_batch, FeaturizerConfig, SparseVector};
use crate::output::{read_to_string, write_json};

/// Largest double strictly below one.
const PROB_CEIL: f64 = 1.0 - f64::EPSILON / 2.0;

/// Logistic function in the branch form that never exponentiates a positive
/// argument. Clamped so the result stays strictly inside (0, 1).
pub fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, PROB_CEIL)
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Binary cross-entropy of logit `z` against label `y`, i.e.
/// `-[y ln σ(z) + (1-y) ln(1-σ(z))]`.
pub fn bce_from_logit(z: f64, y: Label) -> f64 {
    softplus(z) - y.as_f64() * z
}

/// One training example with its loss weight.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub features: SparseVector,
    pub label: Label,
    pub weight: f64,
}

/// Featurizes a fully labelled corpus.
pub fn samples_from_corpus(corpus: &Corpus, featurizer: &FeaturizerConfig) -> Result<Vec<Sample>> {
    let texts: Vec<&str> = corpus.iter().map(|e| e.text.as_str()).collect();
    let vectors = featurize_batch(&texts, featurizer);
    corpus
        .iter()
        .zip(vectors)
        .map(|(example, features)| {
            let label = example.label.ok_or_else(|| {
                Error::validation(format!("example {:?} has no label", example.id))
            })?;
            Ok(Sample {
                features,
                label,
                weight: example.weight,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    weights: Vec<f64>,
    bias: f64,
    featurizer: FeaturizerConfig,
}

impl LinearModel {
    pub fn zeros(featurizer: FeaturizerConfig) -> LinearModel {
        LinearModel {
            weights: vec![0.0; featurizer.num_buckets],
            bias: 0.0,
            featurizer,
        }
    }

    pub fn from_parts(weights: Vec<f64>, bias: f64, featurizer: FeaturizerConfig) -> Result<LinearModel> {
        if weights.len() != featurizer.num_buckets {
            return Err(Error::validation(format!(
                "weight vector has length {} but featurizer uses {} buckets",
                weights.len(),
                featurizer.num_buckets
            )));
        }
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::validation("model parameters must be finite"));
        }
        Ok(LinearModel {
            weights,
            bias,
            featurizer,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn featurizer(&self) -> &FeaturizerConfig {
        &self.featurizer
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn check_dim(&self, x: &SparseVector) -> Result<()> {
        match x.max_index() {
            Some(i) if i as usize >= self.weights.len() => Err(Error::DimensionMismatch {
                index: i as usize,
                dim: self.weights.len(),
            }),
            _ => Ok(()),
        }
    }

    pub fn logit(&self, x: &SparseVector) -> Result<f64> {
        self.check_dim(x)?;
        Ok(x.dot(&self.weights) + self.bias)
    }

    /// Positive-class probability `σ(w·x + b)`.
    pub fn predict_prob(&self, x: &SparseVector) -> Result<f64> {
        Ok(sigmoid(self.logit(x)?))
    }

    pub fn predict_text(&self, text: &str) -> Result<f64> {
        self.predict_prob(&crate::features::featurize(text, &self.featurizer))
    }

    fn l2_norm_sq(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }

    pub fn to_artifact(&self) -> ModelArtifact {
        ModelArtifact {
            format: MODEL_FORMAT.to_string(),
            featurizer: self.featurizer.clone(),
            bias: self.bias,
            weights: self
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(i, &w)| (i as u32, w))
                .collect(),
        }
    }

    pub fn from_artifact(artifact: ModelArtifact) -> Result<LinearModel> {
        if artifact.format != MODEL_FORMAT {
            return Err(Error::validation(format!(
                "unsupported model format {:?}",
                artifact.format
            )));
        }
        artifact.featurizer.validate()?;
        let mut weights = vec![0.0; artifact.featurizer.num_buckets];
        for (i, w) in artifact.weights {
            let slot = weights.get_mut(i as usize).ok_or(Error::DimensionMismatch {
                index: i as usize,
                dim: artifact.featurizer.num_buckets,
            })?;
            *slot = w;
        }
        LinearModel::from_parts(weights, artifact.bias, artifact.featurizer)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, &self.to_artifact())
    }

    pub fn load(path: &Path) -> Result<LinearModel> {
        let artifact: ModelArtifact = serde_json::from_str(&read_to_string(path)?)
            .map_err(|e| Error::validation(format!("{}: invalid model file: {e}", path.display())))?;
        LinearModel::from_artifact(artifact)
    }
}

pub const MODEL_FORMAT: &str = "overlap-check/linear-model/v1";

/// On-disk model: featurizer settings, bias and the nonzero weights.
/// Floats are written in shortest round-trip form, so save/load is exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelArtifact {
    pub format: String,
    pub featurizer: FeaturizerConfig,
    pub bias: f64,
    pub weights: Vec<(u32, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub l2_lambda: f64,
    pub patience: usize,
    pub min_delta: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 3.0,
            batch_size: 64,
            max_epochs: 100,
            l2_lambda: 1e-5,
            patience: 5,
            min_delta: 1e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate.is_finite()
            && self.learning_rate > 0.0
            && self.batch_size > 0
            && self.max_epochs > 0
            && self.l2_lambda.is_finite()
            && self.l2_lambda >= 0.0
            && self.patience > 0
            && self.min_delta.is_finite()
            && self.min_delta >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid training config: {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Last epoch that ran.
    pub stopped_epoch: usize,
    /// Epoch whose snapshot was returned.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    /// True when patience ran out before `max_epochs`.
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossAndGradient {
    pub loss: f64,
    /// Sorted by index; covers every coordinate touched by the batch or
    /// holding a nonzero weight.
    pub grad_weights: Vec<(u32, f64)>,
    pub grad_bias: f64,
}

/// Weighted-mean cross-entropy plus `l2_lambda * ||w||^2`, and its gradient.
pub fn loss_and_gradient(model: &LinearModel, batch: &[Sample], l2_lambda: f64) -> Result<LossAndGradient> {
    if batch.is_empty() {
        return Err(Error::validation("loss requires a non-empty batch"));
    }
    let total_weight: f64 = batch.iter().map(|s| s.weight).sum();
    if !(total_weight > 0.0) {
        return Err(Error::validation("batch weights sum to zero"));
    }
    let mut grad = std::collections::BTreeMap::<u32, f64>::new();
    let mut grad_bias = 0.0;
    let mut data_loss = 0.0;
    for sample in batch {
        let z = model.logit(&sample.features)?;
        data_loss += sample.weight * bce_from_logit(z, sample.label);
        let residual = sample.weight * (sigmoid_unclamped(z) - sample.label.as_f64()) / total_weight;
        grad_bias += residual;
        for &(i, x) in sample.features.entries() {
            *grad.entry(i).or_insert(0.0) += residual * x;
        }
    }
    for (i, &w) in model.weights.iter().enumerate() {
        if w != 0.0 {
            *grad.entry(i as u32).or_insert(0.0) += 2.0 * l2_lambda * w;
        }
    }
    Ok(LossAndGradient {
        loss: data_loss / total_weight + l2_lambda * model.l2_norm_sq(),
        grad_weights: grad.into_iter().collect(),
        grad_bias,
    })
}

fn sigmoid_unclamped(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Weighted mean cross-entropy without the regularizer, and accuracy at 0.5.
fn data_loss(model: &LinearModel, samples: &[Sample]) -> (f64, f64) {
    let mut loss = 0.0;
    let mut total = 0.0;
    let mut correct = 0usize;
    for s in samples {
        let z = s.features.dot(&model.weights) + model.bias;
        loss += s.weight * bce_from_logit(z, s.label);
        total += s.weight;
        let predicted = if sigmoid(z) >= 0.5 { Label::Positive } else { Label::Negative };
        if predicted == s.label {
            correct += 1;
        }
    }
    let mean = if total > 0.0 { loss / total } else { 0.0 };
    (mean, correct as f64 / samples.len() as f64)
}

/// One gradient step on `batch`. The L2 term is applied as a multiplicative
/// decay of all weights, which is the same update as stepping along
/// `2 * l2_lambda * w`.
fn step(model: &mut LinearModel, batch: &[&Sample], lr: f64, l2_lambda: f64) {
    let total_weight: f64 = batch.iter().map(|s| s.weight).sum();
    if !(total_weight > 0.0) {
        return;
    }
    let coefs: Vec<f64> = batch
        .iter()
        .map(|s| {
            let z = s.features.dot(&model.weights) + model.bias;
            lr * s.weight * (sigmoid_unclamped(z) - s.label.as_f64()) / total_weight
        })
        .collect();
    if l2_lambda > 0.0 {
        let decay = 1.0 - 2.0 * lr * l2_lambda;
        model.weights.iter_mut().for_each(|w| *w *= decay);
    }
    for (sample, coef) in batch.iter().zip(&coefs) {
        model.bias -= coef;
        for &(i, x) in sample.features.entries() {
            model.weights[i as usize] -= coef * x;
        }
    }
}

fn check_dims(samples: &[Sample], dim: usize) -> Result<()> {
    for s in samples {
        if let Some(i) = s.features.max_index() {
            if i as usize >= dim {
                return Err(Error::DimensionMismatch { index: i as usize, dim });
            }
        }
    }
    Ok(())
}

/// Trains on pre-featurized samples, optionally starting from `init`
/// instead of zero weights.
pub fn train_samples(
    train: &[Sample],
    val: &[Sample],
    config: &TrainConfig,
    featurizer: &FeaturizerConfig,
    init: Option<&LinearModel>,
) -> Result<(LinearModel, TrainHistory)> {
    config.validate()?;
    featurizer.validate()?;
    if train.is_empty() {
        return Err(Error::validation("training set is empty"));
    }
    if val.is_empty() {
        return Err(Error::validation("validation set is empty"));
    }
    let mut model = match init {
        Some(m) if m.featurizer == *featurizer => m.clone(),
        Some(_) => {
            return Err(Error::validation(
                "initial model uses a different featurizer",
            ))
        }
        None => LinearModel::zeros(featurizer.clone()),
    };
    check_dims(train, model.dim())?;
    check_dims(val, model.dim())?;

    let mut epochs = Vec::new();
    let mut best = model.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    // Reference loss for patience; only moves on improvements >= min_delta.
    let mut reference_loss = f64::INFINITY;
    let mut stale = 0;
    let mut converged = false;
    let mut stopped_epoch = 0;

    for epoch in 1..=config.max_epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(epoch as u64);
        let mut order: Vec<&Sample> = train.iter().collect();
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            step(&mut model, batch, config.learning_rate, config.l2_lambda);
        }

        let (train_data_loss, _) = data_loss(&model, train);
        let train_loss = train_data_loss + config.l2_lambda * model.l2_norm_sq();
        let (val_loss, val_accuracy) = data_loss(&model, val);
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_accuracy,
        });
        stopped_epoch = epoch;

        if val_loss < best_loss {
            best_loss = val_loss;
            best_epoch = epoch;
            best.clone_from(&model);
        }
        if val_loss < reference_loss - config.min_delta {
            reference_loss = val_loss;
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                converged = true;
                break;
            }
        }
    }

    Ok((
        best,
        TrainHistory {
            epochs,
            stopped_epoch,
            best_epoch,
            best_val_loss: best_loss,
            converged,
        },
    ))
}

/// Trains from zero weights on labelled corpora.
pub fn train(
    train_set: &Corpus,
    val_set: &Corpus,
    config: &TrainConfig,
    featurizer: &FeaturizerConfig,
) -> Result<(LinearModel, TrainHistory)> {
    let train = samples_from_corpus(train_set, featurizer)?;
    let val = samples_from_corpus(val_set, featurizer)?;
    train_samples(&train, &val, config, featurizer, None)
}
