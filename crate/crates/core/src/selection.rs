//! Overlap-checking selection of distant-supervision samples.
//!
//! 1. Pseudo-label every pool example with the argmax class of the model's
//!    predicted distribution `(1 - p, p)`.
//! 2. Keep the candidates whose pseudo-label agrees with their distant label.
//! 3. Return the top `n` candidates in descending order of predicted
//!    probability (class-wise confidence `max(p, 1 - p)` by default), ties
//!    broken by ascending example id.
//!
//! Selected examples are re-tagged as `source = pseudo` with the pseudo-label
//! as their label.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::LinearModel;
use crate::corpus::{Corpus, Example, Label, Role, Source};
use crate::error::{Error, Result};
use crate::features::featurize;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabeled {
    pub example_id: String,
    pub pseudo_label: Label,
    /// Positive-class probability.
    pub probability: f64,
    /// `max(p, 1 - p)`.
    pub confidence: f64,
}

impl PseudoLabeled {
    /// Argmax over `(1 - p, p)`; an exact tie at 0.5 goes to the positive class.
    pub fn from_probability(example_id: impl Into<String>, probability: f64) -> PseudoLabeled {
        let pseudo_label = if probability >= 0.5 {
            Label::Positive
        } else {
            Label::Negative
        };
        PseudoLabeled {
            example_id: example_id.into(),
            pseudo_label,
            probability,
            confidence: probability.max(1.0 - probability),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankBy {
    /// Class-wise confidence `max(p, 1 - p)`.
    #[default]
    Confidence,
    /// Raw positive-class probability `p`.
    RawP,
}

impl std::str::FromStr for RankBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<RankBy> {
        match s {
            "confidence" => Ok(RankBy::Confidence),
            "raw-p" => Ok(RankBy::RawP),
            other => Err(Error::config(format!(
                "rank-by must be `confidence` or `raw-p`, got {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    /// Number of pseudo samples to return.
    pub n: usize,
    pub min_confidence: f64,
    /// Take the top `ceil(n/2)` of each class, then merge and truncate to `n`.
    pub balanced: bool,
    pub rank_by: RankBy,
    /// Loss weight given to the selected examples. Set by the caller (the
    /// experiment config carries it at the top level).
    #[serde(skip)]
    pub pseudo_weight: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            n: 2000,
            min_confidence: 0.5,
            balanced: false,
            rank_by: RankBy::Confidence,
            pseudo_weight: 1.0,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("selection n must be positive"));
        }
        if !(0.5..1.0).contains(&self.min_confidence) {
            return Err(Error::config(format!(
                "min_confidence must be in [0.5, 1), got {}",
                self.min_confidence
            )));
        }
        if !(self.pseudo_weight > 0.0 && self.pseudo_weight <= 1.0) {
            return Err(Error::config(format!(
                "pseudo_weight must be in (0, 1], got {}",
                self.pseudo_weight
            )));
        }
        Ok(())
    }
}

/// A pool example whose distant label agrees with its pseudo-label.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate<'a> {
    pub example: &'a Example,
    pub pseudo: PseudoLabeled,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectedItem {
    pub example: Example,
    pub pseudo: PseudoLabeled,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionReport {
    /// |A|
    pub pool_size: usize,
    /// |C|
    pub agreement_size: usize,
    /// Candidates passing `min_confidence`.
    pub eligible_size: usize,
    pub requested: usize,
    pub shortfall: usize,
    pub selected: Vec<SelectedItem>,
    /// (class 0, class 1)
    pub per_class_counts: (usize, usize),
    pub confidence_min: Option<f64>,
    pub confidence_mean: Option<f64>,
    pub confidence_max: Option<f64>,
}

/// JSON form of a [`SelectionReport`]: summary plus the selected ids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub pool_size: usize,
    pub agreement_size: usize,
    pub eligible_size: usize,
    pub requested: usize,
    pub selected_count: usize,
    pub shortfall: usize,
    pub per_class_counts: (usize, usize),
    pub confidence_min: Option<f64>,
    pub confidence_mean: Option<f64>,
    pub confidence_max: Option<f64>,
    pub selected: Vec<PseudoLabeled>,
}

impl SelectionReport {
    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn selected_ids(&self) -> Vec<&str> {
        self.selected.iter().map(|s| s.example.id.as_str()).collect()
    }

    /// The selected examples as a corpus, in selection order.
    pub fn pseudo_corpus(&self) -> Corpus {
        let examples = self.selected.iter().map(|s| s.example.clone()).collect();
        // ids come from a valid pool and pseudo examples always carry labels
        Corpus::new(examples, Role::Labeled).expect("selected examples form a valid corpus")
    }

    pub fn to_record(&self) -> SelectionRecord {
        SelectionRecord {
            pool_size: self.pool_size,
            agreement_size: self.agreement_size,
            eligible_size: self.eligible_size,
            requested: self.requested,
            selected_count: self.selected.len(),
            shortfall: self.shortfall,
            per_class_counts: self.per_class_counts,
            confidence_min: self.confidence_min,
            confidence_mean: self.confidence_mean,
            confidence_max: self.confidence_max,
            selected: self.selected.iter().map(|s| s.pseudo.clone()).collect(),
        }
    }
}

/// Pseudo-labels every pool example, in pool order.
pub fn pseudo_label(model: &LinearModel, pool: &Corpus) -> Result<Vec<PseudoLabeled>> {
    if pool.role() != Role::Pool {
        return Err(Error::validation(format!(
            "pseudo-labelling expects a pool corpus, got role {:?}",
            pool.role()
        )));
    }
    pool.examples()
        .par_iter()
        .map(|e| {
            let p = model.predict_prob(&featurize(&e.text, model.featurizer()))?;
            Ok(PseudoLabeled::from_probability(e.id.clone(), p))
        })
        .collect()
}

/// Pairs whose distant label equals the pseudo-label, in pool order.
pub fn agreement_set<'a>(pool: &'a Corpus, pseudo: &[PseudoLabeled]) -> Result<Vec<Candidate<'a>>> {
    if pool.len() != pseudo.len() {
        return Err(Error::Alignment(format!(
            "pool has {} examples but {} pseudo-labels",
            pool.len(),
            pseudo.len()
        )));
    }
    let mut candidates = Vec::new();
    for (example, p) in pool.iter().zip(pseudo) {
        if example.id != p.example_id {
            return Err(Error::Alignment(format!(
                "pool example {:?} paired with pseudo-label for {:?}",
                example.id, p.example_id
            )));
        }
        let distant = example.label.ok_or_else(|| {
            Error::validation(format!("pool example {:?} has no distant label", example.id))
        })?;
        if distant == p.pseudo_label {
            candidates.push(Candidate {
                example,
                pseudo: p.clone(),
            });
        }
    }
    Ok(candidates)
}

fn rank_key(p: &PseudoLabeled, rank_by: RankBy) -> f64 {
    match rank_by {
        RankBy::Confidence => p.confidence,
        RankBy::RawP => p.probability,
    }
}

/// Total order: key descending, then id ascending.
fn ranking(a: &Candidate<'_>, b: &Candidate<'_>, rank_by: RankBy) -> Ordering {
    rank_key(&b.pseudo, rank_by)
        .total_cmp(&rank_key(&a.pseudo, rank_by))
        .then_with(|| a.example.id.cmp(&b.example.id))
}

pub fn select_top_n(candidates: &[Candidate<'_>], config: &SelectionConfig) -> Result<SelectionReport> {
    config.validate()?;
    let mut eligible: Vec<&Candidate<'_>> = candidates
        .iter()
        .filter(|c| c.pseudo.confidence >= config.min_confidence)
        .collect();
    eligible.sort_by(|a, b| ranking(a, b, config.rank_by));

    let chosen: Vec<&Candidate<'_>> = if config.balanced {
        let per_class = config.n.div_ceil(2);
        let mut merged: Vec<&Candidate<'_>> = [Label::Negative, Label::Positive]
            .into_iter()
            .flat_map(|class| {
                eligible
                    .iter()
                    .filter(move |c| c.pseudo.pseudo_label == class)
                    .take(per_class)
                    .copied()
            })
            .collect();
        merged.sort_by(|a, b| ranking(a, b, config.rank_by));
        merged.truncate(config.n);
        merged
    } else {
        eligible.iter().take(config.n).copied().collect()
    };

    let selected: Vec<SelectedItem> = chosen
        .iter()
        .map(|c| SelectedItem {
            example: Example {
                id: c.example.id.clone(),
                text: c.example.text.clone(),
                label: Some(c.pseudo.pseudo_label),
                source: Source::Pseudo,
                weight: config.pseudo_weight,
            },
            pseudo: c.pseudo.clone(),
        })
        .collect();

    let positives = selected
        .iter()
        .filter(|s| s.pseudo.pseudo_label == Label::Positive)
        .count();
    let confidences: Vec<f64> = selected.iter().map(|s| s.pseudo.confidence).collect();
    let (confidence_min, confidence_mean, confidence_max) = if confidences.is_empty() {
        (None, None, None)
    } else {
        (
            confidences.iter().copied().reduce(f64::min),
            Some(confidences.iter().sum::<f64>() / confidences.len() as f64),
            confidences.iter().copied().reduce(f64::max),
        )
    };
    Ok(SelectionReport {
        pool_size: candidates.len(),
        agreement_size: candidates.len(),
        eligible_size: eligible.len(),
        requested: config.n,
        shortfall: config.n - selected.len(),
        per_class_counts: (selected.len() - positives, positives),
        selected,
        confidence_min,
        confidence_mean,
        confidence_max,
    })
}

/// Pseudo-label, intersect with distant labels, take the top `n`.
pub fn overlap_select(model: &LinearModel, pool: &Corpus, config: &SelectionConfig) -> Result<SelectionReport> {
    let pseudo = pseudo_label(model, pool)?;
    select_from_pseudo(pool, &pseudo, config)
}

/// The agreement and ranking steps for pseudo-labels computed elsewhere.
pub fn select_from_pseudo(pool: &Corpus, pseudo: &[PseudoLabeled], config: &SelectionConfig) -> Result<SelectionReport> {
    let candidates = agreement_set(pool, pseudo)?;
    let mut report = select_top_n(&candidates, config)?;
    report.pool_size = pool.len();
    Ok(report)
}
