//! Confusion-matrix metrics and leaderboard-style reports.
//!
//! Class 1 is the positive class. Ratios with a zero denominator are defined
//! as 0.0 and flagged rather than treated as errors.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classifier::LinearModel;
use crate::corpus::{Corpus, Label};
use crate::error::{Error, Result};
use crate::features::featurize_batch;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, fp: usize, fn_: usize, tn: usize) -> ConfusionMatrix {
        ConfusionMatrix { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// The same counts with the positive class swapped.
    pub fn swapped(&self) -> ConfusionMatrix {
        ConfusionMatrix::new(self.tn, self.fn_, self.fp, self.tp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricFlag {
    PrecisionUndefined,
    RecallUndefined,
    F1Undefined,
}

impl MetricFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricFlag::PrecisionUndefined => "precision_undefined",
            MetricFlag::RecallUndefined => "recall_undefined",
            MetricFlag::F1Undefined => "f1_undefined",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<MetricFlag>,
}

impl Metrics {
    pub fn new(accuracy: f64, precision: f64, recall: f64, f1: f64) -> Metrics {
        Metrics {
            accuracy,
            precision,
            recall,
            f1,
            flags: Vec::new(),
        }
    }
}

pub fn confusion(predictions: &[Label], golds: &[Label]) -> Result<ConfusionMatrix> {
    if predictions.len() != golds.len() {
        return Err(Error::validation(format!(
            "{} predictions for {} gold labels",
            predictions.len(),
            golds.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::validation("cannot build a confusion matrix from no predictions"));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &g) in predictions.iter().zip(golds) {
        match (p, g) {
            (Label::Positive, Label::Positive) => cm.tp += 1,
            (Label::Positive, Label::Negative) => cm.fp += 1,
            (Label::Negative, Label::Positive) => cm.fn_ += 1,
            (Label::Negative, Label::Negative) => cm.tn += 1,
        }
    }
    Ok(cm)
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics_from_confusion(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::validation("confusion matrix is empty"));
    }
    let mut flags = Vec::new();
    let accuracy = (cm.tp + cm.tn) as f64 / total as f64;
    let precision = ratio(cm.tp, cm.tp + cm.fp).unwrap_or_else(|| {
        flags.push(MetricFlag::PrecisionUndefined);
        0.0
    });
    let recall = ratio(cm.tp, cm.tp + cm.fn_).unwrap_or_else(|| {
        flags.push(MetricFlag::RecallUndefined);
        0.0
    });
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        flags.push(MetricFlag::F1Undefined);
        0.0
    };
    Ok(Metrics {
        accuracy,
        precision,
        recall,
        f1,
        flags,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

/// Thresholded predictions for every example of `test`.
pub fn predict_labels(model: &LinearModel, test: &Corpus, threshold: f64) -> Result<Vec<Label>> {
    let texts: Vec<&str> = test.iter().map(|e| e.text.as_str()).collect();
    featurize_batch(&texts, model.featurizer())
        .iter()
        .map(|x| {
            let p = model.predict_prob(x)?;
            Ok(if p >= threshold { Label::Positive } else { Label::Negative })
        })
        .collect()
}

pub fn gold_labels(test: &Corpus) -> Result<Vec<Label>> {
    test.iter()
        .map(|e| {
            e.label
                .ok_or_else(|| Error::validation(format!("test example {:?} has no label", e.id)))
        })
        .collect()
}

/// Predicts class 1 when the probability is at least `threshold`.
pub fn evaluate(model: &LinearModel, test: &Corpus, threshold: f64) -> Result<Evaluation> {
    let golds = gold_labels(test)?;
    let predictions = predict_labels(model, test, threshold)?;
    let confusion = confusion(&predictions, &golds)?;
    let metrics = metrics_from_confusion(&confusion)?;
    Ok(Evaluation { confusion, metrics })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub name: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub flags: Vec<MetricFlag>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub rows: Vec<ReportRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderedReport {
    pub text: String,
    pub csv: String,
    pub record: ReportRecord,
}

impl RenderedReport {
    pub fn json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.record).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Published by-article leaderboard scores of the hyperpartisan news
/// detection task, for context only.
pub fn reference_rows() -> Vec<(String, Metrics)> {
    [
        ("Tom Jumbo Grumbo", 0.806, 0.858, 0.732, 0.790),
        ("Sally Smedley", 0.809, 0.823, 0.787, 0.805),
        ("Vernon Fenwick", 0.820, 0.815, 0.828, 0.821),
        ("Bertha von Suttner", 0.822, 0.871, 0.755, 0.809),
        ("Otto Cheirk", 0.831, 0.823, 0.844, 0.834),
    ]
    .into_iter()
    .map(|(name, a, p, r, f)| (format!("{name} (reference)"), Metrics::new(a, p, r, f)))
    .collect()
}

/// Renders an aligned table with 3-decimal cells, plus CSV and JSON forms.
/// Reference rows, when requested, follow the local rows in the table only.
pub fn render_report(rows: &[(String, Metrics)], include_reference: bool) -> Result<RenderedReport> {
    if rows.is_empty() {
        return Err(Error::validation("report needs at least one row"));
    }
    let record = ReportRecord {
        rows: rows
            .iter()
            .map(|(name, m)| ReportRow {
                name: name.clone(),
                accuracy: m.accuracy,
                precision: m.precision,
                recall: m.recall,
                f1: m.f1,
                flags: m.flags.clone(),
            })
            .collect(),
    };

    let mut table_rows: Vec<(String, Metrics)> = rows.to_vec();
    if include_reference {
        table_rows.extend(reference_rows());
    }
    let name_width = table_rows
        .iter()
        .map(|(n, _)| n.chars().count())
        .chain(std::iter::once("Name".len()))
        .max()
        .unwrap_or(4);

    let mut text = String::new();
    let _ = writeln!(
        text,
        "{:<name_width$} | {:>6} | {:>6} | {:>6} | {:>6}",
        "Name", "Acc.", "Prec.", "Recall", "F1"
    );
    let _ = writeln!(text, "{}", "-".repeat(name_width + 4 * 9));
    for (i, (name, m)) in table_rows.iter().enumerate() {
        if include_reference && i == rows.len() {
            let _ = writeln!(text, "{}", "-".repeat(name_width + 4 * 9));
        }
        let _ = writeln!(
            text,
            "{:<name_width$} | {:>6.3} | {:>6.3} | {:>6.3} | {:>6.3}",
            name, m.accuracy, m.precision, m.recall, m.f1
        );
    }

    let mut csv = String::from("name,accuracy,precision,recall,f1,flags\n");
    for row in &record.rows {
        let flags: Vec<&str> = row.flags.iter().map(|f| f.as_str()).collect();
        let _ = writeln!(
            csv,
            "{},{:.3},{:.3},{:.3},{:.3},{}",
            csv_field(&row.name),
            row.accuracy,
            row.precision,
            row.recall,
            row.f1,
            flags.join(";")
        );
    }
    Ok(RenderedReport { text, csv, record })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
