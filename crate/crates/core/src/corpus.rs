//! Document collections: manually labelled sets, distant-supervision pools,
//! test sets and pseudo-labelled selections, with JSONL persistence.
//!
//! One record per line:
//!
//! ```text
//! {"id":"a","text":"...","label":1,"source":"manual","weight":1.0}
//! ```
//!
//! `label`, `source` and `weight` are optional on input. A missing source
//! becomes `manual` when a label is present and `distant` otherwise; a
//! missing weight becomes `1.0`. Distant-pool records normally still carry a
//! label: it is the publisher-derived (noisy) label the overlap check needs.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::output::{read_to_string, write_atomic};

/// Binary class. `Positive` (1) is the hyperpartisan/biased class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn from_int(value: i64) -> Result<Label> {
        match value {
            0 => Ok(Label::Negative),
            1 => Ok(Label::Positive),
            other => Err(Error::validation(format!(
                "label must be 0 or 1, got {other}"
            ))),
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Label::Negative => 0,
            Label::Positive => 1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.as_u8())
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = i64::deserialize(deserializer)?;
        Label::from_int(raw).map_err(serde::de::Error::custom)
    }
}

/// Where an example's label came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Manual,
    Distant,
    Pseudo,
}

/// One document. Fields are validated on construction through [`Example::new`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Example {
    pub id: String,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    pub source: Source,
    pub weight: f64,
}

impl Example {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        label: Option<Label>,
        source: Source,
        weight: f64,
    ) -> Result<Example> {
        let example = Example {
            id: id.into(),
            text: text.into(),
            label,
            source,
            weight,
        };
        example.validate()?;
        Ok(example)
    }

    pub fn manual(id: impl Into<String>, text: impl Into<String>, label: Label) -> Example {
        Example {
            id: id.into(),
            text: text.into(),
            label: Some(label),
            source: Source::Manual,
            weight: 1.0,
        }
    }

    pub fn distant(id: impl Into<String>, text: impl Into<String>, label: Label) -> Example {
        Example {
            id: id.into(),
            text: text.into(),
            label: Some(label),
            source: Source::Distant,
            weight: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::validation("example id must be non-empty"));
        }
        if matches!(self.source, Source::Manual | Source::Pseudo) && self.label.is_none() {
            return Err(Error::validation(format!(
                "example {:?}: source {:?} requires a label",
                self.id, self.source
            )));
        }
        if !(self.weight.is_finite() && self.weight >= 0.0) {
            return Err(Error::validation(format!(
                "example {:?}: weight must be finite and non-negative, got {}",
                self.id, self.weight
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Labeled,
    Pool,
    Test,
    Mixed,
}

/// An ordered, id-unique collection of examples.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    examples: Vec<Example>,
    role: Role,
}

impl Corpus {
    pub fn new(examples: Vec<Example>, role: Role) -> Result<Corpus> {
        let mut seen = HashSet::with_capacity(examples.len());
        for example in &examples {
            example.validate()?;
            if !seen.insert(example.id.as_str()) {
                return Err(Error::Integrity(format!("duplicate id {:?}", example.id)));
            }
            if matches!(role, Role::Labeled | Role::Test) && example.label.is_none() {
                return Err(Error::validation(format!(
                    "example {:?} has no label but corpus role is {role:?}",
                    example.id
                )));
            }
        }
        Ok(Corpus { examples, role })
    }

    pub fn empty(role: Role) -> Corpus {
        Corpus {
            examples: Vec::new(),
            role,
        }
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn into_examples(self) -> Vec<Example> {
        self.examples
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Example> {
        self.examples.iter()
    }

    /// Re-validates the examples under a different role.
    pub fn with_role(self, role: Role) -> Result<Corpus> {
        Corpus::new(self.examples, role)
    }

    /// Role implied by the sources present: all manual → labeled, all
    /// distant → pool, anything else (including empty) → mixed.
    fn infer_role(examples: &[Example]) -> Role {
        if examples.is_empty() {
            Role::Mixed
        } else if examples.iter().all(|e| e.source == Source::Manual) {
            Role::Labeled
        } else if examples.iter().all(|e| e.source == Source::Distant) {
            Role::Pool
        } else {
            Role::Mixed
        }
    }

    pub fn from_jsonl_str(content: &str) -> Result<Corpus> {
        let examples = parse_lines(content)?;
        let role = Corpus::infer_role(&examples);
        Corpus::new(examples, role)
    }

    /// Loads a JSONL file, inferring the role from the records' sources.
    pub fn load_jsonl(path: &Path) -> Result<Corpus> {
        Corpus::from_jsonl_str(&read_to_string(path)?)
    }

    /// Loads a JSONL file and checks it against `role`.
    pub fn load_jsonl_as(path: &Path, role: Role) -> Result<Corpus> {
        let examples = parse_lines(&read_to_string(path)?)?;
        Corpus::new(examples, role)
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut out = String::new();
        for example in &self.examples {
            // serializing a plain struct of strings and numbers cannot fail
            out.push_str(&serde_json::to_string(example).expect("example serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_jsonl_string().as_bytes())
    }

    fn shuffled_indices(&self, seed: u64) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.examples.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        order
    }

    fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus {
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
            role: self.role,
        }
    }

    /// Seeded shuffle, then contiguous slices of `floor(n*train)`,
    /// `floor(n*val)` and the remainder.
    pub fn split(&self, train: f64, val: f64, seed: u64) -> Result<(Corpus, Corpus, Corpus)> {
        if !(train > 0.0 && val > 0.0 && train + val < 1.0) {
            return Err(Error::validation(format!(
                "split fractions must be positive with train + val < 1, got ({train}, {val})"
            )));
        }
        let n = self.examples.len();
        let n_train = (n as f64 * train).floor() as usize;
        let n_val = (n as f64 * val).floor() as usize;
        let order = self.shuffled_indices(seed);
        let (train_idx, rest) = order.split_at(n_train);
        let (val_idx, test_idx) = rest.split_at(n_val);
        Ok((
            self.subset(train_idx),
            self.subset(val_idx),
            self.subset(test_idx),
        ))
    }

    /// Two-way split used for early stopping: after the same seeded shuffle
    /// as [`Corpus::split`], the last `floor(n*val_fraction)` examples form the
    /// validation set.
    pub fn holdout(&self, val_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
        if !(val_fraction > 0.0 && val_fraction < 1.0) {
            return Err(Error::validation(format!(
                "validation fraction must be in (0, 1), got {val_fraction}"
            )));
        }
        let n = self.examples.len();
        let n_val = (n as f64 * val_fraction).floor() as usize;
        let order = self.shuffled_indices(seed);
        let (train_idx, val_idx) = order.split_at(n - n_val);
        Ok((self.subset(train_idx), self.subset(val_idx)))
    }

    /// Concatenates two corpora; ids must stay unique.
    pub fn concat(&self, other: &Corpus, role: Role) -> Result<Corpus> {
        let mut examples = self.examples.clone();
        examples.extend(other.examples.iter().cloned());
        Corpus::new(examples, role)
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Example;
    type IntoIter = std::slice::Iter<'a, Example>;

    fn into_iter(self) -> Self::IntoIter {
        self.examples.iter()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    text: String,
    #[serde(default)]
    label: Option<i64>,
    #[serde(default)]
    source: Option<String>,
    #[serde(default)]
    weight: Option<f64>,
}

fn parse_lines(content: &str) -> Result<Vec<Example>> {
    let mut examples = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let at_line = |e: Error| match e {
            Error::Validation(msg) => Error::Validation(format!("line {line_no}: {msg}")),
            other => other,
        };
        let label = raw.label.map(Label::from_int).transpose().map_err(at_line)?;
        let source = match raw.source.as_deref() {
            None if label.is_some() => Source::Manual,
            None => Source::Distant,
            Some("manual") => Source::Manual,
            Some("distant") => Source::Distant,
            Some("pseudo") => Source::Pseudo,
            Some(other) => {
                return Err(Error::validation(format!(
                    "line {line_no}: unknown source {other:?}"
                )))
            }
        };
        let example = Example::new(raw.id, raw.text, label, source, raw.weight.unwrap_or(1.0))
            .map_err(at_line)?;
        examples.push(example);
    }
    Ok(examples)
}
