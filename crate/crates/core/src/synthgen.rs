//! Seeded two-class synthetic corpora.
//!
//! Documents are bags of words drawn from a class-conditional unigram model:
//! every vocabulary word has base weight 1, and a `class_signal` fraction of
//! the vocabulary is split evenly into words indicative of class 0 and of
//! class 1, whose weight in their own class is `signal_strength`. The
//! Bayes-optimal classifier for this model is log-linear in word counts.
//!
//! The generator emits a clean labelled set, a distant pool whose labels are
//! the true labels flipped independently with probability `noise_rate`, the
//! true pool labels as a separate table, and a clean test set.

use std::collections::BTreeMap;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Example, Label, Role};
use crate::error::{Error, Result, StageContext};
use crate::output::{read_to_string, write_json};

const MIN_DOC_LEN: usize = 5;

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub vocab_size: usize,
    pub class_signal: f64,
    pub signal_strength: f64,
    pub doc_len_mean: usize,
    pub n_labeled: usize,
    pub n_pool: usize,
    pub n_test: usize,
    pub noise_rate: f64,
    pub class_prior: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            vocab_size: 1000,
            class_signal: 0.2,
            signal_strength: 3.0,
            doc_len_mean: 40,
            n_labeled: 500,
            n_pool: 20_000,
            n_test: 1000,
            noise_rate: 0.3,
            class_prior: 0.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn indicative_per_class(&self) -> usize {
        ((self.vocab_size as f64 * self.class_signal) / 2.0).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::config(msg.to_string())) };
        check(self.vocab_size >= 2, "vocab_size must be at least 2")?;
        check(
            self.class_signal > 0.0 && self.class_signal < 1.0,
            "class_signal must be in (0, 1)",
        )?;
        check(
            self.indicative_per_class() >= 1,
            "vocab_size * class_signal must leave at least one indicative word per class",
        )?;
        check(
            self.signal_strength.is_finite() && self.signal_strength >= 1.0,
            "signal_strength must be >= 1",
        )?;
        check(self.doc_len_mean > 0, "doc_len_mean must be positive")?;
        check(
            (0.0..0.5).contains(&self.noise_rate),
            "noise_rate must be in [0, 0.5)",
        )?;
        check(
            (0.0..=1.0).contains(&self.class_prior),
            "class_prior must be in [0, 1]",
        )
    }
}

/// Output of [`generate`].
#[derive(Clone, Debug, PartialEq)]
pub struct SynthData {
    pub labeled: Corpus,
    pub pool: Corpus,
    /// Hidden true labels of the pool, by id.
    pub pool_truth: BTreeMap<String, Label>,
    pub test: Corpus,
}

/// Pronounceable, unique word for vocabulary index `i`.
fn word(mut i: usize) -> String {
    let base = CONSONANTS.len() * VOWELS.len();
    let mut syllables = Vec::new();
    loop {
        syllables.push(i % base);
        i /= base;
        if i == 0 && syllables.len() >= 2 {
            break;
        }
    }
    let mut out = String::with_capacity(syllables.len() * 2);
    for &s in syllables.iter().rev() {
        out.push(CONSONANTS[s / VOWELS.len()] as char);
        out.push(VOWELS[s % VOWELS.len()] as char);
    }
    out
}

struct Generator {
    vocab: Vec<String>,
    by_class: [WeightedIndex<f64>; 2],
    length: Poisson<f64>,
    prior: f64,
}

impl Generator {
    fn new(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Generator> {
        let vocab: Vec<String> = (0..config.vocab_size).map(word).collect();
        let mut order: Vec<usize> = (0..config.vocab_size).collect();
        order.shuffle(rng);
        let k = config.indicative_per_class();
        let mut class_weights = [vec![1.0; config.vocab_size], vec![1.0; config.vocab_size]];
        for &w in &order[..k] {
            class_weights[1][w] = config.signal_strength;
        }
        for &w in &order[k..2 * k] {
            class_weights[0][w] = config.signal_strength;
        }
        let dist = |w: &[f64]| {
            WeightedIndex::new(w).map_err(|e| Error::config(format!("word distribution: {e}")))
        };
        Ok(Generator {
            by_class: [dist(&class_weights[0])?, dist(&class_weights[1])?],
            vocab,
            length: Poisson::new(config.doc_len_mean as f64)
                .map_err(|e| Error::config(format!("document length: {e}")))?,
            prior: config.class_prior,
        })
    }

    fn document(&self, rng: &mut ChaCha8Rng) -> (Label, String) {
        let label = if rng.random_bool(self.prior) {
            Label::Positive
        } else {
            Label::Negative
        };
        let len = (self.length.sample(rng) as usize).max(MIN_DOC_LEN);
        let dist = &self.by_class[label.as_u8() as usize];
        let words: Vec<&str> = (0..len).map(|_| self.vocab[dist.sample(rng)].as_str()).collect();
        (label, words.join(" "))
    }
}

fn id(prefix: &str, i: usize, n: usize) -> String {
    let width = n.max(1).to_string().len();
    format!("{prefix}-{i:0width$}")
}

/// Deterministic in `config.seed`.
pub fn generate(config: &SynthConfig) -> Result<SynthData> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let generator = Generator::new(config, &mut rng)?;

    let labeled = (0..config.n_labeled)
        .map(|i| {
            let (label, text) = generator.document(&mut rng);
            Example::manual(id("labeled", i, config.n_labeled), text, label)
        })
        .collect();

    let mut pool_truth = BTreeMap::new();
    let pool = (0..config.n_pool)
        .map(|i| {
            let (truth, text) = generator.document(&mut rng);
            let flipped = rng.random_bool(config.noise_rate);
            let distant = if flipped { truth.flip() } else { truth };
            let example_id = id("pool", i, config.n_pool);
            pool_truth.insert(example_id.clone(), truth);
            Example::distant(example_id, text, distant)
        })
        .collect();

    let test = (0..config.n_test)
        .map(|i| {
            let (label, text) = generator.document(&mut rng);
            Example::manual(id("test", i, config.n_test), text, label)
        })
        .collect();

    Ok(SynthData {
        labeled: Corpus::new(labeled, Role::Labeled)?,
        pool: Corpus::new(pool, Role::Pool)?,
        pool_truth,
        test: Corpus::new(test, Role::Test)?,
    })
}

pub const LABELED_FILE: &str = "labeled.jsonl";
pub const POOL_FILE: &str = "pool.jsonl";
pub const TEST_FILE: &str = "test.jsonl";
pub const TRUTH_FILE: &str = "pool_truth.json";

impl SynthData {
    /// Fraction of pool examples whose distant label differs from the truth.
    pub fn pool_noise_rate(&self) -> f64 {
        noise_rate(
            self.pool.iter().map(|e| (e.id.as_str(), e.label)),
            &self.pool_truth,
        )
        .unwrap_or(0.0)
    }

    /// Writes the three corpora and the truth table into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.labeled.save_jsonl(&dir.join(LABELED_FILE))?;
        self.pool.save_jsonl(&dir.join(POOL_FILE))?;
        self.test.save_jsonl(&dir.join(TEST_FILE))?;
        save_truth(&dir.join(TRUTH_FILE), &self.pool_truth)
    }
}

/// Fraction of `(id, label)` pairs whose label differs from `truth`; `None`
/// for an empty input. Ids missing from `truth` or unlabeled items count as
/// errors of the caller and are skipped.
pub fn noise_rate<'a>(
    items: impl IntoIterator<Item = (&'a str, Option<Label>)>,
    truth: &BTreeMap<String, Label>,
) -> Option<f64> {
    let mut total = 0usize;
    let mut wrong = 0usize;
    for (id, label) in items {
        if let (Some(label), Some(t)) = (label, truth.get(id)) {
            total += 1;
            if label != *t {
                wrong += 1;
            }
        }
    }
    (total > 0).then(|| wrong as f64 / total as f64)
}

pub fn save_truth(path: &Path, truth: &BTreeMap<String, Label>) -> Result<()> {
    write_json(path, truth)
}

pub fn load_truth(path: &Path) -> Result<BTreeMap<String, Label>> {
    serde_json::from_str(&read_to_string(path)?)
        .map_err(|e| Error::validation(format!("{}: invalid truth file: {e}", path.display())))
        .stage("loading truth table")
}
