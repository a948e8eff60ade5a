//! Signed feature hashing over word n-grams.
//!
//! Tokens are maximal runs of Unicode alphanumeric characters. An n-gram is
//! its tokens joined by `\x1f`, hashed with 64-bit FNV-1a; the bucket is the
//! hash modulo `num_buckets` and the sign comes from bit 63. The output is
//! bit-exact across platforms.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Separator placed between the tokens of an n-gram before hashing.
pub const NGRAM_SEPARATOR: char = '\x1f';

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Each distinct n-gram contributes its sign once.
    Binary,
    /// Raw count.
    Tf,
    /// `1 + ln(count)`.
    LogTf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturizerConfig {
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub num_buckets: usize,
    pub weighting: Weighting,
    pub l2_normalize: bool,
    pub lowercase: bool,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        FeaturizerConfig {
            ngram_min: 1,
            ngram_max: 2,
            num_buckets: 1 << 18,
            weighting: Weighting::LogTf,
            l2_normalize: true,
            lowercase: true,
        }
    }
}

impl FeaturizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.ngram_min && self.ngram_min <= self.ngram_max && self.ngram_max <= 5) {
            return Err(Error::config(format!(
                "n-gram range must satisfy 1 <= min <= max <= 5, got [{}, {}]",
                self.ngram_min, self.ngram_max
            )));
        }
        if !self.num_buckets.is_power_of_two()
            || self.num_buckets < (1 << 10)
            || self.num_buckets > (1 << 24)
        {
            return Err(Error::config(format!(
                "num_buckets must be a power of two in [2^10, 2^24], got {}",
                self.num_buckets
            )));
        }
        Ok(())
    }
}

/// Sparse feature vector with strictly increasing indices and finite,
/// nonzero values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Builds a vector from arbitrary entries: sorts by index, sums
    /// duplicates and drops exact zeros.
    pub fn from_entries(mut entries: Vec<(u32, f64)>) -> Result<SparseVector> {
        if entries.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::validation("sparse vector values must be finite"));
        }
        entries.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (index, value) in entries {
            match merged.last_mut() {
                Some((last, acc)) if *last == index => *acc += value,
                _ => merged.push((index, value)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        Ok(SparseVector { entries: merged })
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn max_index(&self) -> Option<u32> {
        self.entries.last().map(|&(i, _)| i)
    }

    /// Dot product with a dense vector. The caller checks dimensions.
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, v)| dense[i as usize] * v)
            .sum()
    }
}

/// Splits on maximal runs of alphanumeric characters.
pub fn tokenize(text: &str, config: &FeaturizerConfig) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| {
            if config.lowercase {
                t.to_lowercase()
            } else {
                t.to_string()
            }
        })
        .collect()
}

pub fn fnv1a_64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET_BASIS, |hash, &b| {
        (hash ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// Maps an already-joined n-gram to `(bucket, sign)`.
pub fn hash_ngram(ngram: &str, num_buckets: usize) -> (u32, f64) {
    let hash = fnv1a_64(ngram.as_bytes());
    let index = (hash % num_buckets as u64) as u32;
    let sign = if hash >> 63 == 0 { 1.0 } else { -1.0 };
    (index, sign)
}

fn ngram_counts(tokens: &[String], config: &FeaturizerConfig) -> BTreeMap<String, u32> {
    let sep = NGRAM_SEPARATOR.to_string();
    let mut counts = BTreeMap::new();
    for n in config.ngram_min..=config.ngram_max {
        for window in tokens.windows(n) {
            *counts.entry(window.join(&sep)).or_insert(0) += 1;
        }
    }
    counts
}

pub fn featurize(text: &str, config: &FeaturizerConfig) -> SparseVector {
    let tokens = tokenize(text, config);
    let mut buckets: BTreeMap<u32, f64> = BTreeMap::new();
    for (ngram, count) in ngram_counts(&tokens, config) {
        let weight = match config.weighting {
            Weighting::Binary => 1.0,
            Weighting::Tf => f64::from(count),
            Weighting::LogTf => 1.0 + f64::from(count).ln(),
        };
        let (index, sign) = hash_ngram(&ngram, config.num_buckets);
        *buckets.entry(index).or_insert(0.0) += sign * weight;
    }
    let mut entries: Vec<(u32, f64)> = buckets.into_iter().filter(|&(_, v)| v != 0.0).collect();
    if config.l2_normalize && !entries.is_empty() {
        let norm = entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        for (_, v) in &mut entries {
            *v /= norm;
        }
    }
    SparseVector { entries }
}

/// Featurizes many texts in parallel; output order matches input order and
/// each vector equals the sequential result.
pub fn featurize_batch<S: AsRef<str> + Sync>(texts: &[S], config: &FeaturizerConfig) -> Vec<SparseVector> {
    texts
        .par_iter()
        .map(|t| featurize(t.as_ref(), config))
        .collect()
}
