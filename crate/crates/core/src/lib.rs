//! Overlap-checking data augmentation for weakly supervised text
//! classification.
//!
//! A classifier trained on a small manually labelled set pseudo-labels a
//! large, noisily labelled distant-supervision pool. Only pool samples whose
//! pseudo-label agrees with their distant label are kept, the most confident
//! `n` of those are selected, and the classifier is retrained on the
//! labelled data plus the selection.
//!
//! Modules:
//!
//! - [`corpus`]: examples, corpora, JSONL I/O and seeded splits
//! - [`features`]: signed feature hashing over word n-grams
//! - [`classifier`]: logistic regression with early stopping
//! - [`selection`]: pseudo-labelling, agreement filtering, top-n ranking
//! - [`evaluation`]: confusion matrices, metrics, report rendering
//! - [`synthgen`]: synthetic corpora with controlled label noise
//! - [`runner`]: the three-step experiment and its config
//! - [`cli`]: the `overlap-check` command line

pub mod classifier;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod output;
pub mod runner;
pub mod selection;
pub mod synthgen;

pub use classifier::{LinearModel, TrainConfig, TrainHistory};
pub use corpus::{Corpus, Example, Label, Role, Source};
pub use error::{Error, Result};
pub use evaluation::{ConfusionMatrix, Metrics};
pub use features::{FeaturizerConfig, SparseVector};
pub use runner::{run_experiment, ExperimentConfig, ExperimentReport};
pub use selection::{overlap_select, PseudoLabeled, SelectionConfig, SelectionReport};
pub use synthgen::{generate, SynthConfig, SynthData};
