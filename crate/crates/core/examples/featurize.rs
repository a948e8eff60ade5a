//! Hashes a few texts into signed sparse n-gram vectors and shows how the
//! weighting options change the entries.
//!
//! cargo run --example featurize -- "Fake news about fake news"

use overlap_check::features::{featurize, hash_ngram, tokenize, FeaturizerConfig, Weighting, NGRAM_SEPARATOR};

fn main() {
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "Fake news about fake news".to_string());

    let config = FeaturizerConfig::default();
    let tokens = tokenize(&text, &config);
    println!("tokens: {tokens:?}");
    for window in tokens.windows(2).take(3) {
        let bigram = window.join(&NGRAM_SEPARATOR.to_string());
        let (index, sign) = hash_ngram(&bigram, config.num_buckets);
        println!("  {:<14} -> bucket {index:>6}, sign {sign:+}", window.join(" "));
    }

    for weighting in [Weighting::Binary, Weighting::Tf, Weighting::LogTf] {
        let raw = FeaturizerConfig { weighting, l2_normalize: false, ..config.clone() };
        let v = featurize(&text, &raw);
        let normalized = featurize(&text, &FeaturizerConfig { weighting, ..config.clone() });
        println!(
            "{weighting:?}: {} nonzero buckets, raw norm {:.4}, normalized norm {:.4}",
            v.len(),
            v.norm(),
            normalized.norm()
        );
    }
}
