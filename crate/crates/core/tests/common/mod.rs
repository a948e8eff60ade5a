//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;

use overlap_check::classifier::{loss_and_gradient, LinearModel, Sample};
use overlap_check::corpus::{Corpus, Example, Label, Role};
use overlap_check::features::{FeaturizerConfig, SparseVector, Weighting};
use overlap_check::selection::{RankBy, SelectionConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WORDS: &[&str] = &["left", "right", "news", "fake", "report", "vote", "tax", "war"];

pub fn small_featurizer() -> FeaturizerConfig {
    FeaturizerConfig {
        ngram_min: 1,
        ngram_max: 2,
        num_buckets: 1 << 10,
        weighting: Weighting::Tf,
        l2_normalize: true,
        lowercase: true,
    }
}

/// A random model over the small featurizer.
pub fn random_model(rng: &mut ChaCha8Rng) -> LinearModel {
    let featurizer = small_featurizer();
    let weights = (0..featurizer.num_buckets).map(|_| rng.random_range(-4.0..4.0)).collect();
    LinearModel::from_parts(weights, rng.random_range(-0.5..0.5), featurizer).unwrap()
}

/// A distant pool of `size` short documents over a tiny vocabulary, so that
/// duplicate texts (and therefore exact probability ties) are common. Ids are
/// shuffled relative to insertion order.
pub fn random_pool(rng: &mut ChaCha8Rng, size: usize) -> Corpus {
    let mut ids: Vec<usize> = (0..size).collect();
    ids.shuffle(rng);
    let examples = ids
        .into_iter()
        .map(|id| {
            let len = rng.random_range(1..=3);
            let text: Vec<&str> = (0..len).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
            let label = if rng.random_bool(0.5) { Label::Positive } else { Label::Negative };
            Example::distant(format!("p{id:04}"), text.join(" "), label)
        })
        .collect();
    Corpus::new(examples, Role::Pool).unwrap()
}

pub fn random_selection_config(rng: &mut ChaCha8Rng, pool_size: usize) -> SelectionConfig {
    SelectionConfig {
        n: rng.random_range(1..=pool_size.max(1) + 5),
        min_confidence: if rng.random_bool(0.5) { 0.5 } else { rng.random_range(0.5..0.95) },
        balanced: rng.random_bool(0.3),
        rank_by: if rng.random_bool(0.5) { RankBy::Confidence } else { RankBy::RawP },
        pseudo_weight: 1.0,
    }
}

/// One candidate as seen by the oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleItem {
    pub id: String,
    pub label: Label,
    pub probability: f64,
    pub confidence: f64,
}

fn key(item: &OracleItem, rank_by: RankBy) -> f64 {
    match rank_by {
        RankBy::Confidence => item.confidence,
        RankBy::RawP => item.probability,
    }
}

/// `a` ranks strictly before `b`: larger key first, then smaller id.
fn before(a: &OracleItem, b: &OracleItem, rank_by: RankBy) -> bool {
    match key(a, rank_by).partial_cmp(&key(b, rank_by)).unwrap() {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => a.id < b.id,
    }
}

/// Repeatedly extracts the best remaining item: O(n * k), no library sort.
fn extract_best(mut items: Vec<OracleItem>, k: usize, rank_by: RankBy) -> Vec<OracleItem> {
    let mut out = Vec::new();
    while out.len() < k && !items.is_empty() {
        let mut best = 0;
        for i in 1..items.len() {
            if before(&items[i], &items[best], rank_by) {
                best = i;
            }
        }
        out.push(items.swap_remove(best));
    }
    out
}

/// Brute-force overlap selection: enumerate the pool, keep label agreement
/// above the confidence floor, rank exhaustively and truncate.
pub fn oracle_select(model: &LinearModel, pool: &Corpus, config: &SelectionConfig) -> Vec<OracleItem> {
    let mut candidates = Vec::new();
    for example in pool {
        let p = model.predict_text(&example.text).unwrap();
        let pseudo = if p >= 0.5 { Label::Positive } else { Label::Negative };
        let confidence = if p > 1.0 - p { p } else { 1.0 - p };
        if Some(pseudo) == example.label && confidence >= config.min_confidence {
            candidates.push(OracleItem {
                id: example.id.clone(),
                label: pseudo,
                probability: p,
                confidence,
            });
        }
    }
    if !config.balanced {
        return extract_best(candidates, config.n, config.rank_by);
    }
    let half = config.n.div_ceil(2);
    let mut merged = Vec::new();
    for class in [Label::Negative, Label::Positive] {
        let of_class: Vec<OracleItem> = candidates.iter().filter(|c| c.label == class).cloned().collect();
        merged.extend(extract_best(of_class, half, config.rank_by));
    }
    extract_best(merged, config.n, config.rank_by)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random (model, batch, l2) instance whose features and nonzero weights
/// live in the first `dim <= 50` coordinates.
pub struct GradInstance {
    pub dim: usize,
    pub model: LinearModel,
    pub batch: Vec<Sample>,
    pub l2_lambda: f64,
}

pub fn random_grad_instance(rng: &mut ChaCha8Rng) -> GradInstance {
    let featurizer = FeaturizerConfig { num_buckets: 1 << 10, ..FeaturizerConfig::default() };
    let dim = rng.random_range(1..=50);
    let mut weights = vec![0.0; featurizer.num_buckets];
    for w in weights.iter_mut().take(dim) {
        *w = rng.random_range(-1.0..1.0);
    }
    let model = LinearModel::from_parts(weights, rng.random_range(-1.0..1.0), featurizer).unwrap();
    let batch = (0..rng.random_range(1..=16))
        .map(|_| {
            let mut entries = Vec::new();
            for i in 0..dim {
                if rng.random_bool(0.4) {
                    entries.push((i as u32, rng.random_range(-2.0..2.0)));
                }
            }
            Sample {
                features: SparseVector::from_entries(entries).unwrap(),
                label: if rng.random_bool(0.5) { Label::Positive } else { Label::Negative },
                weight: rng.random_range(0.1..=1.0),
            }
        })
        .collect();
    let l2_lambda = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(1e-4..1e-1) };
    GradInstance { dim, model, batch, l2_lambda }
}

/// Weighted-mean cross-entropy plus `l2 * ||w||^2`, written out directly
/// over dense parameters.
pub fn naive_loss(weights: &[f64], bias: f64, batch: &[Sample], l2: f64) -> f64 {
    let mut total = 0.0;
    let mut weight_sum = 0.0;
    for s in batch {
        let z = bias + s.features.entries().iter().map(|&(i, v)| weights[i as usize] * v).sum::<f64>();
        // -ln sigmoid(z) and -ln(1 - sigmoid(z))
        let nll = match s.label {
            Label::Positive => (-z).exp().ln_1p(),
            Label::Negative => z.exp().ln_1p(),
        };
        total += s.weight * nll;
        weight_sum += s.weight;
    }
    total / weight_sum + l2 * weights.iter().map(|w| w * w).sum::<f64>()
}

pub const FD_STEP: f64 = 1e-5;
/// Gradients smaller than this are compared absolutely: central differences
/// carry roughly 1e-11 of rounding noise at this step size.
pub const FD_FLOOR: f64 = 1e-6;

/// Largest per-coordinate relative error between the analytic gradient and
/// central finite differences of [`naive_loss`].
pub fn max_gradient_error(inst: &GradInstance) -> f64 {
    let grad = loss_and_gradient(&inst.model, &inst.batch, inst.l2_lambda).unwrap();
    let mut analytic = vec![0.0; inst.dim];
    for &(i, g) in &grad.grad_weights {
        assert!((i as usize) < inst.dim, "gradient touches untouched coordinate {i}");
        analytic[i as usize] = g;
    }
    let w0 = inst.model.weights()[..inst.dim].to_vec();
    let b0 = inst.model.bias();
    let loss = |w: &[f64], b: f64| naive_loss(w, b, &inst.batch, inst.l2_lambda);
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(FD_FLOOR);

    let mut worst = rel(grad.loss, loss(&w0, b0));
    for j in 0..inst.dim {
        let mut plus = w0.clone();
        let mut minus = w0.clone();
        plus[j] += FD_STEP;
        minus[j] -= FD_STEP;
        let numeric = (loss(&plus, b0) - loss(&minus, b0)) / (2.0 * FD_STEP);
        worst = worst.max(rel(analytic[j], numeric));
    }
    let numeric_bias = (loss(&w0, b0 + FD_STEP) - loss(&w0, b0 - FD_STEP)) / (2.0 * FD_STEP);
    worst.max(rel(grad.grad_bias, numeric_bias))
}

use overlap_check::evaluation::{ConfusionMatrix, MetricFlag};

pub struct MetricFixture {
    pub cm: ConfusionMatrix,
    /// accuracy, precision, recall, f1 as exact fractions.
    pub expected: [f64; 4],
    pub flags: &'static [MetricFlag],
}

/// Hand-computed metrics, including every 0/0 case.
pub fn metric_fixtures() -> Vec<MetricFixture> {
    use MetricFlag::{F1Undefined as F, PrecisionUndefined as P, RecallUndefined as R};
    let f = |tp, fp, fn_, tn, expected, flags| MetricFixture {
        cm: ConfusionMatrix::new(tp, fp, fn_, tn),
        expected,
        flags,
    };
    vec![
        f(5, 0, 0, 5, [1.0, 1.0, 1.0, 1.0], &[]),
        f(10, 0, 0, 0, [1.0, 1.0, 1.0, 1.0], &[]),
        f(1, 0, 0, 0, [1.0, 1.0, 1.0, 1.0], &[]),
        f(1, 1, 1, 1, [0.5, 0.5, 0.5, 0.5], &[]),
        f(3, 1, 2, 4, [7.0 / 10.0, 3.0 / 4.0, 3.0 / 5.0, 2.0 / 3.0], &[]),
        f(1, 2, 3, 4, [5.0 / 10.0, 1.0 / 3.0, 1.0 / 4.0, 2.0 / 7.0], &[]),
        f(50, 10, 5, 35, [85.0 / 100.0, 5.0 / 6.0, 10.0 / 11.0, 20.0 / 23.0], &[]),
        f(2, 7, 0, 1, [3.0 / 10.0, 2.0 / 9.0, 1.0, 4.0 / 11.0], &[]),
        // every prediction wrong: P and R are 0, F1 is 0/0
        f(0, 5, 5, 0, [0.0, 0.0, 0.0, 0.0], &[F]),
        // no positive predictions and no positive golds
        f(0, 0, 0, 10, [1.0, 0.0, 0.0, 0.0], &[P, R, F]),
        // no positive predictions
        f(0, 0, 10, 0, [0.0, 0.0, 0.0, 0.0], &[P, F]),
        f(0, 0, 5, 5, [0.5, 0.0, 0.0, 0.0], &[P, F]),
        // no positive golds
        f(0, 10, 0, 0, [0.0, 0.0, 0.0, 0.0], &[R, F]),
        f(0, 5, 0, 5, [0.5, 0.0, 0.0, 0.0], &[R, F]),
    ]
}

/// Checks one fixture, returning a description of the first mismatch.
pub fn check_metric_fixture(fx: &MetricFixture) -> Result<(), String> {
    let m = overlap_check::evaluation::metrics_from_confusion(&fx.cm).map_err(|e| e.to_string())?;
    let got = [m.accuracy, m.precision, m.recall, m.f1];
    for (name, (g, w)) in ["accuracy", "precision", "recall", "f1"].iter().zip(got.iter().zip(fx.expected)) {
        if (g - w).abs() > 1e-12 {
            return Err(format!("{:?}: {name} = {g}, expected {w}", fx.cm));
        }
    }
    if m.flags != fx.flags {
        return Err(format!("{:?}: flags {:?}, expected {:?}", fx.cm, m.flags, fx.flags));
    }
    Ok(())
}

use std::collections::BTreeMap as Map;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_overlap-check")
}

pub fn run_cli(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join(name)
}

pub fn shipped_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join("default.toml")
}

/// Every file below `dir` with its contents.
pub fn snapshot(dir: &Path) -> Map<PathBuf, Vec<u8>> {
    let mut out = Map::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.clone(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

/// A quick end-to-end configuration over a small synthetic problem.
pub const SMALL_CONFIG: &str = r#"
num_seeds = 2

[synth]
n_labeled = 300
n_pool = 1500
n_test = 300
seed = 3

[features]
num_buckets = 16384

[train]
learning_rate = 3.0
max_epochs = 40
patience = 10
seed = 1

[selection]
n = 200
balanced = true
"#;

/// Small config text pointing at file-based data instead of synthgen.
pub fn data_config(dir: &Path) -> String {
    let without_seeds = SMALL_CONFIG.replace("num_seeds = 2", "num_seeds = 1");
    format!(
        "{without_seeds}\n[data]\nlabeled = \"{0}/labeled.jsonl\"\npool = \"{0}/pool.jsonl\"\ntest = \"{0}/test.jsonl\"\ntruth = \"{0}/pool_truth.json\"\n",
        dir.display()
    )
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}
