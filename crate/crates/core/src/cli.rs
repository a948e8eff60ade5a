//! `overlap-check` subcommands.
//!
//! Exit codes: 0 on success, 1 for validation or config errors, 2 for I/O
//! errors. Outputs are staged in temporary files and renamed into place only
//! when the command succeeds, so a failed run leaves no partial files.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::classifier::LinearModel;
use crate::corpus::{Corpus, Role};
use crate::error::{Error, Result, StageContext};
use crate::evaluation::{evaluate, render_report};
use crate::output::{json_bytes, write_all_atomic};
use crate::runner::{retrain_joint, run_experiment, train_baseline, ExperimentConfig};
use crate::selection::{overlap_select, RankBy, SelectionConfig};
use crate::synthgen::{self, generate};

#[derive(Debug, Parser)]
#[command(name = "overlap-check", version, about = "Overlap-checking selection of distant-supervision samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RankArg {
    Confidence,
    RawP,
}

impl From<RankArg> for RankBy {
    fn from(r: RankArg) -> RankBy {
        match r {
            RankArg::Confidence => RankBy::Confidence,
            RankArg::RawP => RankBy::RawP,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic labeled, pool and test corpora plus the pool truth table.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `synth.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a baseline model on a labeled corpus with early stopping.
    Train {
        #[arg(long)]
        labeled: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        model_out: PathBuf,
        /// Defaults to the model path with a `.history.json` extension.
        #[arg(long)]
        history_out: Option<PathBuf>,
        /// Overrides `train.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Pseudo-label a pool and select the top-n samples that agree with their distant labels.
    Select {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        min_confidence: f64,
        #[arg(long)]
        balanced: bool,
        #[arg(long, value_enum, default_value = "confidence")]
        rank_by: RankArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Retrain from scratch on labeled data plus selected pseudo samples.
    Retrain {
        #[arg(long)]
        labeled: PathBuf,
        #[arg(long)]
        pseudo: PathBuf,
        /// Overrides `pseudo_weight`.
        #[arg(long)]
        pseudo_weight: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        model_out: PathBuf,
        #[arg(long)]
        history_out: Option<PathBuf>,
        /// Starting model when `fine_tune = true`.
        #[arg(long)]
        init_model: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a model on a labeled test corpus.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Report path; `.csv` selects CSV, anything else JSON.
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum)]
        format: Option<ReportFormat>,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Run the full three-step experiment over several seeds.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `num_seeds`.
        #[arg(long)]
        num_seeds: Option<usize>,
    },
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn history_path(model_out: &Path, explicit: Option<PathBuf>) -> PathBuf {
    explicit.unwrap_or_else(|| model_out.with_extension("history.json"))
}

fn model_bytes(model: &LinearModel) -> Vec<u8> {
    json_bytes(&model.to_artifact())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Synth { config, out, seed } => {
            let mut config = load_config(config.as_deref())?;
            if let Some(seed) = seed {
                config.synth.seed = seed;
            }
            let data = generate(&config.synth)?;
            let labeled = data.labeled.to_jsonl_string();
            let pool = data.pool.to_jsonl_string();
            let test = data.test.to_jsonl_string();
            let truth = json_bytes(&data.pool_truth);
            ensure_dir(&out)?;
            write_all_atomic(&[
                (&out.join(synthgen::LABELED_FILE), labeled.as_bytes()),
                (&out.join(synthgen::POOL_FILE), pool.as_bytes()),
                (&out.join(synthgen::TEST_FILE), test.as_bytes()),
                (&out.join(synthgen::TRUTH_FILE), &truth),
            ])?;
            println!(
                "wrote {} labeled, {} pool, {} test examples to {} (pool noise {:.4})",
                data.labeled.len(),
                data.pool.len(),
                data.test.len(),
                out.display(),
                data.pool_noise_rate()
            );
        }
        Command::Train {
            labeled,
            config,
            model_out,
            history_out,
            seed,
        } => {
            let config = load_config(config.as_deref())?;
            let seed = seed.unwrap_or(config.train.seed);
            let labeled = Corpus::load_jsonl_as(&labeled, Role::Labeled).stage("loading labeled corpus")?;
            let (model, history, _, _) = train_baseline(&labeled, &config, seed).stage("training")?;
            let history_out = history_path(&model_out, history_out);
            write_all_atomic(&[
                (&model_out, &model_bytes(&model)),
                (&history_out, &json_bytes(&history)),
            ])?;
            println!(
                "trained {} epochs (best {}, converged: {}), best validation loss {:.6}",
                history.stopped_epoch, history.best_epoch, history.converged, history.best_val_loss
            );
        }
        Command::Select {
            model,
            pool,
            n,
            min_confidence,
            balanced,
            rank_by,
            out,
            report,
        } => {
            let model = LinearModel::load(&model).stage("loading model")?;
            let pool = Corpus::load_jsonl_as(&pool, Role::Pool).stage("loading pool corpus")?;
            let config = SelectionConfig {
                n,
                min_confidence,
                balanced,
                rank_by: rank_by.into(),
                pseudo_weight: 1.0,
            };
            let selection = overlap_select(&model, &pool, &config).stage("overlap selection")?;
            let corpus = selection.pseudo_corpus().to_jsonl_string();
            write_all_atomic(&[(&out, corpus.as_bytes()), (&report, &json_bytes(&selection.to_record()))])?;
            println!(
                "pool {} -> agreement {} -> selected {} (shortfall {})",
                selection.pool_size,
                selection.agreement_size,
                selection.selected.len(),
                selection.shortfall
            );
        }
        Command::Retrain {
            labeled,
            pseudo,
            pseudo_weight,
            config,
            model_out,
            history_out,
            init_model,
            seed,
        } => {
            let mut config = load_config(config.as_deref())?;
            if let Some(w) = pseudo_weight {
                config.pseudo_weight = w;
            }
            config.validate()?;
            let seed = seed.unwrap_or(config.train.seed);
            let labeled = Corpus::load_jsonl_as(&labeled, Role::Labeled).stage("loading labeled corpus")?;
            let pseudo = Corpus::load_jsonl_as(&pseudo, Role::Labeled).stage("loading pseudo corpus")?;
            let weighted: Vec<_> = pseudo
                .into_examples()
                .into_iter()
                .map(|mut e| {
                    e.weight = config.pseudo_weight;
                    e
                })
                .collect();
            let pseudo = Corpus::new(weighted, Role::Labeled)?;
            let init = init_model.as_deref().map(LinearModel::load).transpose().stage("loading initial model")?;
            let (train, val) = labeled.holdout(config.val_fraction, seed)?;
            let (model, history) =
                retrain_joint(&train, &val, &pseudo, &config, seed, init.as_ref()).stage("joint retraining")?;
            let history_out = history_path(&model_out, history_out);
            write_all_atomic(&[
                (&model_out, &model_bytes(&model)),
                (&history_out, &json_bytes(&history)),
            ])?;
            println!(
                "retrained on {} labeled + {} pseudo examples, {} epochs",
                train.len(),
                pseudo.len(),
                history.stopped_epoch
            );
        }
        Command::Eval {
            model,
            test,
            report,
            format,
            threshold,
        } => {
            if !(0.0..=1.0).contains(&threshold) {
                return Err(Error::config("threshold must be in [0, 1]"));
            }
            let name = model
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "model".to_string());
            let model = LinearModel::load(&model).stage("loading model")?;
            let test = Corpus::load_jsonl_as(&test, Role::Test).stage("loading test corpus")?;
            let evaluation = evaluate(&model, &test, threshold)?;
            let rendered = render_report(&[(name, evaluation.metrics)], false)?;
            let format = format.unwrap_or_else(|| {
                if report.extension().is_some_and(|e| e == "csv") {
                    ReportFormat::Csv
                } else {
                    ReportFormat::Json
                }
            });
            let body = match format {
                ReportFormat::Json => rendered.json(),
                ReportFormat::Csv => rendered.csv.clone(),
            };
            write_all_atomic(&[(&report, body.as_bytes())])?;
            print!("{}", rendered.text);
        }
        Command::Experiment {
            config,
            out,
            num_seeds,
        } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(n) = num_seeds {
                config.num_seeds = n;
            }
            let report = run_experiment(&config)?;
            let table = render_report(&report.table_rows(), true)?;
            let csv = report.per_seed_csv();
            ensure_dir(&out)?;
            write_all_atomic(&[
                (&out.join("report.json"), &json_bytes(&report)),
                (&out.join("per_seed.csv"), csv.as_bytes()),
                (&out.join("report.txt"), table.text.as_bytes()),
            ])?;
            print!("{}", table.text);
            let s = &report.summary;
            println!(
                "seeds {}: accuracy delta {:+.4} (min {:+.4}), selected noise {}",
                s.num_seeds,
                s.accuracy_delta_mean,
                s.accuracy_delta_min,
                s.selected_noise_rate_mean
                    .map(|v| format!("{v:.4}"))
                    .unwrap_or_else(|| "n/a".to_string())
            );
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the subcommand,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
