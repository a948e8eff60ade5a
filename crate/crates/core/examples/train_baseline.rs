//! Trains the baseline classifier on a synthetic labelled set, prints the
//! per-epoch history and evaluates on the test set.

use std::error::Error;

use overlap_check::evaluation::evaluate;
use overlap_check::runner::{train_baseline, ExperimentConfig};
use overlap_check::synthgen::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn Error>> {
    let data = generate(&SynthConfig { n_pool: 1, ..SynthConfig::default() })?;
    let config = ExperimentConfig::default();
    let (model, history, train, val) = train_baseline(&data.labeled, &config, 0)?;
    println!("{} train / {} validation examples", train.len(), val.len());
    for e in &history.epochs {
        let mark = if e.epoch == history.best_epoch { " *" } else { "" };
        println!(
            "epoch {:>3}  train {:.4}  val {:.4}  val acc {:.3}{mark}",
            e.epoch, e.train_loss, e.val_loss, e.val_accuracy
        );
    }
    let eval = evaluate(&model, &data.test, 0.5)?;
    let m = &eval.metrics;
    println!(
        "test: acc {:.4} prec {:.4} rec {:.4} f1 {:.4} {:?}",
        m.accuracy, m.precision, m.recall, m.f1, eval.confusion
    );
    Ok(())
}
