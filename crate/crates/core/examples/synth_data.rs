//! Generates a small synthetic problem and writes it to a directory, then
//! reports how noisy the distant labels are.
//!
//! cargo run --example synth_data -- /tmp/synth

use std::error::Error;
use std::path::PathBuf;

use overlap_check::synthgen::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from);
    let config = SynthConfig {
        n_labeled: 200,
        n_pool: 5000,
        n_test: 500,
        noise_rate: 0.25,
        seed: 7,
        ..SynthConfig::default()
    };
    let data = generate(&config)?;
    println!(
        "{} labeled, {} pool, {} test; pool noise {:.4} (target {})",
        data.labeled.len(),
        data.pool.len(),
        data.test.len(),
        data.pool_noise_rate(),
        config.noise_rate
    );
    let first = &data.pool.examples()[0];
    let preview: String = first.text.split(' ').take(8).collect::<Vec<_>>().join(" ");
    println!(
        "{}: distant {:?}, truth {:?}: {preview} ...",
        first.id, first.label, data.pool_truth[&first.id]
    );
    if let Some(dir) = out {
        data.write_to_dir(&dir)?;
        println!("wrote corpora to {}", dir.display());
    }
    Ok(())
}
