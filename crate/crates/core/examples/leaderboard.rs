//! Renders a results table next to the published leaderboard rows, plus
//! the CSV and JSON forms written by `overlap-check eval`.

use std::error::Error;

use overlap_check::evaluation::{metrics_from_confusion, render_report, ConfusionMatrix};

fn main() -> Result<(), Box<dyn Error>> {
    let rows = vec![
        ("baseline".to_string(), metrics_from_confusion(&ConfusionMatrix::new(431, 52, 69, 448))?),
        ("overlap-check".to_string(), metrics_from_confusion(&ConfusionMatrix::new(452, 31, 48, 469))?),
        // nothing predicted positive: precision and F1 are undefined and flagged
        ("all-negative".to_string(), metrics_from_confusion(&ConfusionMatrix::new(0, 0, 500, 500))?),
    ];
    let report = render_report(&rows, true)?;
    println!("{}", report.text);
    println!("{}", report.csv);
    print!("{}", report.json());
    Ok(())
}
