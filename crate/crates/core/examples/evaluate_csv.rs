//! Round trip through the CSV format: write a generated dataset, read it
//! back, rank by its score column and report the metrics as JSON.
//!
//! Pass a path to evaluate an existing file instead.

use std::fs::File;
use std::io::BufReader;

use uplift_eval::curves::{curve_rebalanced, interpolate_iso_uplift};
use uplift_eval::generators::{generate, toy1_spec};
use uplift_eval::{load_dataset, rank_by_score, write_dataset, MetricReport, UpliftError};

fn main() -> uplift_eval::Result<()> {
    let path = match std::env::args_os().nth(1) {
        Some(p) => p.into(),
        None => {
            let p = std::env::temp_dir().join("uplift_eval_example.csv");
            let data = generate(&toy1_spec().with_n(5_000).with_seed(6))?;
            write_dataset(File::create(&p)?, &data.logged, Some(&data.scores))?;
            println!("wrote {}", p.display());
            p
        }
    };

    let dataset = load_dataset(BufReader::new(File::open(&path)?))?;
    let scores = dataset.scores().ok_or_else(|| UpliftError::Domain("the file has no score column".into()))?.to_vec();
    let scored = rank_by_score(&dataset, &scores)?;
    let curve = interpolate_iso_uplift(&curve_rebalanced(&scored)?, &scored)?;
    let report = MetricReport::from_curve(&curve).with_partial(&curve, 0.5 * curve.x_end())?;
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    Ok(())
}
