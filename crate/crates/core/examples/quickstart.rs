//! Minimal end-to-end run: load a labeled CSV, cross-validate one
//! feature set, print the mean accuracy. Mirrors the README example.

use std::collections::HashMap;

use lexiclass::corpus::{load_csv, Label};
use lexiclass::eval::{cross_validate, Hyperparams};
use lexiclass::features::FeatureSpec;

fn main() -> Result<(), lexiclass::Error> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "data.csv".into());
    let map = HashMap::from([
        ("0".to_string(), Label::Hate),
        ("1".to_string(), Label::Offensive),
        ("2".to_string(), Label::Ok),
    ]);
    let corpus = load_csv(&path, "tweet", "class", &map)?;
    let spec = FeatureSpec::parse("char:4")?;
    let report = cross_validate::<f64>(&corpus, &[spec], 10, 42, &Hyperparams::default())?;
    println!("mean accuracy {:.3}", report.mean_accuracy);
    Ok(())
}
