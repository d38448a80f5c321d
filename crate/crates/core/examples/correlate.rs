//! Correlation between transfer score and target accuracy across epochs.

use tscore::report::{correlate, synth_run, HopkinsOptions};
use tscore::synth::{DomainSpec, ToyTrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::temp_dir().join("tscore-correlate");
    for lambda in [0.1, 50.0] {
        let dir = root.join(format!("lambda-{lambda}"));
        let train = ToyTrainConfig { adapt_weight: lambda, ..ToyTrainConfig::default() };
        synth_run(&DomainSpec::default(), &train, &dir, None)?;
        let r = correlate(&tscore::load_run(&dir)?, &HopkinsOptions::default())?;
        println!("lambda = {lambda:>4}: pearson r = {:+.3} over {} epochs", r.pearson_r, r.pairs.len());
    }
    Ok(())
}
