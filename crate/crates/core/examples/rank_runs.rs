//! Rank runs trained with different entropy weights by their last-epoch
//! transfer score.

use tscore::report::{rank_runs, synth_run, HopkinsOptions, RankEpoch};
use tscore::synth::{DomainSpec, ToyTrainConfig};
use tscore::SelectionConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::temp_dir().join("tscore-rank");
    let mut runs = Vec::new();
    for lambda in [0.0, 0.1, 50.0] {
        let dir = root.join(format!("lambda-{lambda}"));
        let train = ToyTrainConfig { adapt_weight: lambda, ..ToyTrainConfig::default() };
        synth_run(&DomainSpec::default(), &train, &dir, None)?;
        runs.push(tscore::load_run(&dir)?);
    }
    let report = rank_runs(&runs, RankEpoch::Last, &HopkinsOptions::default(), &SelectionConfig::default())?;
    print!("{}", report.to_csv()?);
    Ok(())
}
