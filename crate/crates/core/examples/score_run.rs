//! Export a short synthetic run and score each epoch from disk.

use tscore::report::{score_run, synth_run, HopkinsOptions};
use tscore::synth::{DomainSpec, ToyTrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("tscore-score-run");
    let train = ToyTrainConfig { epochs: 8, ..ToyTrainConfig::default() };
    synth_run(&DomainSpec::default(), &train, &dir, None)?;

    let run = tscore::load_run(&dir)?;
    println!("{} ({} epochs)", run.run_id(), run.len());
    println!("epoch      U      H      M      T    acc");
    for r in score_run(&run, &HopkinsOptions::default(), None)? {
        println!(
            "{:>5} {:.4} {:.4} {:.4} {:.4} {:.3}",
            r.epoch,
            r.uniformity,
            r.hopkins,
            r.mutual_info,
            r.transfer_score,
            r.accuracy.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
