//! Saturation-based checkpoint selection, on hand-made series and on a run
//! trained with an excessive entropy weight.

use tscore::report::{select_epoch, synth_run, HopkinsOptions};
use tscore::synth::{DomainSpec, ToyTrainConfig};
use tscore::{select_checkpoint, ScoreSeries, SelectionConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SelectionConfig::default();
    for scores in [vec![1.0, 1.5, 1.80, 1.81, 1.79], vec![1.0, 2.0, 4.0, 8.0, 16.0]] {
        let r = select_checkpoint(&ScoreSeries::from_scores(scores.clone())?, &cfg)?;
        println!("{scores:?} -> position {} (saturated: {})", r.selected_position, r.saturated);
    }

    let dir = std::env::temp_dir().join("tscore-select");
    let train = ToyTrainConfig { adapt_weight: 50.0, ..ToyTrainConfig::default() };
    synth_run(&DomainSpec::default(), &train, &dir, None)?;
    let sel = select_epoch(&tscore::load_run(&dir)?, &HopkinsOptions::default(), &cfg)?;
    println!(
        "lambda = 50: selected epoch {} (acc {:.3}), last epoch acc {:.3}",
        sel.selected_epoch,
        sel.selected_accuracy.unwrap_or(f64::NAN),
        sel.last_accuracy.unwrap_or(f64::NAN)
    );
    Ok(())
}
