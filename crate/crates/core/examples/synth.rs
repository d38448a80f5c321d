//! Train the toy model in memory and print the accuracy trajectory for a
//! few entropy weights.

use tscore::metrics::accuracy;
use tscore::synth::{generate_domain_pair, train_toy_model, DomainSpec, ToyTrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pair = generate_domain_pair(&DomainSpec::default())?;
    for lambda in [0.0, 0.1, 50.0] {
        let train = ToyTrainConfig { adapt_weight: lambda, ..ToyTrainConfig::default() };
        let records = train_toy_model(&pair, &train)?;
        let acc: Vec<String> = records
            .iter()
            .step_by(3)
            .map(|r| format!("{:.2}", accuracy(r.probabilities(), r.labels().unwrap())))
            .collect();
        println!("lambda {lambda:>4}: {}", acc.join(" "));
    }
    Ok(())
}
