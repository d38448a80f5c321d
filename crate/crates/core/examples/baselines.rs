//! MMD, proxy A-distance and C-entropy on shifted Gaussian samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tscore::baseline::{c_entropy, mmd, mmd_permutation_null, proxy_a_distance, Estimator, MmdConfig, ProbeConfig};
use tscore::DenseMatrix;

fn gaussian(n: usize, offset: f64, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * 2).map(|_| offset + Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
    DenseMatrix::new(n, 2, data).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source = gaussian(300, 0.0, 1);
    let unbiased = MmdConfig { estimator: Estimator::Unbiased, ..MmdConfig::default() };
    for shift in [0.0, 0.5, 2.0, 10.0] {
        let target = gaussian(300, shift, 2);
        let m = mmd(&source, &target, &unbiased)?;
        let pad = proxy_a_distance(&source, &target, &ProbeConfig::default())?;
        println!("shift {shift:>4}: MMD^2 {:.5} (sigma {:.3})  PAD {:.3}", m.value, m.bandwidth, pad.distance);
    }
    let null = mmd_permutation_null(&source, &gaussian(300, 0.0, 3), &unbiased, 200, 0)?;
    println!(
        "same distribution: observed {:.5}, null std {:.5}, p = {:.3}",
        null.observed, null.null_std, null.p_value
    );

    let probs = DenseMatrix::from_rows(&[[0.5, 0.5], [1.0, 0.0]])?;
    println!("C-entropy of [(0.5, 0.5), (1, 0)] = {:.6}", c_entropy(&probs)?);
    Ok(())
}
