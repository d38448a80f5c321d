//! Hopkins statistic on uniform noise versus tight clusters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tscore::metrics::hopkins_statistic;
use tscore::{DenseMatrix, HopkinsConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let uniform: Vec<f64> = (0..2000 * 2).map(|_| rng.random::<f64>()).collect();
    let uniform = DenseMatrix::new(2000, 2, uniform)?;

    let mut clustered = Vec::with_capacity(2000 * 2);
    for i in 0..2000 {
        let cx = if i % 2 == 0 { 0.0 } else { 1.0 };
        clustered.push(cx + 0.01 * (rng.random::<f64>() - 0.5));
        clustered.push(0.01 * (rng.random::<f64>() - 0.5));
    }
    let clustered = DenseMatrix::new(2000, 2, clustered)?;

    let cfg = HopkinsConfig::new(100, 20, 0);
    println!("uniform square  H = {:.4}", hopkins_statistic(&uniform, &cfg)?);
    println!("two clusters    H = {:.4}", hopkins_statistic(&clustered, &cfg)?);
    println!("default m for N = 2000: {}", HopkinsConfig::for_samples(2000).m);
    Ok(())
}
