//! Hopkins statistic of a feature cloud.
//!
//! Each repetition draws `m` rows without replacement (the sample set) and `m`
//! points uniform in the axis-aligned bounding box of all rows (the reference
//! set). With `u_i` the distance from reference point `i` to its nearest
//! sample and `w_i` the distance from sample `i` to its nearest *other*
//! sample,
//!
//! ```text
//! H = sum(u_i^d) / (sum(u_i^d) + sum(w_i^d))
//! ```
//!
//! where `d` is the feature dimension. Both sums are taken in log space so
//! that `d` in the hundreds does not overflow. Values near 0.5 mean no
//! clustering tendency; values near 1 mean well separated clusters.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::MetricError;
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HopkinsConfig {
    /// Rows sampled per repetition (`2 <= m <= N - 1`).
    pub m: usize,
    pub repetitions: usize,
    pub seed: u64,
}

impl HopkinsConfig {
    pub const DEFAULT_REPETITIONS: usize = 5;

    pub fn new(m: usize, repetitions: usize, seed: u64) -> Self {
        Self { m, repetitions, seed }
    }

    /// `m = clamp(ceil(N / 10), 10, 500)`, capped at `N - 1` for tiny inputs;
    /// 5 repetitions; seed 0.
    pub fn for_samples(n: usize) -> Self {
        let m = n.div_ceil(10).clamp(10, 500).min(n.saturating_sub(1));
        Self { m, repetitions: Self::DEFAULT_REPETITIONS, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self, n: usize) -> Result<(), MetricError> {
        if n < 3 {
            return Err(MetricError::TooFewSamples { n, min: 3 });
        }
        if self.m < 2 || self.m > n - 1 {
            return Err(MetricError::SampleSizeOutOfRange { m: self.m, n });
        }
        if self.repetitions == 0 {
            return Err(MetricError::ZeroRepetitions);
        }
        Ok(())
    }
}

/// The random sets drawn for one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct HopkinsDraw {
    /// Row indices of the sample set, distinct.
    pub sample: Vec<usize>,
    /// m x d reference points inside the bounding box.
    pub reference: DenseMatrix,
}

/// Nearest-neighbour distances for one repetition, as natural logs
/// (`-inf` for exact zeros).
#[derive(Debug, Clone, PartialEq)]
pub struct HopkinsDistances {
    /// ln u_i: reference point to nearest sample.
    pub log_u: Vec<f64>,
    /// ln w_i: sample to nearest other sample.
    pub log_w: Vec<f64>,
}

/// Per-axis (min, max) over all rows.
fn bounding_box(features: &DenseMatrix) -> Vec<(f64, f64)> {
    let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); features.cols()];
    for row in features.row_iter() {
        for (b, &v) in bounds.iter_mut().zip(row) {
            b.0 = b.0.min(v);
            b.1 = b.1.max(v);
        }
    }
    bounds
}

/// Draws the sample and reference sets for every repetition. Deterministic in
/// `config.seed`; reference points are `lo + (hi - lo) * u` with `u` uniform
/// in [0, 1), so degenerate axes yield the constant value.
pub fn hopkins_draws(features: &DenseMatrix, config: &HopkinsConfig) -> Result<Vec<HopkinsDraw>, MetricError> {
    let n = features.rows();
    config.validate(n)?;
    let bounds = bounding_box(features);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let draws = (0..config.repetitions)
        .map(|_| {
            let sample = index::sample(&mut rng, n, config.m).into_vec();
            let mut reference = Vec::with_capacity(config.m * bounds.len());
            for _ in 0..config.m {
                for &(lo, hi) in &bounds {
                    let u: f64 = rng.random();
                    reference.push(lo + (hi - lo) * u);
                }
            }
            HopkinsDraw { sample, reference: DenseMatrix::from_parts_unchecked(config.m, bounds.len(), reference) }
        })
        .collect();
    Ok(draws)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exact nearest-neighbour distances for one draw (brute force over the
/// sample set; m is at most a few hundred).
pub fn draw_distances(features: &DenseMatrix, draw: &HopkinsDraw) -> HopkinsDistances {
    let sample: Vec<&[f64]> = draw.sample.iter().map(|&i| features.row(i)).collect();
    let log_u = draw
        .reference
        .row_iter()
        .map(|p| {
            let best = sample.iter().map(|s| squared_distance(p, s)).fold(f64::INFINITY, f64::min);
            0.5 * best.ln()
        })
        .collect();
    let log_w = sample
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let best = sample
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, s)| squared_distance(p, s))
                .fold(f64::INFINITY, f64::min);
            0.5 * best.ln()
        })
        .collect();
    HopkinsDistances { log_u, log_w }
}

/// `ln(sum(exp(x_i)))`, with an all `-inf` input mapping to `-inf`.
fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl HopkinsDistances {
    /// `sum(u^d) / (sum(u^d) + sum(w^d))` evaluated in log space. Returns
    /// 0.5 when both sums are zero.
    pub fn ratio(&self, dim: usize) -> f64 {
        let d = dim as f64;
        let scaled = |v: &[f64]| {
            let it = v.iter().map(move |&l| if l == f64::NEG_INFINITY { l } else { d * l });
            log_sum_exp(it)
        };
        let lu = scaled(&self.log_u);
        let lw = scaled(&self.log_w);
        match (lu == f64::NEG_INFINITY, lw == f64::NEG_INFINITY) {
            (true, true) => 0.5,
            (true, false) => 0.0,
            (false, true) => 1.0,
            // H = 1 / (1 + exp(lw - lu))
            (false, false) => 1.0 / (1.0 + (lw - lu).exp()),
        }
    }
}

/// Mean Hopkins statistic over `config.repetitions` independent draws.
pub fn hopkins_statistic(features: &DenseMatrix, config: &HopkinsConfig) -> Result<f64, MetricError> {
    let draws = hopkins_draws(features, config)?;
    let dim = features.cols();
    let total: f64 = draws.iter().map(|draw| draw_distances(features, draw).ratio(dim)).sum();
    Ok(total / draws.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> DenseMatrix {
        DenseMatrix::new(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn default_config_scales_with_n() {
        assert_eq!(HopkinsConfig::for_samples(50).m, 10);
        assert_eq!(HopkinsConfig::for_samples(2001).m, 201);
        assert_eq!(HopkinsConfig::for_samples(100_000).m, 500);
        assert_eq!(HopkinsConfig::for_samples(6).m, 5);
        assert_eq!(HopkinsConfig::for_samples(6).repetitions, 5);
    }

    #[test]
    fn rejects_bad_sizes() {
        let f = column(&[0.0, 1.0]);
        assert!(matches!(
            hopkins_statistic(&f, &HopkinsConfig::new(1, 1, 0)),
            Err(MetricError::TooFewSamples { n: 2, .. })
        ));
        let f = column(&[0.0, 1.0, 2.0, 3.0]);
        assert!(matches!(
            hopkins_statistic(&f, &HopkinsConfig::new(4, 1, 0)),
            Err(MetricError::SampleSizeOutOfRange { m: 4, n: 4 })
        ));
        assert!(matches!(
            hopkins_statistic(&f, &HopkinsConfig::new(1, 1, 0)),
            Err(MetricError::SampleSizeOutOfRange { m: 1, .. })
        ));
        assert!(matches!(hopkins_statistic(&f, &HopkinsConfig::new(2, 0, 0)), Err(MetricError::ZeroRepetitions)));
    }

    #[test]
    fn identical_points_give_half() {
        // box and samples collapse to a single point: no evidence either way
        let f = DenseMatrix::new(10, 3, vec![1.5; 30]).unwrap();
        let h = hopkins_statistic(&f, &HopkinsConfig::new(4, 3, 7)).unwrap();
        assert_eq!(h, 0.5);
    }

    #[test]
    fn collapsed_samples_in_wide_box_give_one() {
        // every sampled row lands on the same point while the box is wide
        let mut values = vec![0.0; 20];
        values.push(100.0);
        let f = column(&values);
        for seed in 0..20 {
            let cfg = HopkinsConfig::new(3, 1, seed);
            let draw = &hopkins_draws(&f, &cfg).unwrap()[0];
            if draw.sample.iter().all(|&i| i < 20) {
                assert_eq!(hopkins_statistic(&f, &cfg).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn log_domain_survives_high_dimension() {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<f64> = (0..200 * 256).map(|_| StandardNormal.sample(&mut rng)).collect();
        let f = DenseMatrix::new(200, 256, data).unwrap();
        let h = hopkins_statistic(&f, &HopkinsConfig::new(20, 2, 1)).unwrap();
        assert!(h.is_finite() && (0.0..=1.0).contains(&h));
    }

    #[test]
    fn deterministic_per_seed() {
        let f = DenseMatrix::new(40, 2, (0..80).map(|i| ((i * 37) % 11) as f64).collect()).unwrap();
        let cfg = HopkinsConfig::new(8, 4, 42);
        assert_eq!(hopkins_statistic(&f, &cfg).unwrap(), hopkins_statistic(&f, &cfg).unwrap());
        let draws = hopkins_draws(&f, &cfg).unwrap();
        for d in &draws {
            let mut s = d.sample.clone();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), 8);
        }
    }
}
