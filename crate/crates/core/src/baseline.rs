//! Reference metrics the transfer score is compared against: Gaussian-kernel
//! MMD, proxy A-distance from a linear domain probe, mean prediction entropy
//! ("C-entropy") and Pearson correlation.

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::DenseMatrix;
use crate::metrics::{mean_entropy, MetricError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BaselineError {
    #[error("dimension mismatch: source has {source_dim} columns, target has {target_dim}")]
    DimensionMismatch { source_dim: usize, target_dim: usize },
    #[error("too few samples: need at least {min} per domain, got {source_rows} and {target_rows}")]
    TooFewSamples { min: usize, source_rows: usize, target_rows: usize },
    #[error("kernel bandwidth must be positive, got {0}")]
    InvalidBandwidth(f64),
    #[error("invalid probe config: {0}")]
    InvalidProbe(String),
    #[error("sequences differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 values, got {0}")]
    TooShort(usize),
    #[error("{0} sequence is constant; correlation undefined")]
    ConstantInput(&'static str),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bandwidth {
    /// Median pairwise distance over the pooled sample.
    MedianHeuristic,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// V-statistic; never negative.
    Biased,
    /// U-statistic; can dip slightly below zero.
    Unbiased,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmdConfig {
    pub bandwidth: Bandwidth,
    pub estimator: Estimator,
}

impl Default for MmdConfig {
    fn default() -> Self {
        Self { bandwidth: Bandwidth::MedianHeuristic, estimator: Estimator::Biased }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmdEstimate {
    /// Estimate of squared MMD.
    pub value: f64,
    /// Resolved kernel bandwidth sigma in `exp(-|x - y|^2 / (2 sigma^2))`.
    pub bandwidth: f64,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_pair(source: &DenseMatrix, target: &DenseMatrix, min: usize) -> Result<(), BaselineError> {
    if source.cols() != target.cols() {
        return Err(BaselineError::DimensionMismatch { source_dim: source.cols(), target_dim: target.cols() });
    }
    if source.rows() < min || target.rows() < min {
        return Err(BaselineError::TooFewSamples { min, source_rows: source.rows(), target_rows: target.rows() });
    }
    Ok(())
}

/// Median of all pairwise Euclidean distances in the pooled sample. Falls
/// back to 1 when more than half the pairs coincide.
pub fn median_heuristic(source: &DenseMatrix, target: &DenseMatrix) -> f64 {
    let rows: Vec<&[f64]> = source.row_iter().chain(target.row_iter()).collect();
    let mut dists = Vec::with_capacity(rows.len() * (rows.len() - 1) / 2);
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            dists.push(squared_distance(rows[i], rows[j]).sqrt());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 0 { 0.5 * (dists[mid - 1] + dists[mid]) } else { dists[mid] };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

fn resolve_bandwidth(source: &DenseMatrix, target: &DenseMatrix, bandwidth: Bandwidth) -> Result<f64, BaselineError> {
    match bandwidth {
        Bandwidth::MedianHeuristic => Ok(median_heuristic(source, target)),
        Bandwidth::Fixed(s) if s > 0.0 && s.is_finite() => Ok(s),
        Bandwidth::Fixed(s) => Err(BaselineError::InvalidBandwidth(s)),
    }
}

/// Mean kernel value over `a x b`, optionally skipping the diagonal (for a
/// block of a sample against itself).
fn kernel_mean(a: &[&[f64]], b: &[&[f64]], gamma: f64, skip_diagonal: bool) -> f64 {
    let mut sum = 0.0;
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if skip_diagonal && i == j {
                continue;
            }
            sum += (-gamma * squared_distance(x, y)).exp();
        }
    }
    let count = if skip_diagonal { a.len() * (a.len() - 1) } else { a.len() * b.len() };
    sum / count as f64
}

fn mmd_with_bandwidth(source: &[&[f64]], target: &[&[f64]], sigma: f64, estimator: Estimator) -> f64 {
    let gamma = 1.0 / (2.0 * sigma * sigma);
    let unbiased = estimator == Estimator::Unbiased;
    kernel_mean(source, source, gamma, unbiased) + kernel_mean(target, target, gamma, unbiased)
        - 2.0 * kernel_mean(source, target, gamma, false)
}

/// Gaussian-kernel estimate of squared maximum mean discrepancy.
pub fn mmd(source: &DenseMatrix, target: &DenseMatrix, config: &MmdConfig) -> Result<MmdEstimate, BaselineError> {
    check_pair(source, target, 2)?;
    let sigma = resolve_bandwidth(source, target, config.bandwidth)?;
    let s: Vec<&[f64]> = source.row_iter().collect();
    let t: Vec<&[f64]> = target.row_iter().collect();
    let value = mmd_with_bandwidth(&s, &t, sigma, config.estimator);
    Ok(MmdEstimate { value, bandwidth: sigma })
}

/// Null distribution of the MMD estimate under random relabelling of the
/// pooled sample, with the bandwidth fixed from the unpermuted data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationNull {
    pub observed: f64,
    pub null_mean: f64,
    pub null_std: f64,
    /// Fraction of permutations with an estimate at least the observed one.
    pub p_value: f64,
}

pub fn mmd_permutation_null(
    source: &DenseMatrix,
    target: &DenseMatrix,
    config: &MmdConfig,
    permutations: usize,
    seed: u64,
) -> Result<PermutationNull, BaselineError> {
    let observed = mmd(source, target, config)?;
    let pooled: Vec<&[f64]> = source.row_iter().chain(target.row_iter()).collect();
    let ns = source.rows();
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(permutations);
    for _ in 0..permutations {
        order.shuffle(&mut rng);
        let s: Vec<&[f64]> = order[..ns].iter().map(|&i| pooled[i]).collect();
        let t: Vec<&[f64]> = order[ns..].iter().map(|&i| pooled[i]).collect();
        values.push(mmd_with_bandwidth(&s, &t, observed.bandwidth, config.estimator));
    }
    let n = values.len().max(1) as f64;
    let null_mean = values.iter().sum::<f64>() / n;
    let null_std = (values.iter().map(|v| (v - null_mean).powi(2)).sum::<f64>() / n).sqrt();
    let p_value = values.iter().filter(|&&v| v >= observed.value).count() as f64 / n;
    Ok(PermutationNull { observed: observed.value, null_mean, null_std, p_value })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub train_fraction: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { train_fraction: 0.8, learning_rate: 0.1, iterations: 500, seed: 0 }
    }
}

/// Binary logistic regression on standardized inputs, trained by full-batch
/// gradient descent from zero weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticProbe {
    mean: Vec<f64>,
    scale: Vec<f64>,
    weights: Vec<f64>,
    bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticProbe {
    pub fn fit(x: &[&[f64]], y: &[bool], learning_rate: f64, iterations: usize) -> Self {
        let d = x.first().map_or(0, |r| r.len());
        let n = x.len() as f64;
        let mut mean = vec![0.0; d];
        for row in x {
            mean.iter_mut().zip(*row).for_each(|(m, v)| *m += v / n);
        }
        let mut scale = vec![0.0; d];
        for row in x {
            scale.iter_mut().zip(*row).zip(&mean).for_each(|((s, v), m)| *s += (v - m).powi(2) / n);
        }
        scale.iter_mut().for_each(|s| *s = if *s > 0.0 { s.sqrt() } else { 1.0 });

        let z: Vec<Vec<f64>> =
            x.iter().map(|row| row.iter().zip(&mean).zip(&scale).map(|((v, m), s)| (v - m) / s).collect()).collect();
        let mut weights = vec![0.0; d];
        let mut bias = 0.0;
        let mut grad = vec![0.0; d];
        for _ in 0..iterations {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_bias = 0.0;
            for (row, &label) in z.iter().zip(y) {
                let logit = bias + row.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>();
                let residual = sigmoid(logit) - if label { 1.0 } else { 0.0 };
                grad.iter_mut().zip(row).for_each(|(g, v)| *g += residual * v);
                grad_bias += residual;
            }
            weights.iter_mut().zip(&grad).for_each(|(w, g)| *w -= learning_rate * g / n);
            bias -= learning_rate * grad_bias / n;
        }
        Self { mean, scale, weights, bias }
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let logit = self.bias
            + row
                .iter()
                .zip(&self.mean)
                .zip(&self.scale)
                .zip(&self.weights)
                .map(|(((v, m), s), w)| (v - m) / s * w)
                .sum::<f64>();
        sigmoid(logit)
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        self.predict_proba(row) >= 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PadReport {
    /// `2 (1 - 2 eps)` with eps clamped to [0, 0.5].
    pub distance: f64,
    /// Unclamped held-out error of the domain probe.
    pub test_error: f64,
    pub train_size: usize,
    pub test_size: usize,
}

/// `2 (1 - 2 eps)` with `eps` clamped to [0, 0.5].
pub fn pad_from_error(error: f64) -> f64 {
    2.0 * (1.0 - 2.0 * error.clamp(0.0, 0.5))
}

/// Proxy A-distance: how well a linear probe tells source rows from target
/// rows. The larger domain is subsampled to the smaller one's size before a
/// seeded train/test split.
pub fn proxy_a_distance(
    source: &DenseMatrix,
    target: &DenseMatrix,
    config: &ProbeConfig,
) -> Result<PadReport, BaselineError> {
    check_pair(source, target, 10)?;
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(BaselineError::InvalidProbe(format!("train_fraction {} not in (0, 1)", config.train_fraction)));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(BaselineError::InvalidProbe(format!("learning_rate {} not positive", config.learning_rate)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = source.rows().min(target.rows());
    let pick = |m: &DenseMatrix, rng: &mut ChaCha8Rng| -> Vec<usize> {
        if m.rows() == n {
            (0..n).collect()
        } else {
            let mut idx = index::sample(rng, m.rows(), n).into_vec();
            idx.sort_unstable();
            idx
        }
    };
    let source_idx = pick(source, &mut rng);
    let target_idx = pick(target, &mut rng);
    let mut pooled: Vec<(&[f64], bool)> = source_idx
        .iter()
        .map(|&i| (source.row(i), false))
        .chain(target_idx.iter().map(|&i| (target.row(i), true)))
        .collect();
    pooled.shuffle(&mut rng);

    let train_size = ((pooled.len() as f64 * config.train_fraction).round() as usize).clamp(1, pooled.len() - 1);
    let (train, test) = pooled.split_at(train_size);
    let x: Vec<&[f64]> = train.iter().map(|(r, _)| *r).collect();
    let y: Vec<bool> = train.iter().map(|(_, l)| *l).collect();
    let probe = LogisticProbe::fit(&x, &y, config.learning_rate, config.iterations);
    let wrong = test.iter().filter(|(row, label)| probe.predict(row) != *label).count();
    let test_error = wrong as f64 / test.len() as f64;
    Ok(PadReport { distance: pad_from_error(test_error), test_error, train_size, test_size: test.len() })
}

/// Mean prediction entropy over rows, in nats. Lower means more confident.
pub fn c_entropy(probabilities: &DenseMatrix) -> Result<f64, BaselineError> {
    Ok(mean_entropy(probabilities)?)
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, BaselineError> {
    if x.len() != y.len() {
        return Err(BaselineError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(BaselineError::TooShort(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 {
        return Err(BaselineError::ConstantInput("x"));
    }
    if syy == 0.0 {
        return Err(BaselineError::ConstantInput("y"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
