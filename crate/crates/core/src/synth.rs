//! Desk-scale stand-in for a domain adaptation experiment.
//!
//! [`generate_domain_pair`] draws a labelled source domain of Gaussian
//! clusters around regular-simplex vertices and a target domain made of the
//! same clusters rotated in the first two coordinates and then translated.
//! [`train_toy_model`] fits a linear feature map followed by a linear softmax
//! classifier with full-batch gradient descent on
//!
//! ```text
//! loss = mean source cross-entropy + lambda * mean target prediction entropy
//! ```
//!
//! and emits one [`EpochRecord`] per epoch. A large `lambda` drives the target
//! predictions into confident but wrong clusters, which is the negative
//! transfer pattern the checkpoint selector has to survive.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::matrix::DenseMatrix;
use crate::tensor_io::{EpochRecord, RecordError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid domain spec: {0}")]
    InvalidSpec(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: u64, loss: f64 },
    #[error("epoch {epoch}: {source}")]
    Record {
        epoch: u64,
        #[source]
        source: RecordError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub k: usize,
    pub d_in: usize,
    /// Samples per domain.
    pub n: usize,
    /// Per-coordinate standard deviation of each cluster.
    pub cluster_spread: f64,
    /// Distance between neighbouring cluster centres.
    pub separation: f64,
    /// Translation applied to the target domain; length `d_in`.
    pub shift: Vec<f64>,
    /// Rotation of the target domain in the first two coordinates, radians.
    pub rotation_angle: f64,
    pub seed: u64,
}

impl Default for DomainSpec {
    fn default() -> Self {
        Self {
            k: 3,
            d_in: 5,
            n: 300,
            cluster_spread: 0.8,
            separation: 3.0,
            shift: vec![0.5, 0.0, 0.0, 2.0, 0.0],
            rotation_angle: 0.5,
            seed: 0,
        }
    }
}

impl DomainSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidSpec(msg));
        if self.k < 2 {
            return bad(format!("k = {} < 2", self.k));
        }
        if self.n < self.k * 10 {
            return bad(format!("n = {} < 10 * k = {}", self.n, self.k * 10));
        }
        if self.d_in < (self.k - 1).max(2) {
            return bad(format!("d_in = {} cannot hold a {}-vertex simplex and a planar rotation", self.d_in, self.k));
        }
        if !(self.cluster_spread > 0.0 && self.cluster_spread.is_finite()) {
            return bad(format!("cluster_spread = {} must be positive", self.cluster_spread));
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return bad(format!("separation = {} must be non-negative", self.separation));
        }
        if self.shift.len() != self.d_in {
            return bad(format!("shift has length {}, expected d_in = {}", self.shift.len(), self.d_in));
        }
        if !self.shift.iter().chain([&self.rotation_angle]).all(|v| v.is_finite()) {
            return bad("shift and rotation must be finite".into());
        }
        Ok(())
    }

    /// Cluster centres: vertices of a regular simplex in the first `k - 1`
    /// coordinates, neighbouring centres `separation` apart.
    pub fn centers(&self) -> Vec<Vec<f64>> {
        let k = self.k;
        // Helmert basis of the centred subspace of R^k; vertex i has
        // coordinate j = h_j[i]. Unit vertices e_i are sqrt(2) apart.
        let scale = self.separation / 2f64.sqrt();
        (0..k)
            .map(|i| {
                let mut c = vec![0.0; self.d_in];
                for j in 1..k {
                    let norm = ((j * (j + 1)) as f64).sqrt();
                    let h = if i < j {
                        1.0 / norm
                    } else if i == j {
                        -(j as f64) / norm
                    } else {
                        0.0
                    };
                    c[j - 1] = scale * h;
                }
                c
            })
            .collect()
    }
}

/// Features and integer labels of one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledDomain {
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainPair {
    pub source: LabelledDomain,
    pub target: LabelledDomain,
}

fn sample_domain(spec: &DomainSpec, centers: &[Vec<f64>], rng: &mut ChaCha8Rng) -> LabelledDomain {
    let labels: Vec<usize> = (0..spec.n).map(|i| i % spec.k).collect();
    let mut data = Vec::with_capacity(spec.n * spec.d_in);
    for &y in &labels {
        for &c in &centers[y] {
            let z: f64 = StandardNormal.sample(rng);
            data.push(c + spec.cluster_spread * z);
        }
    }
    LabelledDomain { features: DenseMatrix::from_parts_unchecked(spec.n, spec.d_in, data), labels }
}

/// Draws source and target domains with balanced labels (`label = row % k`).
pub fn generate_domain_pair(spec: &DomainSpec) -> Result<DomainPair, SynthError> {
    spec.validate()?;
    let centers = spec.centers();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let source = sample_domain(spec, &centers, &mut rng);
    let raw = sample_domain(spec, &centers, &mut rng);
    let (sin, cos) = spec.rotation_angle.sin_cos();
    let mut data = raw.features.into_data();
    for row in data.chunks_exact_mut(spec.d_in) {
        let (x, y) = (row[0], row[1]);
        row[0] = cos * x - sin * y;
        row[1] = sin * x + cos * y;
        row.iter_mut().zip(&spec.shift).for_each(|(v, s)| *v += s);
    }
    let target =
        LabelledDomain { features: DenseMatrix::from_parts_unchecked(spec.n, spec.d_in, data), labels: raw.labels };
    Ok(DomainPair { source, target })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyTrainConfig {
    pub d_feat: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Weight of the target entropy term.
    pub adapt_weight: f64,
    /// Gradient steps between emitted epochs.
    pub steps_per_epoch: usize,
    /// Epochs over which the entropy weight ramps quadratically up to
    /// `adapt_weight`; 0 applies the full weight from the first step.
    pub warmup_epochs: usize,
    pub seed: u64,
}

impl Default for ToyTrainConfig {
    fn default() -> Self {
        Self {
            d_feat: 4,
            epochs: 30,
            learning_rate: 0.1,
            adapt_weight: 0.1,
            steps_per_epoch: 5,
            warmup_epochs: 30,
            seed: 0,
        }
    }
}

impl ToyTrainConfig {
    /// Entropy weight in effect during `epoch`.
    pub fn adapt_weight_at(&self, epoch: u64) -> f64 {
        if self.warmup_epochs == 0 {
            self.adapt_weight
        } else {
            self.adapt_weight * ((epoch + 1) as f64 / self.warmup_epochs as f64).min(1.0).powi(2)
        }
    }

    fn validate(&self, k: usize) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidConfig(msg));
        if self.d_feat + 1 < k {
            return bad(format!("d_feat = {} must be at least k - 1 = {}", self.d_feat, k - 1));
        }
        if self.d_feat == 0 {
            return bad("d_feat must be positive".into());
        }
        if self.epochs == 0 || self.steps_per_epoch == 0 {
            return bad("epochs and steps_per_epoch must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate = {} must be positive", self.learning_rate));
        }
        if !(self.adapt_weight >= 0.0 && self.adapt_weight.is_finite()) {
            return bad(format!("adapt_weight = {} must be non-negative", self.adapt_weight));
        }
        Ok(())
    }
}

/// Inputs of the training objective.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    pub source: &'a DenseMatrix,
    pub source_labels: &'a [usize],
    pub target: &'a DenseMatrix,
    pub adapt_weight: f64,
}

/// `x -> softmax(W^T A x + c)` with `A: d_feat x d_in`, `W: d_feat x k`.
///
/// Parameters live in one flat vector laid out as `A` (row-major), then `W`
/// (row-major), then `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    d_in: usize,
    d_feat: usize,
    k: usize,
    params: Vec<f64>,
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

impl ToyModel {
    /// Gaussian init: `A ~ N(0, 1/d_in)`, `W ~ N(0, 0.01/d_feat)`, `c = 0`.
    pub fn init(d_in: usize, d_feat: usize, k: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(Self::param_count(d_in, d_feat, k));
        let sa = (1.0 / d_in as f64).sqrt();
        let sw = (0.01 / d_feat as f64).sqrt();
        params.extend((0..d_feat * d_in).map(|_| sa * Distribution::<f64>::sample(&StandardNormal, &mut rng)));
        params.extend((0..d_feat * k).map(|_| sw * Distribution::<f64>::sample(&StandardNormal, &mut rng)));
        params.extend(std::iter::repeat_n(0.0, k));
        Self { d_in, d_feat, k, params }
    }

    pub fn param_count(d_in: usize, d_feat: usize, k: usize) -> usize {
        d_feat * d_in + d_feat * k + k
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn with_params(&self, params: Vec<f64>) -> Self {
        assert_eq!(params.len(), self.params.len());
        Self { params, ..self.clone() }
    }

    fn split(&self) -> (&[f64], &[f64], &[f64]) {
        let (a, rest) = self.params.split_at(self.d_feat * self.d_in);
        let (w, c) = rest.split_at(self.d_feat * self.k);
        (a, w, c)
    }

    /// Classifier weights as a `d_feat x k` matrix.
    pub fn classifier_weights(&self) -> DenseMatrix {
        DenseMatrix::from_parts_unchecked(self.d_feat, self.k, self.split().1.to_vec())
    }

    fn embed(&self, x: &[f64], out: &mut [f64]) {
        let (a, _, _) = self.split();
        for (f, row) in out.iter_mut().zip(a.chunks_exact(self.d_in)) {
            *f = row.iter().zip(x).map(|(p, q)| p * q).sum();
        }
    }

    fn classify(&self, f: &[f64], out: &mut [f64]) {
        let (_, w, c) = self.split();
        out.copy_from_slice(c);
        for (fi, wrow) in f.iter().zip(w.chunks_exact(self.k)) {
            out.iter_mut().zip(wrow).for_each(|(o, wij)| *o += fi * wij);
        }
        softmax_in_place(out);
    }

    /// `g(x)` for every row.
    pub fn features(&self, x: &DenseMatrix) -> DenseMatrix {
        let mut data = vec![0.0; x.rows() * self.d_feat];
        for (row, out) in x.row_iter().zip(data.chunks_exact_mut(self.d_feat)) {
            self.embed(row, out);
        }
        DenseMatrix::from_parts_unchecked(x.rows(), self.d_feat, data)
    }

    pub fn probabilities(&self, x: &DenseMatrix) -> DenseMatrix {
        let mut f = vec![0.0; self.d_feat];
        let mut data = vec![0.0; x.rows() * self.k];
        for (row, out) in x.row_iter().zip(data.chunks_exact_mut(self.k)) {
            self.embed(row, &mut f);
            self.classify(&f, out);
        }
        DenseMatrix::from_parts_unchecked(x.rows(), self.k, data)
    }

    /// Accumulates the gradient of `scale * loss(x)` into `grad`, where
    /// `dz` maps softmax outputs to `d loss / d logits`.
    fn backprop(&self, x: &[f64], dz: &[f64], grad: &mut [f64]) {
        let (_, w, _) = self.split();
        let mut f = vec![0.0; self.d_feat];
        self.embed(x, &mut f);
        let (ga, rest) = grad.split_at_mut(self.d_feat * self.d_in);
        let (gw, gc) = rest.split_at_mut(self.d_feat * self.k);
        gc.iter_mut().zip(dz).for_each(|(g, d)| *g += d);
        for i in 0..self.d_feat {
            let wrow = &w[i * self.k..(i + 1) * self.k];
            let gwrow = &mut gw[i * self.k..(i + 1) * self.k];
            gwrow.iter_mut().zip(dz).for_each(|(g, d)| *g += f[i] * d);
            // d loss / d f_i
            let df: f64 = wrow.iter().zip(dz).map(|(a, b)| a * b).sum();
            ga[i * self.d_in..(i + 1) * self.d_in].iter_mut().zip(x).for_each(|(g, xv)| *g += df * xv);
        }
    }

    /// Total objective value.
    pub fn loss(&self, obj: &Objective<'_>) -> f64 {
        let p = self.probabilities(obj.source);
        let ce = p.row_iter().zip(obj.source_labels).map(|(row, &y)| -row[y].max(f64::MIN_POSITIVE).ln()).sum::<f64>()
            / obj.source.rows() as f64;
        let q = self.probabilities(obj.target);
        let ent =
            q.row_iter().map(|row| -row.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>()).sum::<f64>()
                / obj.target.rows() as f64;
        ce + obj.adapt_weight * ent
    }

    /// Objective value and its analytic gradient with respect to the flat
    /// parameter vector.
    pub fn loss_and_gradient(&self, obj: &Objective<'_>) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut f = vec![0.0; self.d_feat];
        let mut p = vec![0.0; self.k];
        let mut dz = vec![0.0; self.k];

        let ns = obj.source.rows() as f64;
        let mut ce = 0.0;
        for (x, &y) in obj.source.row_iter().zip(obj.source_labels) {
            self.embed(x, &mut f);
            self.classify(&f, &mut p);
            ce -= p[y].max(f64::MIN_POSITIVE).ln();
            for (j, d) in dz.iter_mut().enumerate() {
                *d = (p[j] - if j == y { 1.0 } else { 0.0 }) / ns;
            }
            self.backprop(x, &dz, &mut grad);
        }

        let nt = obj.target.rows() as f64;
        let mut ent = 0.0;
        if obj.adapt_weight > 0.0 {
            for x in obj.target.row_iter() {
                self.embed(x, &mut f);
                self.classify(&f, &mut p);
                let logp: Vec<f64> = p.iter().map(|&v| if v > 0.0 { v.ln() } else { 0.0 }).collect();
                let h = -p.iter().zip(&logp).map(|(a, b)| a * b).sum::<f64>();
                ent += h;
                // dH/dz_j = -p_j (ln p_j + H)
                for (j, d) in dz.iter_mut().enumerate() {
                    *d = -obj.adapt_weight * p[j] * (logp[j] + h) / nt;
                }
                self.backprop(x, &dz, &mut grad);
            }
        }
        (ce / ns + obj.adapt_weight * ent / nt, grad)
    }
}

/// Trains on `pair` and returns one record per epoch: classifier weights,
/// target features, target probabilities and target labels.
pub fn train_toy_model(pair: &DomainPair, config: &ToyTrainConfig) -> Result<Vec<EpochRecord>, SynthError> {
    let k = pair.source.labels.iter().chain(&pair.target.labels).max().map_or(0, |m| m + 1);
    if k < 2 {
        return Err(SynthError::InvalidSpec("need at least 2 classes".into()));
    }
    config.validate(k)?;
    let d_in = pair.source.features.cols();
    if pair.target.features.cols() != d_in {
        return Err(SynthError::InvalidSpec(format!(
            "source has {d_in} columns, target has {}",
            pair.target.features.cols()
        )));
    }
    let mut model = ToyModel::init(d_in, config.d_feat, k, config.seed);
    let mut records = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs as u64 {
        let obj = Objective {
            source: &pair.source.features,
            source_labels: &pair.source.labels,
            target: &pair.target.features,
            adapt_weight: config.adapt_weight_at(epoch),
        };
        for _ in 0..config.steps_per_epoch {
            let (loss, grad) = model.loss_and_gradient(&obj);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(SynthError::Diverged { epoch, loss });
            }
            model.params.iter_mut().zip(&grad).for_each(|(p, g)| *p -= config.learning_rate * g);
        }
        if model.params.iter().any(|p| !p.is_finite()) {
            return Err(SynthError::Diverged { epoch, loss: f64::NAN });
        }
        let record = EpochRecord::new(
            epoch,
            model.classifier_weights(),
            model.features(&pair.target.features),
            model.probabilities(&pair.target.features),
            Some(pair.target.labels.clone()),
        )
        .map_err(|source| SynthError::Record { epoch, source })?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn centers_form_a_regular_simplex() {
        for k in 2..6 {
            let spec =
                DomainSpec { k, d_in: k.max(2), shift: vec![0.0; k.max(2)], separation: 2.5, ..DomainSpec::default() };
            let c = spec.centers();
            let centroid: Vec<f64> = (0..spec.d_in).map(|j| c.iter().map(|v| v[j]).sum::<f64>() / k as f64).collect();
            assert!(centroid.iter().all(|v| v.abs() < 1e-12));
            for i in 0..k {
                for j in i + 1..k {
                    let d: f64 = c[i].iter().zip(&c[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    assert_abs_diff_eq!(d, 2.5, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn balanced_labels() {
        let pair = generate_domain_pair(&DomainSpec::default()).unwrap();
        for dom in [&pair.source, &pair.target] {
            for class in 0..3 {
                assert_eq!(dom.labels.iter().filter(|&&l| l == class).count(), 100);
            }
            assert_eq!(dom.features.shape(), (300, 5));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = DomainSpec::default();
        assert_eq!(generate_domain_pair(&spec).unwrap(), generate_domain_pair(&spec).unwrap());
        let other = DomainSpec { seed: 1, ..spec.clone() };
        assert_ne!(generate_domain_pair(&spec).unwrap(), generate_domain_pair(&other).unwrap());
    }

    #[test]
    fn invalid_specs() {
        let base = DomainSpec::default();
        for spec in [
            DomainSpec { k: 1, ..base.clone() },
            DomainSpec { n: 29, ..base.clone() },
            DomainSpec { cluster_spread: 0.0, ..base.clone() },
            DomainSpec { shift: vec![0.0; 4], ..base.clone() },
            DomainSpec { k: 7, ..base.clone() },
        ] {
            assert!(matches!(generate_domain_pair(&spec), Err(SynthError::InvalidSpec(_))), "{spec:?}");
        }
    }

    #[test]
    fn one_epoch_shapes() {
        let pair = generate_domain_pair(&DomainSpec::default()).unwrap();
        let cfg = ToyTrainConfig { epochs: 1, ..ToyTrainConfig::default() };
        let records = train_toy_model(&pair, &cfg).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert_eq!(r.weights().shape(), (4, 3));
        assert_eq!(r.features().shape(), (300, 4));
        assert_eq!(r.probabilities().shape(), (300, 3));
        assert_eq!(r.labels().unwrap().len(), 300);
    }

    #[test]
    fn probabilities_sum_to_one_before_export() {
        let pair = generate_domain_pair(&DomainSpec::default()).unwrap();
        let model = ToyModel::init(5, 4, 3, 9);
        for row in model.probabilities(&pair.target.features).row_iter() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_too_narrow_features() {
        let pair = generate_domain_pair(&DomainSpec::default()).unwrap();
        let cfg = ToyTrainConfig { d_feat: 1, ..ToyTrainConfig::default() };
        assert!(matches!(train_toy_model(&pair, &cfg), Err(SynthError::InvalidConfig(_))));
    }

    #[test]
    fn divergence_names_the_epoch() {
        let pair = generate_domain_pair(&DomainSpec::default()).unwrap();
        let cfg = ToyTrainConfig { learning_rate: 1e200, epochs: 5, ..ToyTrainConfig::default() };
        match train_toy_model(&pair, &cfg) {
            Err(SynthError::Diverged { epoch, .. }) => assert!(epoch < 5),
            other => panic!("expected divergence, got {:?}", other.map(|r| r.len())),
        }
    }

    fn target_accuracy(records: &[EpochRecord]) -> Vec<f64> {
        records.iter().map(|r| crate::metrics::accuracy(r.probabilities(), r.labels().unwrap())).collect()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let spec = DomainSpec { n: 30, ..DomainSpec::default() };
        let pair = generate_domain_pair(&spec).unwrap();
        let source = pair.source.features.select_rows(&[0, 1, 2, 3, 4]);
        let target = pair.target.features.select_rows(&[5, 6, 7, 8, 9]);
        let labels: Vec<usize> = pair.source.labels[..5].to_vec();
        let model = ToyModel::init(5, 4, 3, 11);
        // move off the near-uniform init so the entropy term matters
        let model = model.with_params(model.params().iter().map(|p| 3.0 * p).collect());
        for lambda in [0.0, 0.1, 50.0] {
            let obj = Objective { source: &source, source_labels: &labels, target: &target, adapt_weight: lambda };
            let (_, grad) = model.loss_and_gradient(&obj);
            let h = 1e-5;
            for i in 0..model.params().len() {
                let mut plus = model.params().to_vec();
                let mut minus = plus.clone();
                plus[i] += h;
                minus[i] -= h;
                let fd = (model.with_params(plus).loss(&obj) - model.with_params(minus).loss(&obj)) / (2.0 * h);
                let rel = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1e-8);
                assert!(rel <= 1e-5, "lambda {lambda} param {i}: analytic {} fd {fd}", grad[i]);
            }
        }
    }

    #[test]
    fn plain_training_improves_early() {
        let pair = generate_domain_pair(&DomainSpec::default()).unwrap();
        let cfg = ToyTrainConfig { adapt_weight: 0.0, ..ToyTrainConfig::default() };
        let acc = target_accuracy(&train_toy_model(&pair, &cfg).unwrap());
        assert!(acc[..5].windows(2).all(|w| w[1] >= w[0]), "{acc:?}");
    }

    #[test]
    fn heavy_entropy_weight_degrades_late() {
        let pair = generate_domain_pair(&DomainSpec::default()).unwrap();
        let cfg = ToyTrainConfig { adapt_weight: 50.0, ..ToyTrainConfig::default() };
        let acc = target_accuracy(&train_toy_model(&pair, &cfg).unwrap());
        let max = acc.iter().copied().fold(0.0, f64::max);
        assert!(max - acc.last().unwrap() >= 0.05, "{acc:?}");
    }

    #[test]
    fn training_is_deterministic() {
        let pair = generate_domain_pair(&DomainSpec::default()).unwrap();
        let cfg = ToyTrainConfig { epochs: 3, ..ToyTrainConfig::default() };
        assert_eq!(train_toy_model(&pair, &cfg).unwrap(), train_toy_model(&pair, &cfg).unwrap());
    }

    #[test]
    fn unshifted_domains_are_indistinguishable_by_mmd() {
        use crate::baseline::{mmd_permutation_null, Estimator, MmdConfig};
        let spec = DomainSpec { shift: vec![0.0; 5], rotation_angle: 0.0, n: 120, ..DomainSpec::default() };
        let pair = generate_domain_pair(&spec).unwrap();
        let cfg = MmdConfig { estimator: Estimator::Unbiased, ..MmdConfig::default() };
        let null = mmd_permutation_null(&pair.source.features, &pair.target.features, &cfg, 100, 0).unwrap();
        assert!(null.observed.abs() <= 3.0 * null.null_std, "{null:?}");
    }

    #[test]
    fn far_shift_is_separable_by_probe() {
        use crate::baseline::{proxy_a_distance, ProbeConfig};
        let mut shift = vec![0.0; 5];
        shift[0] = 10.0;
        let pair = generate_domain_pair(&DomainSpec { shift, ..DomainSpec::default() }).unwrap();
        let pad = proxy_a_distance(&pair.source.features, &pair.target.features, &ProbeConfig::default()).unwrap();
        assert!(pad.distance > 1.5, "{pad:?}");
    }
}
