//! Run-level reports behind the `tscore` subcommands: per-epoch scoring,
//! ranking runs, epoch selection, baselines, score/accuracy correlation and
//! synthetic run export.
//!
//! Every function is deterministic for fixed inputs and seeds. Epochs and
//! runs are evaluated in parallel, but results always come back in manifest
//! (or argument) order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{self, BaselineError, MmdConfig, ProbeConfig};
use crate::matrix::DenseMatrix;
use crate::metrics::{self, HopkinsConfig, MetricError, MetricReport};
use crate::select::{self, ScoreSeries, SelectError, SelectionConfig};
use crate::synth::{self, DomainSpec, SynthError, ToyTrainConfig};
use crate::tensor_io::{self, Dtype, LoadError, RecordError, Run, TensorError};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("epoch {epoch}: {source}")]
    Metric {
        epoch: u64,
        #[source]
        source: MetricError,
    },
    #[error("run {run_id}: {source}")]
    Select {
        run_id: String,
        #[source]
        source: SelectError,
    },
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("cannot write csv: {0}")]
    Csv(#[from] csv::Error),
}

impl ReportError {
    /// 2 for anything wrong with the inputs or flags, 1 for failures while
    /// computing on valid inputs.
    pub fn exit_code(&self) -> i32 {
        match self {
            ReportError::Load(_) | ReportError::Tensor(_) | ReportError::Invalid(_) => 2,
            ReportError::Metric { source, .. } => match source {
                MetricError::SampleSizeOutOfRange { .. } | MetricError::ZeroRepetitions => 2,
                _ => 1,
            },
            ReportError::Select { source, .. } => match source {
                SelectError::WindowTooSmall(_)
                | SelectError::NonPositiveThreshold(_)
                | SelectError::SeriesTooShort { .. } => 2,
                _ => 1,
            },
            ReportError::Baseline(e) => match e {
                BaselineError::DimensionMismatch { .. }
                | BaselineError::TooFewSamples { .. }
                | BaselineError::InvalidBandwidth(_)
                | BaselineError::InvalidProbe(_)
                | BaselineError::LengthMismatch(..)
                | BaselineError::TooShort(_) => 2,
                BaselineError::Metric(MetricError::MalformedProbabilities { .. }) => 2,
                _ => 1,
            },
            ReportError::Synth(e) => match e {
                SynthError::InvalidSpec(_) | SynthError::InvalidConfig(_) => 2,
                _ => 1,
            },
            ReportError::Csv(_) => 1,
        }
    }
}

/// Hopkins settings where `m` may be left to the per-epoch default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopkinsOptions {
    pub m: Option<usize>,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for HopkinsOptions {
    fn default() -> Self {
        Self { m: None, repetitions: HopkinsConfig::DEFAULT_REPETITIONS, seed: 0 }
    }
}

impl HopkinsOptions {
    pub fn resolve(&self, n: usize) -> HopkinsConfig {
        let base = HopkinsConfig::for_samples(n);
        HopkinsConfig::new(self.m.unwrap_or(base.m), self.repetitions, self.seed)
    }
}

fn score_position(run: &Run, pos: usize, hopkins: &HopkinsOptions) -> Result<MetricReport, ReportError> {
    let record = run.load_position(pos)?;
    let cfg = hopkins.resolve(record.num_samples());
    metrics::transfer_score(&record, &cfg).map_err(|source| ReportError::Metric { epoch: record.epoch(), source })
}

fn score_positions(run: &Run, positions: &[usize], hopkins: &HopkinsOptions) -> Result<Vec<MetricReport>, ReportError> {
    positions.par_iter().map(|&pos| score_position(run, pos, hopkins)).collect()
}

/// One report per epoch in manifest order, or only `epoch` when given.
pub fn score_run(run: &Run, hopkins: &HopkinsOptions, epoch: Option<u64>) -> Result<Vec<MetricReport>, ReportError> {
    let positions: Vec<usize> = match epoch {
        Some(e) => vec![run.epoch_indices().iter().position(|&x| x == e).ok_or(LoadError::UnknownEpoch(e))?],
        None => (0..run.len()).collect(),
    };
    score_positions(run, &positions, hopkins)
}

fn series_of(reports: &[MetricReport]) -> Result<ScoreSeries, SelectError> {
    ScoreSeries::new(reports.iter().map(|r| r.epoch).collect(), reports.iter().map(|r| r.transfer_score).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochSelection {
    pub run_id: String,
    pub tau: usize,
    pub zeta: f64,
    pub selected_epoch: u64,
    pub saturated: bool,
    pub window_start_epoch: u64,
    pub epochs: Vec<u64>,
    pub scores: Vec<f64>,
    pub saturation_trace: Vec<Option<f64>>,
    pub selected_accuracy: Option<f64>,
    pub last_accuracy: Option<f64>,
}

impl EpochSelection {
    fn build(run_id: &str, config: &SelectionConfig, reports: &[MetricReport]) -> Result<Self, ReportError> {
        let wrap = |source| ReportError::Select { run_id: run_id.to_string(), source };
        let series = series_of(reports).map_err(wrap)?;
        let result = select::select_checkpoint(&series, config).map_err(wrap)?;
        Ok(Self {
            run_id: run_id.to_string(),
            tau: config.tau,
            zeta: config.zeta,
            selected_epoch: result.selected_epoch,
            saturated: result.saturated,
            window_start_epoch: series.epochs()[result.window_start],
            epochs: series.epochs().to_vec(),
            scores: series.scores().to_vec(),
            saturation_trace: result.saturation_trace,
            selected_accuracy: reports[result.selected_position].accuracy,
            last_accuracy: reports.last().and_then(|r| r.accuracy),
        })
    }
}

pub fn select_epoch(
    run: &Run,
    hopkins: &HopkinsOptions,
    config: &SelectionConfig,
) -> Result<EpochSelection, ReportError> {
    if run.len() < config.tau {
        return Err(ReportError::Select {
            run_id: run.run_id().to_string(),
            source: SelectError::SeriesTooShort { len: run.len(), tau: config.tau },
        });
    }
    let reports = score_run(run, hopkins, None)?;
    EpochSelection::build(run.run_id(), config, &reports)
}

/// Which epoch of each run to rank on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankEpoch {
    Last,
    /// The epoch chosen by [`select::select_checkpoint`].
    Selected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub run_id: String,
    pub method: String,
    pub hyperparameters: BTreeMap<String, String>,
    pub epoch: u64,
    pub u: f64,
    pub h: f64,
    pub m: f64,
    pub t: f64,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub epoch_mode: RankEpoch,
    /// Sorted by `t` descending, ties by `run_id`.
    pub entries: Vec<RankEntry>,
}

impl RankReport {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), ReportError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "run_id", "method", "hyperparameters", "epoch", "u", "h", "m", "t", "accuracy"])?;
        for (i, e) in self.entries.iter().enumerate() {
            let hp = e.hyperparameters.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
            w.write_record([
                (i + 1).to_string(),
                e.run_id.clone(),
                e.method.clone(),
                hp,
                e.epoch.to_string(),
                e.u.to_string(),
                e.h.to_string(),
                e.m.to_string(),
                e.t.to_string(),
                e.accuracy.map(|a| a.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String, ReportError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

fn rank_one(
    run: &Run,
    mode: RankEpoch,
    hopkins: &HopkinsOptions,
    selection: &SelectionConfig,
) -> Result<MetricReport, ReportError> {
    match mode {
        RankEpoch::Last => Ok(score_position(run, run.len() - 1, hopkins)?),
        RankEpoch::Selected => {
            let reports = score_run(run, hopkins, None)?;
            let chosen = EpochSelection::build(run.run_id(), selection, &reports)?.selected_epoch;
            Ok(reports.into_iter().find(|r| r.epoch == chosen).expect("selected epoch is scored"))
        }
    }
}

/// Scores every run at its last (or selected) epoch and sorts by `T`.
pub fn rank_runs(
    runs: &[Run],
    mode: RankEpoch,
    hopkins: &HopkinsOptions,
    selection: &SelectionConfig,
) -> Result<RankReport, ReportError> {
    if runs.len() < 2 {
        return Err(ReportError::Invalid(format!("need >= 2 runs, got {}", runs.len())));
    }
    let reports: Vec<MetricReport> =
        runs.par_iter().map(|run| rank_one(run, mode, hopkins, selection)).collect::<Result<_, _>>()?;
    if let Some(i) = reports.iter().position(|r| r.k != reports[0].k) {
        return Err(ReportError::Invalid(format!(
            "inconsistent class count: run {} has K = {}, run {} has K = {}",
            runs[0].run_id(),
            reports[0].k,
            runs[i].run_id(),
            reports[i].k
        )));
    }
    let mut entries: Vec<RankEntry> = runs
        .iter()
        .zip(reports)
        .map(|(run, r)| RankEntry {
            run_id: run.run_id().to_string(),
            method: run.manifest().method.clone(),
            hyperparameters: run.manifest().hyperparameters.clone(),
            epoch: r.epoch,
            u: r.uniformity,
            h: r.hopkins,
            m: r.mutual_info,
            t: r.transfer_score,
            accuracy: r.accuracy,
        })
        .collect();
    entries.sort_by(|a, b| b.t.total_cmp(&a.t).then_with(|| a.run_id.cmp(&b.run_id)));
    Ok(RankReport { epoch_mode: mode, entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPair {
    pub epoch: u64,
    pub t: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub run_id: String,
    pub pairs: Vec<CorrelationPair>,
    pub pearson_r: f64,
}

/// Pearson correlation between per-epoch `T` and target accuracy.
pub fn correlate(run: &Run, hopkins: &HopkinsOptions) -> Result<CorrelationReport, ReportError> {
    if run.len() < 2 {
        return Err(ReportError::Invalid(format!("need >= 2 epochs to correlate, run has {}", run.len())));
    }
    if let Some(e) = run.manifest().epochs.iter().find(|e| e.labels.is_none()) {
        return Err(ReportError::Invalid(format!("labels required: epoch {} has none", e.epoch)));
    }
    let reports = score_run(run, hopkins, None)?;
    let pairs: Vec<CorrelationPair> = reports
        .iter()
        .map(|r| CorrelationPair { epoch: r.epoch, t: r.transfer_score, accuracy: r.accuracy.expect("labels present") })
        .collect();
    let t: Vec<f64> = pairs.iter().map(|p| p.t).collect();
    let acc: Vec<f64> = pairs.iter().map(|p| p.accuracy).collect();
    let pearson_r = baseline::pearson(&t, &acc)?;
    Ok(CorrelationReport { run_id: run.run_id().to_string(), pairs, pearson_r })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMetric {
    Mmd,
    Pad,
    Centropy,
}

/// A baseline value together with the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "lowercase")]
pub enum BaselineReport {
    Mmd { value: f64, bandwidth: f64, config: MmdConfig },
    Pad { value: f64, test_error: f64, train_size: usize, test_size: usize, config: ProbeConfig },
    Centropy { value: f64, rows: usize, classes: usize },
}

impl BaselineReport {
    pub fn value(&self) -> f64 {
        match self {
            BaselineReport::Mmd { value, .. }
            | BaselineReport::Pad { value, .. }
            | BaselineReport::Centropy { value, .. } => *value,
        }
    }
}

/// Inputs for [`compute_baseline`]; which ones are required depends on the
/// metric.
#[derive(Debug, Clone, Copy, Default)]
pub struct BaselineInputs<'a> {
    pub source: Option<&'a DenseMatrix>,
    pub target: Option<&'a DenseMatrix>,
    pub probabilities: Option<&'a DenseMatrix>,
}

pub fn compute_baseline(
    metric: BaselineMetric,
    inputs: BaselineInputs<'_>,
    mmd: &MmdConfig,
    probe: &ProbeConfig,
) -> Result<BaselineReport, ReportError> {
    let pair = || match (inputs.source, inputs.target) {
        (Some(s), Some(t)) => Ok((s, t)),
        _ => Err(ReportError::Invalid(format!("{metric:?} needs both source and target features").to_lowercase())),
    };
    match metric {
        BaselineMetric::Mmd => {
            let (s, t) = pair()?;
            let est = baseline::mmd(s, t, mmd)?;
            Ok(BaselineReport::Mmd { value: est.value, bandwidth: est.bandwidth, config: *mmd })
        }
        BaselineMetric::Pad => {
            let (s, t) = pair()?;
            let r = baseline::proxy_a_distance(s, t, probe)?;
            Ok(BaselineReport::Pad {
                value: r.distance,
                test_error: r.test_error,
                train_size: r.train_size,
                test_size: r.test_size,
                config: *probe,
            })
        }
        BaselineMetric::Centropy => {
            let p = inputs
                .probabilities
                .ok_or_else(|| ReportError::Invalid("centropy needs a probabilities file".into()))?;
            let p =
                tensor_io::normalize_probabilities(p).map_err(|e: RecordError| ReportError::Invalid(e.to_string()))?;
            Ok(BaselineReport::Centropy { value: baseline::c_entropy(&p)?, rows: p.rows(), classes: p.cols() })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthReport {
    pub run_id: String,
    pub manifest: PathBuf,
    pub epochs: usize,
}

/// Hyperparameters recorded in a synthetic run's manifest.
pub fn synth_hyperparameters(spec: &DomainSpec, train: &ToyTrainConfig) -> BTreeMap<String, String> {
    let shift = spec.shift.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
    [
        ("k", spec.k.to_string()),
        ("d_in", spec.d_in.to_string()),
        ("n", spec.n.to_string()),
        ("cluster_spread", spec.cluster_spread.to_string()),
        ("separation", spec.separation.to_string()),
        ("shift", shift),
        ("rotation_angle", spec.rotation_angle.to_string()),
        ("data_seed", spec.seed.to_string()),
        ("d_feat", train.d_feat.to_string()),
        ("epochs", train.epochs.to_string()),
        ("learning_rate", train.learning_rate.to_string()),
        ("lambda", train.adapt_weight.to_string()),
        ("steps_per_epoch", train.steps_per_epoch.to_string()),
        ("warmup_epochs", train.warmup_epochs.to_string()),
        ("train_seed", train.seed.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

pub fn default_synth_run_id(train: &ToyTrainConfig) -> String {
    format!("synth-lambda{}-seed{}", train.adapt_weight, train.seed)
}

/// Generates domains, trains the toy model and writes the run as float32
/// tensors under `out_dir`.
pub fn synth_run(
    spec: &DomainSpec,
    train: &ToyTrainConfig,
    out_dir: &Path,
    run_id: Option<&str>,
) -> Result<SynthReport, ReportError> {
    let pair = synth::generate_domain_pair(spec)?;
    let records = synth::train_toy_model(&pair, train)?;
    let run_id = run_id.map_or_else(|| default_synth_run_id(train), str::to_string);
    let manifest = tensor_io::write_run(
        out_dir,
        &run_id,
        "entropy-min",
        synth_hyperparameters(spec, train),
        &records,
        Dtype::F32,
    )?;
    Ok(SynthReport { run_id, manifest, epochs: records.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(dir: &Path, lambda: f64, epochs: usize) -> Run {
        let train = ToyTrainConfig { adapt_weight: lambda, epochs, ..ToyTrainConfig::default() };
        synth_run(&DomainSpec::default(), &train, dir, None).unwrap();
        tensor_io::load_run(dir).unwrap()
    }

    #[test]
    fn score_contract() {
        let dir = tempfile::tempdir().unwrap();
        let run = synth(dir.path(), 0.1, 3);
        let reports = score_run(&run, &HopkinsOptions::default(), None).unwrap();
        assert_eq!(reports.len(), 3);
        for r in &reports {
            assert!((r.transfer_score - metrics::compose(r.uniformity, r.hopkins, r.mutual_info, r.k)).abs() < 1e-12);
            assert!(r.accuracy.is_some());
        }
        let one = score_run(&run, &HopkinsOptions::default(), Some(1)).unwrap();
        assert_eq!(one, vec![reports[1].clone()]);
        assert!(matches!(
            score_run(&run, &HopkinsOptions::default(), Some(7)),
            Err(ReportError::Load(LoadError::UnknownEpoch(7)))
        ));
    }

    #[test]
    fn rank_needs_two_runs_and_breaks_ties_by_id() {
        let dir = tempfile::tempdir().unwrap();
        let a = synth(&dir.path().join("a"), 0.1, 2);
        let err = rank_runs(
            std::slice::from_ref(&a),
            RankEpoch::Last,
            &HopkinsOptions::default(),
            &SelectionConfig::default(),
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("need >= 2 runs"));

        let train = ToyTrainConfig { epochs: 2, ..ToyTrainConfig::default() };
        synth_run(&DomainSpec::default(), &train, &dir.path().join("b"), Some("aaa")).unwrap();
        let b = tensor_io::load_run(dir.path().join("b")).unwrap();
        let report =
            rank_runs(&[a, b], RankEpoch::Last, &HopkinsOptions::default(), &SelectionConfig::default()).unwrap();
        assert_eq!(report.entries[0].t, report.entries[1].t);
        assert_eq!(report.entries[0].run_id, "aaa");
        let csv = report.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("rank,run_id,method,hyperparameters,epoch,u,h,m,t,accuracy\n"));
    }

    #[test]
    fn select_needs_enough_epochs() {
        let dir = tempfile::tempdir().unwrap();
        let run = synth(dir.path(), 0.1, 2);
        let err = select_epoch(&run, &HopkinsOptions::default(), &SelectionConfig::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let huge = SelectionConfig::new(2, 1e9).unwrap();
        let r = select_epoch(&run, &HopkinsOptions::default(), &huge).unwrap();
        assert_eq!(r.selected_epoch, if r.scores[1] > r.scores[0] { 1 } else { 0 });
        assert_eq!(r.window_start_epoch, 0);
    }

    #[test]
    fn correlate_requires_labels_and_two_epochs() {
        let dir = tempfile::tempdir().unwrap();
        let run = synth(dir.path(), 0.1, 1);
        assert_eq!(correlate(&run, &HopkinsOptions::default()).unwrap_err().exit_code(), 2);

        let mut manifest = synth(&dir.path().join("two"), 0.1, 2).manifest().clone();
        manifest.epochs.iter_mut().for_each(|e| e.labels = None);
        let unlabeled = Run::from_manifest(manifest, dir.path().join("two")).unwrap();
        let err = correlate(&unlabeled, &HopkinsOptions::default()).unwrap_err();
        assert!(err.to_string().contains("labels required"));
    }

    #[test]
    fn baseline_inputs_and_echo() {
        let a = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.5], [2.0, 2.0]]).unwrap();
        let inputs = BaselineInputs { source: Some(&a), target: Some(&a), probabilities: None };
        let r = compute_baseline(BaselineMetric::Mmd, inputs, &MmdConfig::default(), &ProbeConfig::default()).unwrap();
        assert!(r.value().abs() <= 1e-10);
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["metric"], "mmd");
        assert_eq!(json["config"]["bandwidth"], "median-heuristic");

        let err = compute_baseline(BaselineMetric::Centropy, inputs, &MmdConfig::default(), &ProbeConfig::default())
            .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let one_hot = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let inputs = BaselineInputs { probabilities: Some(&one_hot), ..BaselineInputs::default() };
        let r =
            compute_baseline(BaselineMetric::Centropy, inputs, &MmdConfig::default(), &ProbeConfig::default()).unwrap();
        assert_eq!(r.value(), 0.0);
    }

    #[test]
    fn synth_is_deterministic_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let train = ToyTrainConfig { epochs: 2, ..ToyTrainConfig::default() };
        for sub in ["x", "y"] {
            synth_run(&DomainSpec::default(), &train, &dir.path().join(sub), None).unwrap();
        }
        let mut names: Vec<_> =
            std::fs::read_dir(dir.path().join("x")).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert_eq!(names.len(), 9);
        for name in names {
            let x = std::fs::read(dir.path().join("x").join(&name)).unwrap();
            let y = std::fs::read(dir.path().join("y").join(&name)).unwrap();
            assert_eq!(x, y, "{name:?}");
        }
    }
}
