//! Binary tensor files (`.tsr`), run manifests and validated epoch records.
//!
//! Tensor layout, all integers little-endian:
//!
//! ```text
//! offset  size        field
//! 0       4           magic "TSRD"
//! 4       4           u32 version (= 1)
//! 8       1           u8 dtype (0 = f32, 1 = f64)
//! 9       1           u8 ndim (1 or 2)
//! 10      8 * ndim    u64 dims
//! ...     numel * w   row-major payload
//! ```
//!
//! A one-dimensional tensor of length `n` loads as an `n x 1` matrix.
//! `f32` payloads are widened to `f64` on load.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matrix::DenseMatrix;

pub const MAGIC: [u8; 4] = *b"TSRD";
pub const VERSION: u32 = 1;
pub const TENSOR_EXTENSION: &str = "tsr";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Tolerance on probability row sums before exact renormalization.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-4;
/// Minimum Euclidean norm of a classifier weight column.
pub const MIN_COLUMN_NORM: f64 = 1e-12;

const HEADER_LEN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Dtype::F32),
            1 => Some(Dtype::F64),
            _ => None,
        }
    }

    pub fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

/// Decoding failure for a single tensor file. Each format violation has its
/// own variant.
#[derive(Debug, thiserror::Error)]
pub enum TensorError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("bad magic: expected \"TSRD\", found {found:?}")]
    BadMagic { found: Vec<u8> },
    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),
    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u8),
    #[error("unsupported ndim {0} (only 1 or 2 dimensions)")]
    UnsupportedNdim(u8),
    #[error("truncated {section}: need {expected} bytes, have {available}")]
    Truncated { section: &'static str, expected: usize, available: usize },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
    #[error("dimensions overflow addressable size")]
    Overflow,
    #[error("non-finite value {value} at flat index {index}")]
    NonFinite { index: usize, value: f64 },
}

/// Encodes a matrix as a two-dimensional tensor. `F32` rounds each entry to
/// the nearest `f32`.
pub fn encode_tensor(matrix: &DenseMatrix, dtype: Dtype) -> Vec<u8> {
    let (rows, cols) = matrix.shape();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 + matrix.data().len() * dtype.width());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(dtype.code());
    out.push(2);
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    match dtype {
        Dtype::F64 => matrix.data().iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        Dtype::F32 => matrix.data().iter().for_each(|&v| out.extend_from_slice(&(v as f32).to_le_bytes())),
    }
    out
}

fn take<'a>(bytes: &'a [u8], at: usize, len: usize, section: &'static str) -> Result<&'a [u8], TensorError> {
    bytes.get(at..at + len).ok_or(TensorError::Truncated { section, expected: at + len, available: bytes.len() })
}

/// Decodes a tensor file image. Returns the matrix and the on-disk dtype.
pub fn decode_tensor(bytes: &[u8]) -> Result<(DenseMatrix, Dtype), TensorError> {
    if bytes.len() >= 4 && bytes[..4] != MAGIC {
        return Err(TensorError::BadMagic { found: bytes[..4].to_vec() });
    }
    let header = take(bytes, 0, HEADER_LEN, "header")?;
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(TensorError::UnsupportedVersion(version));
    }
    let dtype = Dtype::from_code(header[8]).ok_or(TensorError::UnsupportedDtype(header[8]))?;
    let ndim = header[9];
    if !(1..=2).contains(&ndim) {
        return Err(TensorError::UnsupportedNdim(ndim));
    }
    let dims_bytes = take(bytes, HEADER_LEN, 8 * ndim as usize, "dims")?;
    let dims: Vec<usize> = dims_bytes
        .chunks_exact(8)
        .map(|c| usize::try_from(u64::from_le_bytes(c.try_into().unwrap())).map_err(|_| TensorError::Overflow))
        .collect::<Result<_, _>>()?;
    let (rows, cols) = if ndim == 1 { (dims[0], 1) } else { (dims[0], dims[1]) };
    let numel = rows.checked_mul(cols).ok_or(TensorError::Overflow)?;
    let payload_len = numel.checked_mul(dtype.width()).ok_or(TensorError::Overflow)?;
    let start = HEADER_LEN + 8 * ndim as usize;
    let payload = take(bytes, start, payload_len, "payload")?;
    let trailing = bytes.len() - start - payload_len;
    if trailing != 0 {
        return Err(TensorError::TrailingBytes(trailing));
    }
    let data: Vec<f64> = match dtype {
        Dtype::F64 => payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect(),
        Dtype::F32 => payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect(),
    };
    if let Some((index, &value)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(TensorError::NonFinite { index, value });
    }
    Ok((DenseMatrix::from_parts_unchecked(rows, cols, data), dtype))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseMatrix, TensorError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| TensorError::Io { path: path.to_path_buf(), source })?;
    decode_tensor(&bytes).map(|(m, _)| m)
}

/// Writes `matrix` as a float64 tensor.
pub fn write_tensor(matrix: &DenseMatrix, path: impl AsRef<Path>) -> Result<(), TensorError> {
    write_tensor_as(matrix, path, Dtype::F64)
}

pub fn write_tensor_as(matrix: &DenseMatrix, path: impl AsRef<Path>, dtype: Dtype) -> Result<(), TensorError> {
    let path = path.as_ref();
    fs::write(path, encode_tensor(matrix, dtype)).map_err(|source| TensorError::Io { path: path.to_path_buf(), source })
}

/// Contract violation inside a single checkpoint's tensors.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RecordError {
    #[error("weights must have at least 2 columns (classes), found {0}")]
    TooFewClasses(usize),
    #[error("weights must have at least 1 row (feature dimension)")]
    EmptyWeights,
    #[error("features must have at least one row")]
    NoSamples,
    #[error("shape mismatch: features have {features} columns but weights have {weights} rows")]
    FeatureDimMismatch { features: usize, weights: usize },
    #[error("shape mismatch: probabilities are {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    ProbabilityShape { rows: usize, cols: usize, expected_rows: usize, expected_cols: usize },
    #[error("probabilities not normalized: row {row} sums to {sum}")]
    NotNormalized { row: usize, sum: f64 },
    #[error("probability {value} outside [0, 1] at row {row}, column {col}")]
    ProbabilityOutOfRange { row: usize, col: usize, value: f64 },
    #[error("zero-norm weight column {col} (norm {norm:e})")]
    ZeroNormColumn { col: usize, norm: f64 },
    #[error("shape mismatch: {labels} labels for {samples} samples")]
    LabelCount { labels: usize, samples: usize },
    #[error("label {label} at row {row} outside [0, {k})")]
    LabelOutOfRange { row: usize, label: usize, k: usize },
    #[error("label tensor must be Nx1, found {rows}x{cols}")]
    LabelShape { rows: usize, cols: usize },
    #[error("label {value} at row {row} is not a non-negative integer")]
    LabelNotInteger { row: usize, value: f64 },
}

/// One checkpoint's tensors, validated.
///
/// - `weights`: d x K, one column per class
/// - `features`: N x d target-domain embeddings
/// - `probabilities`: N x K softmax outputs, each row summing to exactly 1
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    epoch: u64,
    weights: DenseMatrix,
    features: DenseMatrix,
    probabilities: DenseMatrix,
    labels: Option<Vec<usize>>,
}

impl EpochRecord {
    pub fn new(
        epoch: u64,
        weights: DenseMatrix,
        features: DenseMatrix,
        probabilities: DenseMatrix,
        labels: Option<Vec<usize>>,
    ) -> Result<Self, RecordError> {
        let (d, k) = weights.shape();
        if k < 2 {
            return Err(RecordError::TooFewClasses(k));
        }
        if d < 1 {
            return Err(RecordError::EmptyWeights);
        }
        if features.cols() != d {
            return Err(RecordError::FeatureDimMismatch { features: features.cols(), weights: d });
        }
        let n = features.rows();
        if n == 0 {
            return Err(RecordError::NoSamples);
        }
        if probabilities.shape() != (n, k) {
            return Err(RecordError::ProbabilityShape {
                rows: probabilities.rows(),
                cols: probabilities.cols(),
                expected_rows: n,
                expected_cols: k,
            });
        }
        for (col, column) in weights.columns().iter().enumerate() {
            let norm = column.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < MIN_COLUMN_NORM {
                return Err(RecordError::ZeroNormColumn { col, norm });
            }
        }
        let probabilities = normalize_probabilities(&probabilities)?;
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(RecordError::LabelCount { labels: labels.len(), samples: n });
            }
            if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
                return Err(RecordError::LabelOutOfRange { row, label, k });
            }
        }
        Ok(Self { epoch, weights, features, probabilities, labels })
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }
    pub fn weights(&self) -> &DenseMatrix {
        &self.weights
    }
    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }
    pub fn probabilities(&self) -> &DenseMatrix {
        &self.probabilities
    }
    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }
    pub fn num_classes(&self) -> usize {
        self.weights.cols()
    }
    pub fn feature_dim(&self) -> usize {
        self.weights.rows()
    }
    pub fn num_samples(&self) -> usize {
        self.features.rows()
    }
}

/// Checks every row lies in [0, 1] and sums to 1 within
/// [`PROBABILITY_SUM_TOLERANCE`], then divides each row by its sum.
pub fn normalize_probabilities(p: &DenseMatrix) -> Result<DenseMatrix, RecordError> {
    let mut data = Vec::with_capacity(p.data().len());
    for (row, values) in p.row_iter().enumerate() {
        if let Some((col, &value)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(RecordError::ProbabilityOutOfRange { row, col, value });
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(RecordError::NotNormalized { row, sum });
        }
        data.extend(values.iter().map(|v| v / sum));
    }
    Ok(DenseMatrix::from_parts_unchecked(p.rows(), p.cols(), data))
}

/// Converts an N x 1 label tensor into class indices.
pub fn labels_from_matrix(m: &DenseMatrix) -> Result<Vec<usize>, RecordError> {
    if m.cols() != 1 {
        return Err(RecordError::LabelShape { rows: m.rows(), cols: m.cols() });
    }
    m.data()
        .iter()
        .enumerate()
        .map(|(row, &value)| {
            if value >= 0.0 && value.fract() == 0.0 && value < u32::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(RecordError::LabelNotInteger { row, value })
            }
        })
        .collect()
}

pub fn labels_to_matrix(labels: &[usize]) -> DenseMatrix {
    DenseMatrix::from_parts_unchecked(labels.len(), 1, labels.iter().map(|&l| l as f64).collect())
}

/// File references for one epoch, relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochEntry {
    pub epoch: u64,
    pub weights: PathBuf,
    pub features: PathBuf,
    pub probabilities: PathBuf,
    pub labels: Option<PathBuf>,
}

/// Metadata for one training run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub method: String,
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, String>,
    pub epochs: Vec<EpochEntry>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorRole {
    Weights,
    Features,
    Probabilities,
    Labels,
}

impl fmt::Display for TensorRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TensorRole::Weights => "weights",
            TensorRole::Features => "features",
            TensorRole::Probabilities => "probabilities",
            TensorRole::Labels => "labels",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read manifest {path}: {source}")]
    ManifestIo {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("cannot parse manifest {path}: {source}")]
    ManifestParse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("manifest lists no epochs")]
    NoEpochs,
    #[error("epoch indices must be strictly increasing: {next} follows {previous}")]
    NonIncreasingEpochs { previous: u64, next: u64 },
    #[error("epoch {epoch}: missing {role} file {path}")]
    MissingFile { epoch: u64, role: TensorRole, path: PathBuf },
    #[error("epoch {epoch}: cannot decode {role} file {path}: {source}")]
    Tensor {
        epoch: u64,
        role: TensorRole,
        path: PathBuf,
        #[source]
        source: TensorError,
    },
    #[error("epoch {epoch}: {source}")]
    Record {
        epoch: u64,
        #[source]
        source: RecordError,
    },
    #[error("epoch {0} not found in run")]
    UnknownEpoch(u64),
}

/// A parsed manifest whose epoch records load on demand.
#[derive(Debug, Clone)]
pub struct Run {
    manifest: RunManifest,
    base_dir: PathBuf,
}

/// Parses a run manifest. `path` may be the manifest file itself or the run
/// directory containing `manifest.json`.
pub fn load_run(path: impl AsRef<Path>) -> Result<Run, LoadError> {
    Run::open(path)
}

impl Run {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LoadError> {
        let path = path.as_ref();
        let manifest_path = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
        let text = fs::read_to_string(&manifest_path)
            .map_err(|source| LoadError::ManifestIo { path: manifest_path.clone(), source })?;
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|source| LoadError::ManifestParse { path: manifest_path.clone(), source })?;
        let base_dir = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_manifest(manifest, base_dir)
    }

    /// Validates epoch ordering and file existence for an in-memory manifest.
    pub fn from_manifest(manifest: RunManifest, base_dir: impl Into<PathBuf>) -> Result<Self, LoadError> {
        let run = Self { manifest, base_dir: base_dir.into() };
        if run.manifest.epochs.is_empty() {
            return Err(LoadError::NoEpochs);
        }
        for pair in run.manifest.epochs.windows(2) {
            if pair[1].epoch <= pair[0].epoch {
                return Err(LoadError::NonIncreasingEpochs { previous: pair[0].epoch, next: pair[1].epoch });
            }
        }
        for entry in &run.manifest.epochs {
            for (role, rel) in entry_files(entry) {
                let path = run.base_dir.join(rel);
                if !path.is_file() {
                    return Err(LoadError::MissingFile { epoch: entry.epoch, role, path });
                }
            }
        }
        Ok(run)
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn run_id(&self) -> &str {
        &self.manifest.run_id
    }

    pub fn len(&self) -> usize {
        self.manifest.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.epochs.is_empty()
    }

    pub fn epoch_indices(&self) -> Vec<u64> {
        self.manifest.epochs.iter().map(|e| e.epoch).collect()
    }

    /// Loads and validates the record at list position `pos`.
    pub fn load_position(&self, pos: usize) -> Result<EpochRecord, LoadError> {
        let entry = &self.manifest.epochs[pos];
        let epoch = entry.epoch;
        let read = |role: TensorRole, rel: &Path| {
            let path = self.base_dir.join(rel);
            if !path.is_file() {
                return Err(LoadError::MissingFile { epoch, role, path });
            }
            read_tensor(&path).map_err(|source| LoadError::Tensor { epoch, role, path, source })
        };
        let weights = read(TensorRole::Weights, &entry.weights)?;
        let features = read(TensorRole::Features, &entry.features)?;
        let probabilities = read(TensorRole::Probabilities, &entry.probabilities)?;
        let labels = match &entry.labels {
            Some(rel) => Some(
                labels_from_matrix(&read(TensorRole::Labels, rel)?)
                    .map_err(|source| LoadError::Record { epoch, source })?,
            ),
            None => None,
        };
        EpochRecord::new(epoch, weights, features, probabilities, labels)
            .map_err(|source| LoadError::Record { epoch, source })
    }

    /// Loads the record whose epoch index is `epoch`.
    pub fn load_epoch(&self, epoch: u64) -> Result<EpochRecord, LoadError> {
        let pos = self.manifest.epochs.iter().position(|e| e.epoch == epoch).ok_or(LoadError::UnknownEpoch(epoch))?;
        self.load_position(pos)
    }

    /// Loads every record in manifest order; epochs are decoded in parallel.
    pub fn load_all(&self) -> Result<Vec<EpochRecord>, LoadError> {
        (0..self.len()).into_par_iter().map(|pos| self.load_position(pos)).collect()
    }
}

fn entry_files(entry: &EpochEntry) -> impl Iterator<Item = (TensorRole, &Path)> {
    [
        (TensorRole::Weights, Some(entry.weights.as_path())),
        (TensorRole::Features, Some(entry.features.as_path())),
        (TensorRole::Probabilities, Some(entry.probabilities.as_path())),
        (TensorRole::Labels, entry.labels.as_deref()),
    ]
    .into_iter()
    .filter_map(|(role, p)| p.map(|p| (role, p)))
}

/// Writes a run directory: one `.tsr` file per tensor plus `manifest.json`.
/// Returns the manifest path.
pub fn write_run(
    dir: impl AsRef<Path>,
    run_id: &str,
    method: &str,
    hyperparameters: BTreeMap<String, String>,
    records: &[EpochRecord],
    dtype: Dtype,
) -> Result<PathBuf, TensorError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| TensorError::Io { path: dir.to_path_buf(), source })?;
    let mut epochs = Vec::with_capacity(records.len());
    for record in records {
        let e = record.epoch();
        let name = |role: &str| PathBuf::from(format!("epoch_{e:04}_{role}.{TENSOR_EXTENSION}"));
        let entry = EpochEntry {
            epoch: e,
            weights: name("weights"),
            features: name("features"),
            probabilities: name("probabilities"),
            labels: record.labels().map(|_| name("labels")),
        };
        write_tensor_as(record.weights(), dir.join(&entry.weights), dtype)?;
        write_tensor_as(record.features(), dir.join(&entry.features), dtype)?;
        write_tensor_as(record.probabilities(), dir.join(&entry.probabilities), dtype)?;
        if let (Some(labels), Some(rel)) = (record.labels(), &entry.labels) {
            write_tensor_as(&labels_to_matrix(labels), dir.join(rel), dtype)?;
        }
        epochs.push(entry);
    }
    let manifest = RunManifest { run_id: run_id.to_string(), method: method.to_string(), hyperparameters, epochs };
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_json() + "\n").map_err(|source| TensorError::Io { path: path.clone(), source })?;
    Ok(path)
}
