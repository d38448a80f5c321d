//! Label-free evaluation of domain-adapted classifier checkpoints.
//!
//! Given, per training epoch, the classifier weights, the target-domain
//! features and the target-domain softmax outputs of a model, this crate
//! computes the transfer score
//!
//! ```text
//! T = -U + H + |M| / ln K
//! ```
//!
//! from classifier uniformity `U`, the Hopkins statistic `H` of the features
//! and the mutual information `M` of the predictions. Scores are used to rank
//! candidate runs and to pick a checkpoint once the score plateaus.
//!
//! Modules:
//!
//! - [`tensor_io`]: `.tsr` tensor files, run manifests, validated epoch records
//! - [`metrics`]: uniformity, Hopkins statistic, mutual information, transfer score
//! - [`select`]: saturation level and checkpoint selection
//! - [`baseline`]: MMD, proxy A-distance, C-entropy, Pearson correlation
//! - [`synth`]: synthetic domains and a small trainable model
//! - [`report`]: the operations behind the `tscore` command line

pub mod baseline;
pub mod matrix;
pub mod metrics;
pub mod report;
pub mod select;
pub mod synth;
pub mod tensor_io;

pub use matrix::{DenseMatrix, MatrixError};
pub use metrics::{transfer_score, HopkinsConfig, MetricReport};
pub use select::{select_checkpoint, ScoreSeries, SelectionConfig, SelectionResult};
pub use tensor_io::{load_run, read_tensor, write_tensor, EpochRecord, Run, RunManifest};
