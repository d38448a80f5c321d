//! Transfer score and its three constituents.
//!
//! ```text
//! T = -U + H + |M| / ln K
//! ```
//!
//! - `U`: [uniformity] of the classifier's weight columns (lower is better)
//! - `H`: [hopkins_statistic] of the target features (clustering tendency)
//! - `M`: [mutual_information] of the target predictions, in nats

mod angles;
mod hopkins;
mod information;

pub use angles::{angle_matrix, ideal_angle, uniformity, AngleMatrix, Uniformity};
pub use hopkins::{draw_distances, hopkins_draws, hopkins_statistic, HopkinsConfig, HopkinsDistances, HopkinsDraw};
pub use information::{entropy, mean_entropy, mutual_information};

use serde::{Deserialize, Serialize};

use crate::tensor_io::EpochRecord;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("zero-norm weight column {col} (norm {norm:e})")]
    ZeroNormColumn { col: usize, norm: f64 },
    #[error("K = {k} classes exceed d + 1 = {} for feature dimension {d}; uniformity {value} is measured against an unreachable ideal", d + 1)]
    SimplexBoundExceeded { k: usize, d: usize, value: f64 },
    #[error("need at least {min} feature rows, got {n}")]
    TooFewSamples { n: usize, min: usize },
    #[error("hopkins sample size m = {m} outside [2, {}] for N = {n}", n.saturating_sub(1))]
    SampleSizeOutOfRange { m: usize, n: usize },
    #[error("hopkins repetitions must be at least 1")]
    ZeroRepetitions,
    #[error("malformed probabilities{}: {reason}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    MalformedProbabilities { row: Option<usize>, reason: String },
}

/// Per-epoch metric values. Serialized with the short field names `u`, `h`,
/// `m`, `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub epoch: u64,
    pub k: usize,
    #[serde(rename = "u")]
    pub uniformity: f64,
    #[serde(rename = "h")]
    pub hopkins: f64,
    #[serde(rename = "m")]
    pub mutual_info: f64,
    #[serde(rename = "t")]
    pub transfer_score: f64,
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub simplex_bound_exceeded: bool,
}

/// `-u + h + |m| / ln k`.
pub fn compose(uniformity: f64, hopkins: f64, mutual_info: f64, k: usize) -> f64 {
    -uniformity + hopkins + mutual_info.abs() / (k as f64).ln()
}

/// Fraction of rows whose argmax (lowest index on ties) equals the label.
pub fn accuracy(probabilities: &crate::DenseMatrix, labels: &[usize]) -> f64 {
    let correct = probabilities.row_iter().zip(labels).filter(|(row, &label)| argmax(row) == label).count();
    correct as f64 / labels.len() as f64
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    values.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best }).0
}

/// Computes U on the weights, H on the features and M on the probabilities
/// of one checkpoint, and their composition.
pub fn transfer_score(record: &EpochRecord, hopkins_config: &HopkinsConfig) -> Result<MetricReport, MetricError> {
    let k = record.num_classes();
    let u = uniformity(record.weights())?;
    let h = hopkins_statistic(record.features(), hopkins_config)?;
    let m = mutual_information(record.probabilities())?;
    Ok(MetricReport {
        epoch: record.epoch(),
        k,
        uniformity: u.value,
        hopkins: h,
        mutual_info: m,
        transfer_score: compose(u.value, h, m, k),
        accuracy: record.labels().map(|l| accuracy(record.probabilities(), l)),
        simplex_bound_exceeded: u.simplex_bound_exceeded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DenseMatrix;
    use approx::assert_abs_diff_eq;

    #[test]
    fn composition_examples() {
        for k in [2usize, 3, 10, 65] {
            assert_abs_diff_eq!(compose(0.0, 1.0, (k as f64).ln(), k), 2.0, epsilon = 1e-15);
            assert_abs_diff_eq!(compose(0.1, 0.85, 0.57 * (k as f64).ln(), k), 1.32, epsilon = 1e-12);
            assert_eq!(compose(0.3, 0.6, 0.0, k), -0.3 + 0.6);
        }
    }

    #[test]
    fn argmax_ties_take_lowest_index() {
        assert_eq!(argmax(&[0.4, 0.4, 0.2]), 0);
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        let p = DenseMatrix::from_rows(&[[0.5, 0.5], [0.2, 0.8], [0.9, 0.1]]).unwrap();
        assert_abs_diff_eq!(accuracy(&p, &[0, 1, 1]), 2.0 / 3.0);
    }

    fn simplex_record(probabilities: DenseMatrix, labels: Option<Vec<usize>>) -> EpochRecord {
        let w = DenseMatrix::from_columns(&[[1.0, 0.0], [-0.5, 0.75f64.sqrt()], [-0.5, -(0.75f64.sqrt())]]).unwrap();
        let f = DenseMatrix::new(
            probabilities.rows(),
            2,
            (0..probabilities.rows() * 2).map(|i| (i % 7) as f64 * 0.3).collect(),
        )
        .unwrap();
        EpochRecord::new(3, w, f, probabilities, labels).unwrap()
    }

    #[test]
    fn identical_rows_contribute_no_information() {
        let p = DenseMatrix::new(6, 3, [0.6, 0.3, 0.1].repeat(6)).unwrap();
        let rec = simplex_record(p, Some(vec![0, 0, 1, 2, 0, 1]));
        let report = transfer_score(&rec, &HopkinsConfig::new(3, 2, 0)).unwrap();
        assert_abs_diff_eq!(report.mutual_info, 0.0, epsilon = 1e-15);
        assert!(report.uniformity < 1e-10);
        assert_abs_diff_eq!(report.transfer_score, -report.uniformity + report.hopkins, epsilon = 1e-12);
        assert_abs_diff_eq!(report.accuracy.unwrap(), 0.5);
        assert_eq!(report.epoch, 3);
    }

    #[test]
    fn report_json_uses_short_names() {
        let p = DenseMatrix::new(6, 3, [0.6, 0.3, 0.1].repeat(6)).unwrap();
        let rec = simplex_record(p, None);
        let report = transfer_score(&rec, &HopkinsConfig::new(3, 1, 0)).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        for key in ["epoch", "u", "h", "m", "t", "accuracy", "k"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert!(json["accuracy"].is_null());
        assert!(json.get("simplex_bound_exceeded").is_none());
    }
}
