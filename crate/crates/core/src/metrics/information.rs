//! Shannon entropy (nats) and prediction mutual information.

use super::MetricError;
use crate::matrix::DenseMatrix;

/// Row sums must match 1 within this tolerance.
pub const SUM_TOLERANCE: f64 = 1e-9;

fn check_distribution(p: &[f64], row: Option<usize>) -> Result<(), MetricError> {
    if p.is_empty() {
        return Err(MetricError::MalformedProbabilities { row, reason: "empty vector".into() });
    }
    if let Some(v) = p.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(MetricError::MalformedProbabilities { row, reason: format!("entry {v} is not a probability") });
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(MetricError::MalformedProbabilities { row, reason: format!("sums to {sum}") });
    }
    Ok(())
}

/// Written as `ln K - sum(p ln(K p))` so that uniform rows give exactly
/// `ln K` and one-hot rows exactly 0.
fn entropy_unchecked(p: &[f64]) -> f64 {
    let k = p.len() as f64;
    k.ln() - p.iter().filter(|&&v| v > 0.0).map(|&v| v * (k * v).ln()).sum::<f64>()
}

/// `-sum(p ln p)` with `0 ln 0 = 0`. Result lies in `[0, ln K]`.
pub fn entropy(p: &[f64]) -> Result<f64, MetricError> {
    check_distribution(p, None)?;
    Ok(entropy_unchecked(p).clamp(0.0, (p.len() as f64).ln()))
}

fn check_rows(probabilities: &DenseMatrix) -> Result<(), MetricError> {
    if probabilities.rows() == 0 {
        return Err(MetricError::MalformedProbabilities { row: None, reason: "no rows".into() });
    }
    probabilities.row_iter().enumerate().try_for_each(|(i, row)| check_distribution(row, Some(i)))
}

/// Mean row entropy.
pub fn mean_entropy(probabilities: &DenseMatrix) -> Result<f64, MetricError> {
    check_rows(probabilities)?;
    let k = probabilities.cols() as f64;
    let total: f64 = probabilities.row_iter().map(entropy_unchecked).sum();
    Ok((total / probabilities.rows() as f64).clamp(0.0, k.ln()))
}

/// Entropy of the mean prediction minus the mean prediction entropy.
///
/// High when individual predictions are confident and the predicted classes
/// are balanced across rows. Clamped to `[0, ln K]` against rounding.
pub fn mutual_information(probabilities: &DenseMatrix) -> Result<f64, MetricError> {
    check_rows(probabilities)?;
    let (n, k) = probabilities.shape();
    let mut marginal = vec![0.0; k];
    let mut conditional = 0.0;
    for row in probabilities.row_iter() {
        for (m, &p) in marginal.iter_mut().zip(row) {
            *m += p;
        }
        conditional += entropy_unchecked(row);
    }
    marginal.iter_mut().for_each(|m| *m /= n as f64);
    let mi = entropy_unchecked(&marginal) - conditional / n as f64;
    Ok(mi.clamp(0.0, (k as f64).ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(entropy(&[0.25; 4]).unwrap(), 4f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(entropy(&[0.25; 4]).unwrap(), 1.386_294, epsilon = 1e-6);
        assert_eq!(entropy(&[0.0, 1.0, 0.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(entropy(&[0.5, 0.25, 0.25]).unwrap(), 1.5 * 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(entropy(&[0.5, 0.25, 0.25]).unwrap(), 1.039_721, epsilon = 1e-6);
    }

    #[test]
    fn entropy_rejects_malformed() {
        assert!(entropy(&[0.5, 0.6]).is_err());
        assert!(entropy(&[1.5, -0.5]).is_err());
        assert!(entropy(&[f64::NAN, 1.0]).is_err());
        assert!(entropy(&[]).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let uniform = DenseMatrix::new(5, 3, vec![1.0 / 3.0; 15]).unwrap();
        assert_abs_diff_eq!(mutual_information(&uniform).unwrap(), 0.0, epsilon = 1e-15);

        let k = 4;
        let mut eye = vec![0.0; k * k];
        (0..k).for_each(|i| eye[i * k + i] = 1.0);
        let eye = DenseMatrix::new(k, k, eye).unwrap();
        assert_eq!(mutual_information(&eye).unwrap(), (k as f64).ln());

        let two = DenseMatrix::from_rows(&[[0.9, 0.1], [0.1, 0.9]]).unwrap();
        let expected = 2f64.ln() - (-0.9 * 0.9f64.ln() - 0.1 * 0.1f64.ln());
        assert_abs_diff_eq!(mutual_information(&two).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(mutual_information(&two).unwrap(), 0.368_064_207, epsilon = 1e-9);
    }

    #[test]
    fn malformed_row_is_named() {
        let bad = DenseMatrix::from_rows(&[[0.5, 0.5], [0.5, 0.4]]).unwrap();
        match mutual_information(&bad) {
            Err(MetricError::MalformedProbabilities { row: Some(1), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn class_permutation_invariance() {
        let p = DenseMatrix::from_rows(&[[0.7, 0.2, 0.1], [0.1, 0.3, 0.6], [0.3, 0.3, 0.4]]).unwrap();
        let perm = [2, 0, 1];
        let rows: Vec<Vec<f64>> = p.row_iter().map(|r| perm.iter().map(|&j| r[j]).collect()).collect();
        let q = DenseMatrix::from_rows(&rows).unwrap();
        assert_abs_diff_eq!(mutual_information(&p).unwrap(), mutual_information(&q).unwrap(), epsilon = 1e-14);
        assert_abs_diff_eq!(entropy(p.row(0)).unwrap(), entropy(q.row(0)).unwrap(), epsilon = 1e-14);
    }
}
