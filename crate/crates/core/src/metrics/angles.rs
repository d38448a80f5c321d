//! Classifier uniformity: pairwise angles between class weight vectors
//! compared against the equiangular ideal.

use std::f64::consts::PI;

use super::MetricError;
use crate::matrix::DenseMatrix;
use crate::tensor_io::MIN_COLUMN_NORM;

/// Common pairwise angle of `k` unit vectors spread as a regular simplex,
/// `arccos(-1 / (k - 1))`. Only meaningful when `k <= d + 1`; that check
/// belongs to [`uniformity`].
pub fn ideal_angle(k: usize) -> Result<f64, MetricError> {
    if k < 2 {
        return Err(MetricError::TooFewClasses(k));
    }
    Ok((-1.0 / (k as f64 - 1.0)).acos())
}

/// Symmetric K x K matrix of angles (radians) between weight columns.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleMatrix {
    k: usize,
    angles: Vec<f64>,
}

impl AngleMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.angles[i * self.k + j]
    }

    /// Off-diagonal entries with `i < j`.
    pub fn upper_triangle(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.k).flat_map(move |i| (i + 1..self.k).map(move |j| self.get(i, j)))
    }
}

pub fn angle_matrix(weights: &DenseMatrix) -> Result<AngleMatrix, MetricError> {
    let k = weights.cols();
    let columns = weights.columns();
    let norms: Vec<f64> = columns.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    if let Some((col, &norm)) = norms.iter().enumerate().find(|(_, &n)| n < MIN_COLUMN_NORM || n.is_nan()) {
        return Err(MetricError::ZeroNormColumn { col, norm });
    }
    let mut angles = vec![0.0; k * k];
    for i in 0..k {
        for j in i + 1..k {
            let dot: f64 = columns[i].iter().zip(&columns[j]).map(|(a, b)| a * b).sum();
            let cos = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            let theta = cos.acos();
            angles[i * k + j] = theta;
            angles[j * k + i] = theta;
        }
    }
    debug_assert!(angles.iter().all(|a| (0.0..=PI).contains(a)));
    Ok(AngleMatrix { k, angles })
}

/// Uniformity value together with whether the classifier has more classes
/// than a simplex in its feature space can hold (`K > d + 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniformity {
    pub value: f64,
    pub k: usize,
    pub d: usize,
    pub simplex_bound_exceeded: bool,
}

impl Uniformity {
    /// Turns a flagged result into [`MetricError::SimplexBoundExceeded`].
    pub fn strict(self) -> Result<f64, MetricError> {
        if self.simplex_bound_exceeded {
            Err(MetricError::SimplexBoundExceeded { k: self.k, d: self.d, value: self.value })
        } else {
            Ok(self.value)
        }
    }
}

/// Mean squared deviation of the K(K-1) off-diagonal angles from
/// [`ideal_angle`]. Always computed; `K > d + 1` only sets the flag.
pub fn uniformity(weights: &DenseMatrix) -> Result<Uniformity, MetricError> {
    let (d, k) = weights.shape();
    let ideal = ideal_angle(k)?;
    let angles = angle_matrix(weights)?;
    // each unordered pair appears twice in the full matrix, so the mean over
    // i < j equals the mean over all K(K-1) ordered pairs
    let pairs = (k * (k - 1) / 2) as f64;
    let value = angles.upper_triangle().map(|t| (t - ideal).powi(2)).sum::<f64>() / pairs;
    Ok(Uniformity { value, k, d, simplex_bound_exceeded: k > d + 1 })
}
