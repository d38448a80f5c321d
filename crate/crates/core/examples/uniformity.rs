//! Ideal simplex angle and the uniformity of a few classifier heads.

use std::f64::consts::PI;

use tscore::metrics::{ideal_angle, uniformity};
use tscore::DenseMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for k in [2, 3, 4, 10, 65, 1000] {
        println!("K = {k:>4}: ideal angle {:.10} rad ({:.4} deg)", ideal_angle(k)?, ideal_angle(k)?.to_degrees());
    }

    // equiangular frame in the plane: perfectly uniform
    let frame: Vec<Vec<f64>> = (0..3)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / 3.0;
            vec![a.cos(), a.sin()]
        })
        .collect();
    println!("simplex frame   U = {:e}", uniformity(&DenseMatrix::from_columns(&frame)?)?.value);

    let eye = DenseMatrix::from_columns(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])?;
    println!("orthonormal     U = {:.9} (pi/6)^2 = {:.9}", uniformity(&eye)?.value, (PI / 6.0).powi(2));

    let squashed = DenseMatrix::from_columns(&[[1.0, 0.1], [1.0, -0.1], [0.9, 0.0]])?;
    println!("near-collinear  U = {:.6}", uniformity(&squashed)?.value);

    // four classes in two dimensions cannot reach the ideal angle
    let crowded = DenseMatrix::from_columns(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])?;
    let u = uniformity(&crowded)?;
    println!("K=4, d=2        U = {:.6}, bound exceeded: {}", u.value, u.simplex_bound_exceeded);
    Ok(())
}
