//! Write a matrix as a `.tsr` file in both dtypes and read it back.

use tscore::tensor_io::{read_tensor, write_tensor_as, Dtype};
use tscore::DenseMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("tscore-roundtrip");
    std::fs::create_dir_all(&dir)?;
    let m = DenseMatrix::from_rows(&[[1.0, 2.0, 3.0], [0.1, 0.2, 0.3]])?;

    for (dtype, name) in [(Dtype::F64, "m64.tsr"), (Dtype::F32, "m32.tsr")] {
        let path = dir.join(name);
        write_tensor_as(&m, &path, dtype)?;
        let back = read_tensor(&path)?;
        let max_err = m.data().iter().zip(back.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!(
            "{name}: {} bytes, shape {:?}, max abs error {max_err:e}",
            std::fs::metadata(&path)?.len(),
            back.shape()
        );
    }
    Ok(())
}
