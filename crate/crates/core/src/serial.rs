//! Complex numbers and matrices as `[re, im]` pairs.

use num_complex::Complex64;

use crate::error::{QptError, Result};
use crate::numkit::CMatrix;

/// Row-major nested arrays of `[re, im]`.
pub type ComplexMatrix = Vec<Vec<[f64; 2]>>;

pub fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn matrix_to_pairs(m: &CMatrix) -> ComplexMatrix {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| pair(m[(r, c)])).collect())
        .collect()
}

pub fn matrix_from_pairs(rows: &ComplexMatrix) -> Result<CMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(QptError::Shape(
            "complex matrix must be a non-empty rectangular array of [re, im] pairs".into(),
        ));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |r, c| {
        let [re, im] = rows[r][c];
        Complex64::new(re, im)
    }))
}

/// Rounds to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .unwrap_or(x)
}
