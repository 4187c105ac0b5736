use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{KashinError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorStats {
    /// `‖X − X̂‖_F / ‖X‖_F`; 0 when both are zero, infinite when only `X` is.
    pub relative_frobenius: f64,
    pub max_abs: f64,
}

pub fn error_stats(x: &DMatrix<f64>, x_hat: &DMatrix<f64>) -> Result<ErrorStats> {
    if x.shape() != x_hat.shape() {
        return Err(KashinError::shape(
            format!("{}x{}", x.nrows(), x.ncols()),
            format!("{}x{}", x_hat.nrows(), x_hat.ncols()),
        ));
    }
    let diff = x - x_hat;
    let err = diff.norm();
    let norm = x.norm();
    let relative_frobenius = if err == 0.0 {
        0.0
    } else if norm == 0.0 {
        f64::INFINITY
    } else {
        err / norm
    };
    Ok(ErrorStats {
        relative_frobenius,
        max_abs: diff.amax(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_matrices_have_zero_error() {
        let x = DMatrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64);
        let s = error_stats(&x, &x).unwrap();
        assert_eq!(s.relative_frobenius, 0.0);
        assert_eq!(s.max_abs, 0.0);
    }

    #[test]
    fn known_error() {
        let x = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
        let y = DMatrix::from_row_slice(1, 2, &[3.0, 3.5]);
        let s = error_stats(&x, &y).unwrap();
        assert!((s.relative_frobenius - 0.1).abs() < 1e-15);
        assert_eq!(s.max_abs, 0.5);
    }

    #[test]
    fn shape_mismatch() {
        let x = DMatrix::<f64>::zeros(2, 2);
        let y = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(error_stats(&x, &y), Err(KashinError::Shape { .. })));
    }
}
