use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{KashinError, Result};

/// Orthogonality tolerance used when accepting a caller-supplied dense matrix.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-8;

/// Haar-distributed orthogonal matrix.
///
/// Draws an `n × n` standard-normal matrix column by column from a ChaCha8
/// stream, takes its QR factorization and flips each column of `Q` by the
/// sign of the matching diagonal entry of `R`. Without the sign flip the
/// distribution of `Q` depends on the QR convention and is not Haar.
pub fn haar_orthogonal(n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(KashinError::InvalidDimension(0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaussian = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let qr = gaussian.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

/// Frobenius norm of `QᵀQ - I`.
pub fn orthogonality_defect(q: &DMatrix<f64>) -> f64 {
    let n = q.ncols();
    let gram = q.tr_mul(q);
    (gram - DMatrix::<f64>::identity(n, n)).norm()
}

pub(crate) fn validate_orthogonal(q: &DMatrix<f64>) -> Result<()> {
    if q.nrows() != q.ncols() {
        return Err(KashinError::shape(
            "square matrix",
            format!("{}x{}", q.nrows(), q.ncols()),
        ));
    }
    if q.nrows() == 0 {
        return Err(KashinError::InvalidDimension(0));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(KashinError::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    let defect = orthogonality_defect(q);
    if defect > ORTHOGONALITY_TOLERANCE * (q.nrows() as f64).sqrt() {
        return Err(KashinError::InvalidArgument(format!(
            "matrix is not orthogonal: ||QᵀQ - I||_F = {defect:e}"
        )));
    }
    Ok(())
}
