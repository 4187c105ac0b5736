//! Eigenvectors of real orthogonal matrices.
//!
//! An orthogonal matrix is normal, so its real Schur form `ZᵀQZ = T` is block
//! diagonal: 1×1 blocks for the real eigenvalues ±1 and 2×2 rotation-like
//! blocks for conjugate pairs. Eigenvectors are read off block by block as
//! `Z[:, j..j+2]·w`, where `w` is the eigenvector of the 2×2 block. Each
//! complex eigenvector is scaled to unit norm with its largest-modulus entry
//! real, the usual normalization of dense eigen solvers.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{KashinError, Result};

/// Real parts of the eigenvectors of an orthogonal matrix.
#[derive(Debug, Clone)]
pub struct RealEigenvectors {
    /// Real part of each unit-norm eigenvector. Conjugate pairs contribute one
    /// entry since their real parts coincide.
    pub real_parts: Vec<Vec<f64>>,
    /// Largest imaginary component over all normalized eigenvectors.
    pub max_imag: f64,
    /// Largest entry of `T` outside its diagonal blocks; measures how far the
    /// computed Schur form is from the block-diagonal normal form.
    pub off_block_residual: f64,
}

/// Treats conjugate pairs with `|Im λ|` below this as a repeated real eigenvalue.
const REAL_PAIR_TOLERANCE: f64 = 1e-12;

pub fn orthogonal_eigenvectors(q: &DMatrix<f64>) -> Result<RealEigenvectors> {
    let n = q.nrows();
    if n != q.ncols() || n == 0 {
        return Err(KashinError::shape(
            "nonempty square matrix",
            format!("{}x{}", q.nrows(), q.ncols()),
        ));
    }
    if is_symmetric(q) {
        // Real spectrum; the nonsymmetric QR sweep stalls on the highly
        // degenerate eigenvalue of a reflection.
        let eig = nalgebra::linalg::SymmetricEigen::new(q.clone());
        return Ok(RealEigenvectors {
            real_parts: eig
                .eigenvectors
                .column_iter()
                .map(|c| c.iter().copied().collect())
                .collect(),
            max_imag: 0.0,
            off_block_residual: 0.0,
        });
    }
    let schur = nalgebra::linalg::Schur::try_new(q.clone(), f64::EPSILON, 100 * n)
        .ok_or_else(|| KashinError::Numerical("real Schur iteration did not converge".into()))?;
    let (z, t) = schur.unpack();

    // Block boundaries from the subdiagonal.
    let mut blocks = Vec::with_capacity(n);
    let mut j = 0;
    while j < n {
        if j + 1 < n && t[(j + 1, j)] != 0.0 {
            blocks.push((j, 2));
            j += 2;
        } else {
            blocks.push((j, 1));
            j += 1;
        }
    }

    let mut off_block_residual = 0.0f64;
    for &(start, size) in &blocks {
        for c in start..start + size {
            for r in 0..start {
                off_block_residual = off_block_residual.max(t[(r, c)].abs());
            }
        }
    }

    let mut real_parts = Vec::with_capacity(n);
    let mut max_imag = 0.0f64;
    for &(start, size) in &blocks {
        if size == 1 {
            real_parts.push(z.column(start).iter().copied().collect());
            continue;
        }
        let (a, b, c, d) = (
            t[(start, start)],
            t[(start, start + 1)],
            t[(start + 1, start)],
            t[(start + 1, start + 1)],
        );
        let mean = 0.5 * (a + d);
        let disc = 0.25 * (a - d) * (a - d) + b * c;
        let z0 = z.column(start);
        let z1 = z.column(start + 1);

        if disc >= -REAL_PAIR_TOLERANCE * REAL_PAIR_TOLERANCE {
            // Two real eigenvalues inside an unsplit block.
            let root = disc.max(0.0).sqrt();
            for lambda in [mean + root, mean - root] {
                let (w0, w1) = real_null_vector(a - lambda, b, c, d - lambda);
                let mut v: Vec<f64> = z0.iter().zip(z1.iter()).map(|(p, q)| w0 * p + w1 * q).collect();
                let norm = v.iter().map(|e| e * e).sum::<f64>().sqrt();
                v.iter_mut().for_each(|e| *e /= norm);
                real_parts.push(v);
            }
            continue;
        }

        let lambda = Complex64::new(mean, (-disc).sqrt());
        // Null vector of B - λI from whichever row is better conditioned.
        let row0 = (Complex64::new(a, 0.0) - lambda).norm() + b.abs();
        let row1 = c.abs() + (Complex64::new(d, 0.0) - lambda).norm();
        let (w0, w1) = if row0 >= row1 {
            (Complex64::new(b, 0.0), lambda - a)
        } else {
            (lambda - d, Complex64::new(c, 0.0))
        };
        let mut y: Vec<Complex64> = z0
            .iter()
            .zip(z1.iter())
            .map(|(&p, &q)| w0 * p + w1 * q)
            .collect();
        let norm = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let pivot = y
            .iter()
            .copied()
            .fold(Complex64::new(0.0, 0.0), |best, v| {
                if v.norm_sqr() > best.norm_sqr() {
                    v
                } else {
                    best
                }
            });
        let phase = pivot.conj() / pivot.norm() / norm;
        for v in y.iter_mut() {
            *v *= phase;
            max_imag = max_imag.max(v.im.abs());
        }
        real_parts.push(y.iter().map(|v| v.re).collect());
    }

    Ok(RealEigenvectors {
        real_parts,
        max_imag,
        off_block_residual,
    })
}

fn is_symmetric(q: &DMatrix<f64>) -> bool {
    let n = q.nrows();
    (0..n).all(|i| (0..i).all(|j| (q[(i, j)] - q[(j, i)]).abs() <= 1e-14))
}

fn real_null_vector(a: f64, b: f64, c: f64, d: f64) -> (f64, f64) {
    let (w0, w1) = if a.abs() + b.abs() >= c.abs() + d.abs() {
        (b, -a)
    } else {
        (-d, c)
    };
    if w0 == 0.0 && w1 == 0.0 {
        (1.0, 0.0)
    } else {
        (w0, w1)
    }
}
