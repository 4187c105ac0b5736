use nalgebra::DMatrix;

use super::report::{Branch, ConvergenceReport};
use super::{prefer_identity, sign, KashinConfig, POOR_CONVERGENCE_THRESHOLD};
use crate::error::{KashinError, Result};
use crate::ortho::{OrthogonalOperator, TransformDescriptor};

/// Output of [`kashin_matrix`]: `X ≈ scale·(U + V̂)` with `V̂ = Q₁VQ₂ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixDecomposition {
    pub u: DMatrix<f64>,
    pub v_hat: DMatrix<f64>,
    pub residual: DMatrix<f64>,
    /// Frobenius norm of the input.
    pub scale: f64,
    pub report: ConvergenceReport,
    /// Descriptors of `(Q₁, Q₂)` used to build `V̂`.
    pub transforms: Option<(TransformDescriptor, TransformDescriptor)>,
    pub tol: f64,
}

impl MatrixDecomposition {
    pub fn shape(&self) -> (usize, usize) {
        self.u.shape()
    }

    /// `V = Q₁ᵀV̂Q₂` (unit-normalized).
    pub fn v(&self, q1: &OrthogonalOperator, q2: &OrthogonalOperator) -> Result<DMatrix<f64>> {
        q2.apply_rows(&q1.apply_columns(&self.v_hat, true)?, true)
    }

    /// Rebuilds `(Q₁, Q₂)` from the stored descriptors.
    pub fn operators(&self) -> Result<(OrthogonalOperator, OrthogonalOperator)> {
        let (d1, d2) = self.transforms.as_ref().ok_or_else(|| {
            KashinError::InvalidInput("decomposition carries no transform descriptors".into())
        })?;
        Ok((
            OrthogonalOperator::from_descriptor(d1)?,
            OrthogonalOperator::from_descriptor(d2)?,
        ))
    }
}

fn frobenius_l1(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v.abs()).sum()
}

fn sign_matrix(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.map(sign)
}

fn check_operators(
    shape: (usize, usize),
    q1: &OrthogonalOperator,
    q2: &OrthogonalOperator,
) -> Result<()> {
    if q1.dim() != shape.0 || q2.dim() != shape.1 {
        return Err(KashinError::shape(
            format!("operators of dimensions ({}, {})", shape.0, shape.1),
            format!("({}, {})", q1.dim(), q2.dim()),
        ));
    }
    Ok(())
}

/// Greedy matrix decomposition `X ≈ U + Q₁VQ₂ᵀ`.
///
/// Equivalent to the vector algorithm on `vec(X)` with the Kronecker operator
/// whose adjoint is `Q₂ᵀ ⊗ Q₁ᵀ`, but never forms it: `Q₁ᵀXQ₂` and `Q₁SQ₂ᵀ` are
/// evaluated by applying each operator along columns and rows.
pub fn kashin_matrix(
    x: &DMatrix<f64>,
    q1: &OrthogonalOperator,
    q2: &OrthogonalOperator,
    config: &KashinConfig,
) -> Result<MatrixDecomposition> {
    config.validate()?;
    check_operators(x.shape(), q1, q2)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(KashinError::InvalidInput(
            "input matrix has non-finite entries".into(),
        ));
    }
    let (m, n) = x.shape();
    let transforms = Some((q1.descriptor(), q2.descriptor()));

    let scale = x.norm();
    if scale == 0.0 {
        return Ok(MatrixDecomposition {
            u: DMatrix::zeros(m, n),
            v_hat: DMatrix::zeros(m, n),
            residual: DMatrix::zeros(m, n),
            scale: 0.0,
            report: ConvergenceReport::empty(),
            transforms,
            tol: config.tol,
        });
    }

    let mut residual = x / scale;
    let mut u = DMatrix::<f64>::zeros(m, n);
    let mut v_hat = DMatrix::<f64>::zeros(m, n);
    let mut report = ConvergenceReport::empty();
    report.residual_norms[0] = residual.norm();

    while report.final_residual() > config.tol && report.branch_choices.len() < config.max_iter {
        let y = q2.apply_rows(&q1.apply_columns(&residual, true)?, true)?;
        let l1_identity = frobenius_l1(&residual);
        let l1_rotated = frobenius_l1(&y);

        let (branch, direction) = if prefer_identity(l1_identity, l1_rotated) {
            (Branch::IdentityBasis, sign_matrix(&residual))
        } else {
            let s = sign_matrix(&y);
            (
                Branch::RotatedBasis,
                q2.apply_rows(&q1.apply_columns(&s, false)?, false)?,
            )
        };
        let coef = super::projection_coefficient(residual.as_slice(), direction.as_slice())?;
        let target = match branch {
            Branch::IdentityBasis => &mut u,
            Branch::RotatedBasis => &mut v_hat,
        };
        for ((t, r), d) in target
            .iter_mut()
            .zip(residual.iter_mut())
            .zip(direction.iter())
        {
            let step = coef * d;
            *t += step;
            *r -= step;
        }

        report.branch_choices.push(branch);
        report.chosen_l1.push(match branch {
            Branch::IdentityBasis => l1_identity,
            Branch::RotatedBasis => l1_rotated,
        });
        report.residual_norms.push(residual.norm());
    }
    report.finish(config.tol, POOR_CONVERGENCE_THRESHOLD);

    Ok(MatrixDecomposition {
        u,
        v_hat,
        residual,
        scale,
        report,
        transforms,
        tol: config.tol,
    })
}

/// `scale·(U + V̂)`, plus `scale·residual` when `include_residual`.
pub fn reconstruct_matrix(
    d: &MatrixDecomposition,
    q1: &OrthogonalOperator,
    q2: &OrthogonalOperator,
    include_residual: bool,
) -> Result<DMatrix<f64>> {
    check_operators(d.shape(), q1, q2)?;
    let mut out = &d.u + &d.v_hat;
    if include_residual {
        out += &d.residual;
    }
    Ok(out * d.scale)
}
