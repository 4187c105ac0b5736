//! Greedy Kashin decomposition.
//!
//! A unit vector `x` is split as `x ≈ u + Qv` by repeatedly projecting the
//! residual onto whichever of `sign(x_k)` or `Q·sign(Qᵀx_k)` carries the larger
//! ℓ₁ mass. Both candidates have squared norm `n`, so a step removes
//! `max(‖x_k‖₁, ‖Qᵀx_k‖₁)² / n` from the squared residual.

mod matrix;
mod report;

pub use matrix::{kashin_matrix, reconstruct_matrix, MatrixDecomposition};
pub use report::{Branch, ConvergenceReport};

use serde::{Deserialize, Serialize};

use crate::error::{KashinError, Result};
use crate::ortho::OrthogonalOperator;

/// Relative residual above which a run that exhausts its budget is flagged as
/// poorly converged (and should not be quantized with Kashin factors).
pub const POOR_CONVERGENCE_THRESHOLD: f64 = 1e-2;

/// Branch ℓ₁ norms within this relative gap count as tied; ties take the
/// identity basis, so the choice does not depend on summation order.
pub const BRANCH_TIE_RTOL: f64 = 1e-12;

pub(crate) fn prefer_identity(l1_identity: f64, l1_rotated: f64) -> bool {
    l1_identity >= l1_rotated * (1.0 - BRANCH_TIE_RTOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KashinConfig {
    /// Residual target relative to the input norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for KashinConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 1000,
        }
    }
}

impl KashinConfig {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self { tol, max_iter }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(KashinError::InvalidArgument(format!(
                "tolerance must be positive and finite, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(KashinError::InvalidArgument(
                "max_iter must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Entrywise sign with `sign(0) = +1`, so the result always has squared norm `len`.
pub fn sign_vector(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| sign(v)).collect()
}

#[inline]
pub(crate) fn sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Orthogonal projection of `x` onto the line spanned by `y`.
pub fn project(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(KashinError::shape(x.len(), y.len()));
    }
    let coef = projection_coefficient(x, y)?;
    Ok(y.iter().map(|v| coef * v).collect())
}

pub(crate) fn projection_coefficient(x: &[f64], y: &[f64]) -> Result<f64> {
    let yy: f64 = y.iter().map(|v| v * v).sum();
    if yy == 0.0 {
        return Err(KashinError::InvalidArgument(
            "cannot project onto the zero vector".into(),
        ));
    }
    let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok(xy / yy)
}

pub(crate) fn l1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub(crate) fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Output of [`kashin_vector`]. The factors live in the unit-normalized
/// domain; multiply by `scale` to return to input units.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorDecomposition {
    pub u: Vec<f64>,
    /// `Qv`, the rotated factor in original coordinates.
    pub v_hat: Vec<f64>,
    pub residual: Vec<f64>,
    pub scale: f64,
    pub report: ConvergenceReport,
}

impl VectorDecomposition {
    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// Rotated-basis coefficients `v = Qᵀv̂` (unit-normalized).
    pub fn v(&self, q: &OrthogonalOperator) -> Result<Vec<f64>> {
        q.apply_adjoint(&self.v_hat)
    }
}

/// Greedy vector decomposition `x ≈ u + Qv`.
pub fn kashin_vector(
    x: &[f64],
    q: &OrthogonalOperator,
    config: &KashinConfig,
) -> Result<VectorDecomposition> {
    config.validate()?;
    let n = q.dim();
    if x.len() != n {
        return Err(KashinError::shape(
            format!("vector of length {n}"),
            format!("length {}", x.len()),
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(KashinError::InvalidInput(
            "input has non-finite entries".into(),
        ));
    }

    let scale = l2(x);
    if scale == 0.0 {
        return Ok(VectorDecomposition {
            u: vec![0.0; n],
            v_hat: vec![0.0; n],
            residual: vec![0.0; n],
            scale: 0.0,
            report: ConvergenceReport::empty(),
        });
    }

    let mut residual: Vec<f64> = x.iter().map(|v| v / scale).collect();
    #[cfg(debug_assertions)]
    let start = residual.clone();
    let mut u = vec![0.0; n];
    let mut v_hat = vec![0.0; n];

    let mut report = ConvergenceReport::empty();
    report.residual_norms[0] = l2(&residual);

    while report.final_residual() > config.tol && report.branch_choices.len() < config.max_iter {
        let rotated = q.apply_adjoint(&residual)?;
        let l1_identity = l1(&residual);
        let l1_rotated = l1(&rotated);

        let (branch, direction) = if prefer_identity(l1_identity, l1_rotated) {
            (Branch::IdentityBasis, sign_vector(&residual))
        } else {
            (Branch::RotatedBasis, q.apply(&sign_vector(&rotated))?)
        };
        let coef = projection_coefficient(&residual, &direction)?;
        let target = match branch {
            Branch::IdentityBasis => &mut u,
            Branch::RotatedBasis => &mut v_hat,
        };
        for ((t, r), d) in target.iter_mut().zip(residual.iter_mut()).zip(&direction) {
            let step = coef * d;
            *t += step;
            *r -= step;
        }

        report.branch_choices.push(branch);
        report.chosen_l1.push(match branch {
            Branch::IdentityBasis => l1_identity,
            Branch::RotatedBasis => l1_rotated,
        });
        report.residual_norms.push(l2(&residual));

        #[cfg(debug_assertions)]
        {
            let direct: f64 = start
                .iter()
                .zip(&u)
                .zip(&v_hat)
                .map(|((s, a), b)| (s - a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            debug_assert!(
                (direct - report.final_residual()).abs() <= 1e-9,
                "tracked residual {} drifted from ‖x - u - v̂‖ = {direct}",
                report.final_residual()
            );
        }
    }
    report.finish(config.tol, POOR_CONVERGENCE_THRESHOLD);

    Ok(VectorDecomposition {
        u,
        v_hat,
        residual,
        scale,
        report,
    })
}

/// `scale·(u + v̂)`, plus `scale·residual` when `include_residual` (exact recovery).
pub fn reconstruct_vector(
    d: &VectorDecomposition,
    q: &OrthogonalOperator,
    include_residual: bool,
) -> Result<Vec<f64>> {
    if q.dim() != d.dim() {
        return Err(KashinError::shape(
            format!("operator of dimension {}", d.dim()),
            format!("dimension {}", q.dim()),
        ));
    }
    Ok((0..d.dim())
        .map(|i| {
            let mut v = d.u[i] + d.v_hat[i];
            if include_residual {
                v += d.residual[i];
            }
            d.scale * v
        })
        .collect())
}
