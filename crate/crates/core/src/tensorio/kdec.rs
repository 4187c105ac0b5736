//! KDEC decomposition container (`.kqd`).
//!
//! ```text
//! "KDEC" | version u16 | m u32 | n u32
//! has_transforms u8 | [descriptor Q₁ | descriptor Q₂]
//! scale f64 | tol f64
//! iterations u32 | converged u8 | poorly_converged u8
//! has_contraction u8 | contraction f64
//! residual_norms  f64 × (iterations + 1)
//! branch_choices  u8  × iterations
//! chosen_l1       f64 × iterations
//! U | V̂ | residual   each f64 × m·n, row-major
//! crc32
//! ```

use std::path::Path;

use nalgebra::DMatrix;

use super::kqtz::{read_descriptor, write_descriptor};
use super::wire::{dim_u32, overflow, Reader, Writer};
use crate::decomp::{Branch, ConvergenceReport, MatrixDecomposition};
use crate::error::{FormatError, Result};

pub const KDEC_MAGIC: &[u8; 4] = b"KDEC";
pub const KDEC_VERSION: u16 = 1;

fn write_matrix(w: &mut Writer, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            w.f64(m[(i, j)]);
        }
    }
}

fn read_matrix(r: &mut Reader<'_>, m: usize, n: usize) -> Result<DMatrix<f64>, FormatError> {
    let values = r.f64s(m.checked_mul(n).ok_or_else(overflow)?)?;
    Ok(DMatrix::from_row_slice(m, n, &values))
}

pub fn kdec_to_bytes(d: &MatrixDecomposition) -> Result<Vec<u8>> {
    let (m, n) = d.shape();
    let report = &d.report;
    let mut w = Writer::new(KDEC_MAGIC, KDEC_VERSION);
    w.u32(dim_u32(m)?);
    w.u32(dim_u32(n)?);
    match &d.transforms {
        Some((a, b)) => {
            w.u8(1);
            write_descriptor(&mut w, a)?;
            write_descriptor(&mut w, b)?;
        }
        None => w.u8(0),
    }
    w.f64(d.scale);
    w.f64(d.tol);
    w.u32(dim_u32(report.iterations)?);
    w.u8(report.converged as u8);
    w.u8(report.poorly_converged as u8);
    w.u8(report.contraction_estimate.is_some() as u8);
    w.f64(report.contraction_estimate.unwrap_or(0.0));
    report.residual_norms.iter().for_each(|&v| w.f64(v));
    report.branch_choices.iter().for_each(|b| w.u8(b.code()));
    report.chosen_l1.iter().for_each(|&v| w.f64(v));
    write_matrix(&mut w, &d.u);
    write_matrix(&mut w, &d.v_hat);
    write_matrix(&mut w, &d.residual);
    Ok(w.finish())
}

pub fn kdec_from_bytes(bytes: &[u8]) -> Result<MatrixDecomposition, FormatError> {
    let mut r = Reader::open(bytes, KDEC_MAGIC, KDEC_VERSION)?;
    let m = r.u32()? as usize;
    let n = r.u32()? as usize;
    let transforms = if r.bool()? {
        let a = read_descriptor(&mut r)?;
        let b = read_descriptor(&mut r)?;
        if a.dim != m || b.dim != n {
            return Err(FormatError::Malformed(format!(
                "transforms of size {}x{} do not fit a {m}x{n} tensor",
                a.dim, b.dim
            )));
        }
        Some((a, b))
    } else {
        None
    };
    let scale = r.f64()?;
    let tol = r.f64()?;
    let iterations = r.u32()? as usize;
    let converged = r.bool()?;
    let poorly_converged = r.bool()?;
    let has_contraction = r.bool()?;
    let contraction = r.f64()?;
    let residual_norms = r.f64s(iterations.checked_add(1).ok_or_else(overflow)?)?;
    let branch_choices = r
        .take(iterations)?
        .iter()
        .map(|&c| {
            Branch::from_code(c).ok_or_else(|| FormatError::Malformed(format!("unknown branch code {c}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let chosen_l1 = r.f64s(iterations)?;
    let u = read_matrix(&mut r, m, n)?;
    let v_hat = read_matrix(&mut r, m, n)?;
    let residual = read_matrix(&mut r, m, n)?;
    r.finish()?;
    Ok(MatrixDecomposition {
        u,
        v_hat,
        residual,
        scale,
        report: ConvergenceReport {
            residual_norms,
            branch_choices,
            chosen_l1,
            iterations,
            converged,
            poorly_converged,
            contraction_estimate: has_contraction.then_some(contraction),
        },
        transforms,
        tol,
    })
}

pub fn write_kdec(path: impl AsRef<Path>, d: &MatrixDecomposition) -> Result<()> {
    super::write_atomic(path.as_ref(), &kdec_to_bytes(d)?)
}

pub fn read_kdec(path: impl AsRef<Path>) -> Result<MatrixDecomposition> {
    Ok(kdec_from_bytes(&std::fs::read(path)?)?)
}
