//! Structured orthogonal operators.
//!
//! An [`OrthogonalOperator`] is one of four families (Haar-random dense,
//! Householder reflection, orthonormal DCT-II, randomized butterfly) behind a
//! uniform apply / adjoint-apply interface. Operators are immutable once built
//! and can be regenerated from a compact [`TransformDescriptor`].

mod butterfly;
mod dct;
mod dense;
mod householder;
mod tally;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use butterfly::{BlockParam, ButterflyFactorSet};
pub use dct::Dct;
pub use dense::{haar_orthogonal, orthogonality_defect};
pub use householder::Householder;
pub use tally::{OpCounter, OpTally};

use crate::error::{FormatError, KashinError, Result};

/// Largest dimension [`OrthogonalOperator::to_dense`] materializes by default.
pub const DEFAULT_DENSE_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TransformKind {
    RandomDense,
    Householder,
    Dct,
    Butterfly,
}

impl TransformKind {
    pub const ALL: [TransformKind; 4] = [
        TransformKind::RandomDense,
        TransformKind::Householder,
        TransformKind::Dct,
        TransformKind::Butterfly,
    ];

    pub fn code(self) -> u8 {
        match self {
            TransformKind::RandomDense => 0,
            TransformKind::Householder => 1,
            TransformKind::Dct => 2,
            TransformKind::Butterfly => 3,
        }
    }

    pub fn from_code(code: u8) -> Result<Self, FormatError> {
        match code {
            0 => Ok(TransformKind::RandomDense),
            1 => Ok(TransformKind::Householder),
            2 => Ok(TransformKind::Dct),
            3 => Ok(TransformKind::Butterfly),
            other => Err(FormatError::UnknownTransformKind(other)),
        }
    }

    /// Short name used on the command line and in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            TransformKind::RandomDense => "qr",
            TransformKind::Householder => "householder",
            TransformKind::Dct => "dct",
            TransformKind::Butterfly => "butterfly",
        }
    }

    /// Label used in table output.
    pub fn label(self) -> &'static str {
        match self {
            TransformKind::RandomDense => "Random",
            TransformKind::Householder => "Householder",
            TransformKind::Dct => "DCT",
            TransformKind::Butterfly => "Butterfly",
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransformKind {
    type Err = KashinError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qr" | "random" | "random-dense" | "dense" => Ok(TransformKind::RandomDense),
            "householder" => Ok(TransformKind::Householder),
            "dct" | "dct2" => Ok(TransformKind::Dct),
            "butterfly" => Ok(TransformKind::Butterfly),
            other => Err(KashinError::InvalidArgument(format!(
                "unknown transform {other:?} (expected qr, dct, butterfly or householder)"
            ))),
        }
    }
}

/// Everything needed to rebuild an operator without storing it densely.
///
/// `params` is empty whenever the operator can be regenerated from `seed`.
/// Otherwise it carries the butterfly block parameters, the Householder
/// vector, or (for caller-supplied dense matrices) the column-major payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformDescriptor {
    pub kind: TransformKind,
    pub dim: usize,
    pub seed: u64,
    pub params: Vec<u8>,
}

impl TransformDescriptor {
    pub fn seeded(kind: TransformKind, dim: usize, seed: u64) -> Self {
        Self {
            kind,
            dim,
            seed,
            params: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Payload {
    Dense(DMatrix<f64>),
    Householder(Householder),
    Dct(Dct),
    Butterfly(ButterflyFactorSet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalOperator {
    payload: Payload,
    seed: Option<u64>,
}

fn f64s_to_bytes(values: impl IntoIterator<Item = f64>) -> Vec<u8> {
    values.into_iter().flat_map(f64::to_le_bytes).collect()
}

fn bytes_to_f64s(blob: &[u8], expected: usize) -> Result<Vec<f64>> {
    if blob.len() != expected * 8 {
        return Err(FormatError::Malformed(format!(
            "parameter blob has {} bytes, expected {}",
            blob.len(),
            expected * 8
        ))
        .into());
    }
    Ok(blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

impl OrthogonalOperator {
    /// Haar-random dense orthogonal matrix, refused above [`DEFAULT_DENSE_CAP`].
    pub fn random_dense(n: usize, seed: u64) -> Result<Self> {
        if n > DEFAULT_DENSE_CAP {
            return Err(KashinError::ResourceLimit {
                dim: n,
                cap: DEFAULT_DENSE_CAP,
            });
        }
        Ok(Self {
            payload: Payload::Dense(haar_orthogonal(n, seed)?),
            seed: Some(seed),
        })
    }

    /// Householder reflection `I - 2yyᵀ`; `y` is normalized internally.
    pub fn householder(y: &[f64]) -> Result<Self> {
        Ok(Self {
            payload: Payload::Householder(Householder::new(y)?),
            seed: None,
        })
    }

    /// Householder reflection across a random hyperplane.
    pub fn householder_random(n: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            payload: Payload::Householder(Householder::random(n, seed)?),
            seed: Some(seed),
        })
    }

    pub fn dct(n: usize) -> Result<Self> {
        Ok(Self {
            payload: Payload::Dct(Dct::new(n)?),
            seed: None,
        })
    }

    pub fn butterfly(n: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            payload: Payload::Butterfly(ButterflyFactorSet::random(n, seed)?),
            seed: Some(seed),
        })
    }

    pub fn from_butterfly_factors(factors: ButterflyFactorSet) -> Self {
        Self {
            payload: Payload::Butterfly(factors),
            seed: None,
        }
    }

    /// Wraps a caller-supplied orthogonal matrix as a dense operator.
    pub fn from_dense(q: DMatrix<f64>) -> Result<Self> {
        dense::validate_orthogonal(&q)?;
        Ok(Self {
            payload: Payload::Dense(q),
            seed: None,
        })
    }

    /// Wraps a matrix that is orthogonal by construction, skipping validation.
    pub(crate) fn from_dense_trusted(q: DMatrix<f64>) -> Self {
        Self {
            payload: Payload::Dense(q),
            seed: None,
        }
    }

    /// Builds an operator of the requested family. DCT ignores the seed.
    pub fn generate(kind: TransformKind, n: usize, seed: u64) -> Result<Self> {
        match kind {
            TransformKind::RandomDense => Self::random_dense(n, seed),
            TransformKind::Householder => Self::householder_random(n, seed),
            TransformKind::Dct => Self::dct(n),
            TransformKind::Butterfly => Self::butterfly(n, seed),
        }
    }

    pub fn kind(&self) -> TransformKind {
        match self.payload {
            Payload::Dense(_) => TransformKind::RandomDense,
            Payload::Householder(_) => TransformKind::Householder,
            Payload::Dct(_) => TransformKind::Dct,
            Payload::Butterfly(_) => TransformKind::Butterfly,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.payload {
            Payload::Dense(q) => q.nrows(),
            Payload::Householder(h) => h.dim(),
            Payload::Dct(d) => d.dim(),
            Payload::Butterfly(b) => b.dim(),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn dense_payload(&self) -> Option<&DMatrix<f64>> {
        match &self.payload {
            Payload::Dense(q) => Some(q),
            _ => None,
        }
    }

    pub fn butterfly_factors(&self) -> Option<&ButterflyFactorSet> {
        match &self.payload {
            Payload::Butterfly(b) => Some(b),
            _ => None,
        }
    }

    pub fn householder_vector(&self) -> Option<&[f64]> {
        match &self.payload {
            Payload::Householder(h) => Some(h.vector()),
            _ => None,
        }
    }

    pub fn descriptor(&self) -> TransformDescriptor {
        let dim = self.dim();
        let kind = self.kind();
        match (&self.payload, self.seed) {
            (Payload::Dct(_), _) => TransformDescriptor::seeded(kind, dim, 0),
            (Payload::Dense(_), Some(seed)) => TransformDescriptor::seeded(kind, dim, seed),
            (Payload::Dense(q), None) => TransformDescriptor {
                kind,
                dim,
                seed: 0,
                params: f64s_to_bytes(q.iter().copied()),
            },
            (Payload::Householder(h), seed) => TransformDescriptor {
                kind,
                dim,
                seed: seed.unwrap_or(0),
                params: f64s_to_bytes(h.vector().iter().copied()),
            },
            (Payload::Butterfly(b), seed) => TransformDescriptor {
                kind,
                dim,
                seed: seed.unwrap_or(0),
                params: b.to_blob(),
            },
        }
    }

    /// Rebuilds the operator a descriptor refers to.
    pub fn from_descriptor(desc: &TransformDescriptor) -> Result<Self> {
        let n = desc.dim;
        if n == 0 {
            return Err(KashinError::InvalidDimension(0));
        }
        match desc.kind {
            TransformKind::Dct => Self::dct(n),
            TransformKind::RandomDense if desc.params.is_empty() => {
                Self::random_dense(n, desc.seed)
            }
            TransformKind::RandomDense => {
                let expected = n.checked_mul(n).ok_or_else(|| {
                    FormatError::Malformed(format!("dense operator dimension {n} overflows"))
                })?;
                let values = bytes_to_f64s(&desc.params, expected)?;
                Self::from_dense(DMatrix::from_vec(n, n, values))
            }
            TransformKind::Householder if desc.params.is_empty() => {
                Self::householder_random(n, desc.seed)
            }
            TransformKind::Householder => {
                let y = bytes_to_f64s(&desc.params, n)?;
                let mut op = Self::householder(&y)?;
                op.seed = Some(desc.seed);
                Ok(op)
            }
            TransformKind::Butterfly if desc.params.is_empty() => Self::butterfly(n, desc.seed),
            TransformKind::Butterfly => Ok(Self {
                payload: Payload::Butterfly(ButterflyFactorSet::from_blob(n, &desc.params)?),
                seed: Some(desc.seed),
            }),
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(KashinError::shape(
                format!("vector of length {}", self.dim()),
                format!("length {len}"),
            ));
        }
        Ok(())
    }

    /// `x ← Qx` (or `Qᵀx` when `adjoint`), reporting work to `counter`.
    pub fn apply_counted<C: OpCounter>(
        &self,
        x: &mut [f64],
        adjoint: bool,
        counter: &mut C,
    ) -> Result<()> {
        self.check_len(x.len())?;
        match &self.payload {
            Payload::Dense(q) => {
                let n = q.nrows();
                counter.scratch(n);
                let input = x.to_vec();
                if adjoint {
                    for (j, out) in x.iter_mut().enumerate() {
                        *out = q.column(j).dot(&nalgebra::DVectorView::from_slice(&input, n));
                    }
                } else {
                    x.fill(0.0);
                    for (j, &v) in input.iter().enumerate() {
                        for (out, qij) in x.iter_mut().zip(q.column(j).iter()) {
                            *out += qij * v;
                        }
                    }
                }
                counter.mul_adds((n * n) as u64);
            }
            Payload::Householder(h) => h.reflect_in_place(x, counter),
            Payload::Dct(d) => {
                if adjoint {
                    d.forward_in_place(x, counter)
                } else {
                    d.inverse_in_place(x, counter)
                }
            }
            Payload::Butterfly(b) => {
                if adjoint {
                    b.apply_adjoint_in_place(x, counter)
                } else {
                    b.apply_in_place(x, counter)
                }
            }
        }
        Ok(())
    }

    /// Returns `Qx`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = x.to_vec();
        self.apply_counted(&mut out, false, &mut ())?;
        Ok(out)
    }

    /// Returns `Qᵀx`.
    pub fn apply_adjoint(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = x.to_vec();
        self.apply_counted(&mut out, true, &mut ())?;
        Ok(out)
    }

    /// `Q·M` (or `Qᵀ·M`), applying the operator to every column of `m`.
    pub fn apply_columns(&self, m: &DMatrix<f64>, adjoint: bool) -> Result<DMatrix<f64>> {
        if m.nrows() != self.dim() {
            return Err(KashinError::shape(
                format!("{} rows", self.dim()),
                format!("{} rows", m.nrows()),
            ));
        }
        if let Payload::Dense(q) = &self.payload {
            return Ok(if adjoint { q.tr_mul(m) } else { q * m });
        }
        let mut out = m.clone();
        let rows = m.nrows();
        if rows > 0 {
            for col in out.as_mut_slice().chunks_exact_mut(rows) {
                self.apply_counted(col, adjoint, &mut ())?;
            }
        }
        Ok(out)
    }

    /// Applies the operator to every row of `m`: returns `M·Qᵀ`, or `M·Q` when
    /// `adjoint` (each row `r` becomes `Qᵀr`).
    pub fn apply_rows(&self, m: &DMatrix<f64>, adjoint: bool) -> Result<DMatrix<f64>> {
        if m.ncols() != self.dim() {
            return Err(KashinError::shape(
                format!("{} columns", self.dim()),
                format!("{} columns", m.ncols()),
            ));
        }
        if let Payload::Dense(q) = &self.payload {
            return Ok(if adjoint { m * q } else { m * q.transpose() });
        }
        let mut out = m.clone();
        let mut row = vec![0.0; m.ncols()];
        for i in 0..m.nrows() {
            for (j, r) in row.iter_mut().enumerate() {
                *r = out[(i, j)];
            }
            self.apply_counted(&mut row, adjoint, &mut ())?;
            for (j, r) in row.iter().enumerate() {
                out[(i, j)] = *r;
            }
        }
        Ok(out)
    }

    /// Dense materialization, refused above [`DEFAULT_DENSE_CAP`].
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        self.to_dense_with_cap(DEFAULT_DENSE_CAP)
    }

    pub fn to_dense_with_cap(&self, cap: usize) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if n > cap {
            return Err(KashinError::ResourceLimit { dim: n, cap });
        }
        Ok(match &self.payload {
            Payload::Dense(q) => q.clone(),
            Payload::Dct(d) => DMatrix::from_fn(n, n, |i, j| d.entry(i, j)),
            Payload::Householder(h) => {
                let y = h.vector();
                DMatrix::from_fn(n, n, |i, j| {
                    let id = if i == j { 1.0 } else { 0.0 };
                    id - 2.0 * y[i] * y[j]
                })
            }
            Payload::Butterfly(_) => {
                let mut m = DMatrix::<f64>::identity(n, n);
                for col in m.as_mut_slice().chunks_exact_mut(n) {
                    self.apply_counted(col, false, &mut ())?;
                }
                m
            }
        })
    }
}
