//! KDEN dense tensor container.
//!
//! ```text
//! "KDEN" | version u16 | dtype u8 | rank u8 | dims u32 × rank | payload | crc32
//! ```
//! The payload is row-major, `f64` (dtype 0) or `f32` (dtype 1), little-endian.
//! The CRC covers every preceding byte.

use std::path::Path;

use nalgebra::DMatrix;

use super::wire::{dim_u32, element_count, Reader, Writer};
use crate::error::{FormatError, KashinError, Result};

pub const KDEN_MAGIC: &[u8; 4] = b"KDEN";
pub const KDEN_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DType {
    F64,
    F32,
}

impl DType {
    pub fn code(self) -> u8 {
        match self {
            DType::F64 => 0,
            DType::F32 => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(DType::F64),
            1 => Some(DType::F32),
            _ => None,
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::F64 => 8,
            DType::F32 => 4,
        }
    }
}

/// A rank-1 or rank-2 tensor held in double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    /// Storage precision on disk.
    pub dtype: DType,
    pub dims: Vec<usize>,
    /// Row-major values.
    pub data: Vec<f64>,
}

impl DenseTensor {
    pub fn from_matrix(m: &DMatrix<f64>, dtype: DType) -> Self {
        Self {
            dtype,
            dims: vec![m.nrows(), m.ncols()],
            data: m.transpose().as_slice().to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        if self.dims.len() == 2 {
            self.dims[0]
        } else {
            1
        }
    }

    pub fn cols(&self) -> usize {
        *self.dims.last().unwrap_or(&0)
    }

    /// Matrix view; a rank-1 tensor becomes a single row.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows(), self.cols(), &self.data)
    }

    fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.dims.len()) {
            return Err(KashinError::InvalidArgument(format!(
                "rank must be 1 or 2, got {}",
                self.dims.len()
            )));
        }
        if self.dims.contains(&0) {
            return Err(KashinError::InvalidArgument("dimensions must be positive".into()));
        }
        let count = element_count(&self.dims)?;
        if count != self.data.len() {
            return Err(KashinError::shape(count, self.data.len()));
        }
        Ok(())
    }
}

pub fn dense_to_bytes(t: &DenseTensor) -> Result<Vec<u8>> {
    t.validate()?;
    let mut w = Writer::new(KDEN_MAGIC, KDEN_VERSION);
    w.u8(t.dtype.code());
    w.u8(t.dims.len() as u8);
    for &d in &t.dims {
        w.u32(dim_u32(d)?);
    }
    match t.dtype {
        DType::F64 => t.data.iter().for_each(|&v| w.f64(v)),
        DType::F32 => t.data.iter().for_each(|&v| w.f32(v as f32)),
    }
    Ok(w.finish())
}

pub fn dense_from_bytes(bytes: &[u8]) -> Result<DenseTensor, FormatError> {
    let mut r = Reader::open(bytes, KDEN_MAGIC, KDEN_VERSION)?;
    let code = r.u8()?;
    let dtype = DType::from_code(code)
        .ok_or_else(|| FormatError::Malformed(format!("unknown dtype code {code}")))?;
    let rank = r.u8()?;
    if !(1..=2).contains(&rank) {
        return Err(FormatError::Malformed(format!("rank {rank} is not 1 or 2")));
    }
    let mut dims = Vec::with_capacity(rank as usize);
    for _ in 0..rank {
        let d = r.u32()? as usize;
        if d == 0 {
            return Err(FormatError::Malformed("zero-length dimension".into()));
        }
        dims.push(d);
    }
    let count = element_count(&dims)?;
    let data = match dtype {
        DType::F64 => r.f64s(count)?,
        DType::F32 => r.f32s(count)?.into_iter().map(f64::from).collect(),
    };
    r.finish()?;
    Ok(DenseTensor { dtype, dims, data })
}

pub fn write_dense(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    write_dense_tensor(path, &DenseTensor::from_matrix(m, DType::F64))
}

pub fn write_dense_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    super::write_atomic(path.as_ref(), &dense_to_bytes(t)?)
}

pub fn read_dense(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    Ok(read_dense_tensor(path)?.to_matrix())
}

pub fn read_dense_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    Ok(dense_from_bytes(&std::fs::read(path)?)?)
}
