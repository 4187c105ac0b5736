//! Binary containers: KDEN dense tensors, KDEC decompositions, KQTZ
//! quantized artifacts, and read-only NPY import. All integers and floats
//! are little-endian. Layouts are documented in `docs/FORMATS.md`.

mod dense;
mod kdec;
mod kqtz;
mod npy;
mod wire;

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

pub use dense::{
    dense_from_bytes, dense_to_bytes, read_dense, read_dense_tensor, write_dense, write_dense_tensor, DType,
    DenseTensor, KDEN_MAGIC, KDEN_VERSION,
};
pub use kdec::{kdec_from_bytes, kdec_to_bytes, read_kdec, write_kdec, KDEC_MAGIC, KDEC_VERSION};
pub use kqtz::{kqtz_from_bytes, kqtz_to_bytes, read_kqtz, write_kqtz, KQTZ_MAGIC, KQTZ_VERSION};
pub use npy::{npy_from_bytes, read_npy, NPY_MAGIC};

use crate::error::{FormatError, Result};

/// Writes `bytes` to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Parses a KDEN or NPY tensor, chosen by its leading magic.
pub fn tensor_from_bytes(bytes: &[u8]) -> Result<DenseTensor, FormatError> {
    if bytes.starts_with(NPY_MAGIC) {
        npy_from_bytes(bytes)
    } else {
        dense_from_bytes(bytes)
    }
}

/// Reads a KDEN or NPY file as a matrix; rank-1 tensors become one row.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let bytes = std::fs::read(path)?;
    Ok(tensor_from_bytes(&bytes)?.to_matrix())
}
