//! Read-only import of NPY files holding little-endian `f4`/`f8` arrays of
//! rank 1 or 2 in C order.

use std::path::Path;

use super::dense::{DType, DenseTensor};
use super::wire::{element_count, Reader};
use crate::error::{FormatError, Result};

pub const NPY_MAGIC: &[u8; 6] = b"\x93NUMPY";

pub fn npy_from_bytes(bytes: &[u8]) -> Result<DenseTensor, FormatError> {
    if bytes.len() < NPY_MAGIC.len() || &bytes[..NPY_MAGIC.len()] != NPY_MAGIC {
        return Err(FormatError::Malformed("missing NPY magic".into()));
    }
    let mut r = Reader::new(bytes);
    r.take(NPY_MAGIC.len())?;
    let major = r.u8()?;
    let _minor = r.u8()?;
    let header_len = match major {
        1 => r.u16()? as usize,
        2 | 3 => r.u32()? as usize,
        other => return Err(FormatError::UnsupportedVersion(other as u16)),
    };
    let header = std::str::from_utf8(r.take(header_len)?)
        .map_err(|_| FormatError::Malformed("NPY header is not text".into()))?;

    let descr = dict_value(header, "descr")?;
    let dtype = match descr.trim().trim_matches(|c| c == '\'' || c == '"') {
        "<f8" => DType::F64,
        "<f4" => DType::F32,
        other => {
            return Err(FormatError::Malformed(format!(
                "unsupported NPY dtype {other} (expected <f4 or <f8)"
            )))
        }
    };
    match dict_value(header, "fortran_order")?.trim() {
        "False" => {}
        "True" => return Err(FormatError::Malformed("Fortran-ordered NPY arrays are not supported".into())),
        other => return Err(FormatError::Malformed(format!("bad fortran_order {other}"))),
    }
    let shape = dict_value(header, "shape")?;
    let inner = shape
        .trim()
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| FormatError::Malformed(format!("bad shape {shape}")))?;
    let dims = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| FormatError::Malformed(format!("bad dimension {s}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if !(1..=2).contains(&dims.len()) || dims.contains(&0) {
        return Err(FormatError::Malformed(format!(
            "NPY shape {dims:?} is not a nonempty vector or matrix"
        )));
    }
    let count = element_count(&dims)?;
    let data = match dtype {
        DType::F64 => r.f64s(count)?,
        DType::F32 => r.f32s(count)?.into_iter().map(f64::from).collect(),
    };
    if r.remaining() > 0 {
        return Err(FormatError::TrailingBytes(r.remaining()));
    }
    Ok(DenseTensor { dtype, dims, data })
}

/// Raw text of `'key': value` in a Python dict literal. Values here are a
/// quoted string, a bare word, or a parenthesized tuple.
fn dict_value<'a>(header: &'a str, key: &str) -> Result<&'a str, FormatError> {
    let missing = || FormatError::Malformed(format!("NPY header lacks {key}"));
    let start = ["'", "\""]
        .iter()
        .find_map(|q| header.find(&format!("{q}{key}{q}")).map(|i| i + key.len() + 2))
        .ok_or_else(missing)?;
    let rest = header[start..].trim_start().strip_prefix(':').ok_or_else(missing)?.trim_start();
    let end = if rest.starts_with('(') {
        rest.find(')').map(|i| i + 1)
    } else if let Some(q) = rest.chars().next().filter(|c| *c == '\'' || *c == '"') {
        rest[1..].find(q).map(|i| i + 2)
    } else {
        rest.find([',', '}'])
    }
    .ok_or_else(missing)?;
    Ok(&rest[..end])
}

pub fn read_npy(path: impl AsRef<Path>) -> Result<DenseTensor> {
    Ok(npy_from_bytes(&std::fs::read(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn npy(descr: &str, shape: &str, payload: &[u8]) -> Vec<u8> {
        let mut header = format!("{{'descr': '{descr}', 'fortran_order': False, 'shape': {shape}, }}");
        while (10 + header.len() + 1) % 64 != 0 {
            header.push(' ');
        }
        header.push('\n');
        let mut out = NPY_MAGIC.to_vec();
        out.extend([1, 0]);
        out.extend((header.len() as u16).to_le_bytes());
        out.extend(header.as_bytes());
        out.extend(payload);
        out
    }

    #[test]
    fn reads_f8_matrix() {
        let payload: Vec<u8> = [1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0].iter().flat_map(|v| v.to_le_bytes()).collect();
        let t = npy_from_bytes(&npy("<f8", "(2, 3)", &payload)).unwrap();
        assert_eq!(t.dims, vec![2, 3]);
        let m = t.to_matrix();
        assert_eq!(m[(0, 2)], 3.0);
        assert_eq!(m[(1, 0)], 4.0);
    }

    #[test]
    fn reads_f4_vector() {
        let payload: Vec<u8> = [0.5f32, -1.25].iter().flat_map(|v| v.to_le_bytes()).collect();
        let t = npy_from_bytes(&npy("<f4", "(2,)", &payload)).unwrap();
        assert_eq!(t.dtype, DType::F32);
        assert_eq!(t.data, vec![0.5, -1.25]);
    }

    #[test]
    fn rejects_unsupported_arrays() {
        let payload = [0u8; 16];
        assert!(npy_from_bytes(&npy(">f8", "(2,)", &payload)).is_err());
        assert!(npy_from_bytes(&npy("<i8", "(2,)", &payload)).is_err());
        assert!(npy_from_bytes(&npy("<f8", "(1, 1, 2)", &payload)).is_err());
        assert!(matches!(
            npy_from_bytes(&npy("<f8", "(3,)", &payload)),
            Err(FormatError::Truncated { .. })
        ));
        let mut fortran = npy("<f8", "(2,)", &payload);
        let at = fortran.windows(5).position(|w| w == b"False").unwrap();
        fortran[at..at + 5].copy_from_slice(b"True ");
        assert!(npy_from_bytes(&fortran).is_err());
    }
}
