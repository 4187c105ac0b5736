//! KQTZ quantized-tensor artifact.
//!
//! ```text
//! "KQTZ" | version u16 | m u32 | n u32
//! descriptor Q₁ | descriptor Q₂
//! scale f32 | mode u8 | bits u8
//! count u16 | count × f32 centroids
//! len u32 | codes_u          (joint codes in mode 1)
//! len u32 | codes_v          (mode 0 only)
//! converged u8
//! poorly_converged u8 | tol f64 | iterations u32 | source_crc u32 | payload_crc u32
//! fit inertia f64 | fit iterations u32 | fit seed u64 | fit degenerate u8
//! crc32
//!
//! descriptor = kind u8 | dim u32 | seed u64 | len u32 | params
//! ```
//! Centroids are stored as the sorted `U` list then the sorted `V` list
//! (mode 0), or as interleaved `(u, v)` pairs (mode 1).

use std::path::Path;

use super::wire::{dim_u32, Reader, Writer};
use crate::error::{FormatError, Result};
use crate::ortho::{TransformDescriptor, TransformKind};
use crate::quantize::packing::packed_len;
use crate::quantize::{Centroids, Codebook, CodebookMode, FitStats, QuantMeta, QuantizedTensor};

pub const KQTZ_MAGIC: &[u8; 4] = b"KQTZ";
pub const KQTZ_VERSION: u16 = 1;

pub(crate) fn write_descriptor(w: &mut Writer, d: &TransformDescriptor) -> Result<()> {
    w.u8(d.kind.code());
    w.u32(dim_u32(d.dim)?);
    w.u64(d.seed);
    w.u32(dim_u32(d.params.len())?);
    w.bytes(&d.params);
    Ok(())
}

pub(crate) fn read_descriptor(r: &mut Reader<'_>) -> Result<TransformDescriptor, FormatError> {
    let kind = TransformKind::from_code(r.u8()?)?;
    let dim = r.u32()? as usize;
    let seed = r.u64()?;
    let len = r.u32()? as usize;
    let params = r.take(len)?.to_vec();
    Ok(TransformDescriptor {
        kind,
        dim,
        seed,
        params,
    })
}

pub fn kqtz_to_bytes(q: &QuantizedTensor) -> Result<Vec<u8>> {
    // Validates stream layout and the payload checksum.
    q.codes()?;
    let (m, n) = q.shape;
    let mut w = Writer::new(KQTZ_MAGIC, KQTZ_VERSION);
    w.u32(dim_u32(m)?);
    w.u32(dim_u32(n)?);
    write_descriptor(&mut w, &q.q1)?;
    write_descriptor(&mut w, &q.q2)?;
    w.f32(q.scale);
    w.u8(q.mode().code());
    w.u8(q.codebook.bits);
    let values: Vec<f32> = match &q.codebook.centroids {
        Centroids::PerFactor { u, v } => u.iter().chain(v).copied().collect(),
        Centroids::Joint2D(pairs) => pairs.iter().flatten().copied().collect(),
    };
    w.u16(values.len() as u16);
    values.iter().for_each(|&c| w.f32(c));
    for stream in std::iter::once(&q.codes_u).chain(q.codes_v.as_ref()) {
        w.u32(dim_u32(stream.len())?);
        w.bytes(stream);
    }
    let meta = &q.meta;
    w.u8(meta.converged as u8);
    w.u8(meta.poorly_converged as u8);
    w.f64(meta.tol);
    w.u32(meta.iterations);
    w.u32(meta.source_crc);
    w.u32(q.payload_crc);
    let fit = &q.codebook.fit_stats;
    w.f64(fit.inertia);
    w.u32(fit.iterations.min(u32::MAX as usize) as u32);
    w.u64(fit.seed);
    w.u8(fit.degenerate as u8);
    Ok(w.finish())
}

pub fn kqtz_from_bytes(bytes: &[u8]) -> Result<QuantizedTensor, FormatError> {
    let mut r = Reader::open(bytes, KQTZ_MAGIC, KQTZ_VERSION)?;
    let m = r.u32()? as usize;
    let n = r.u32()? as usize;
    if m == 0 || n == 0 {
        return Err(FormatError::Malformed(format!("empty shape {m}x{n}")));
    }
    let q1 = read_descriptor(&mut r)?;
    let q2 = read_descriptor(&mut r)?;
    if q1.dim != m || q2.dim != n {
        return Err(FormatError::Malformed(format!(
            "transforms of size {}x{} do not fit a {m}x{n} tensor",
            q1.dim, q2.dim
        )));
    }
    let scale = r.f32()?;
    if !scale.is_finite() || scale < 0.0 {
        return Err(FormatError::Malformed(format!("invalid scale {scale}")));
    }
    let mode_code = r.u8()?;
    let mode = CodebookMode::from_code(mode_code)
        .ok_or_else(|| FormatError::Malformed(format!("unknown codebook mode {mode_code}")))?;
    let bits = r.u8()?;
    if !(1..=8).contains(&bits) {
        return Err(FormatError::Malformed(format!("bit width {bits} out of range")));
    }
    let k = 1usize << bits;
    let count = r.u16()? as usize;
    if count != 2 * k {
        return Err(FormatError::Malformed(format!(
            "codebook holds {count} values, expected {}",
            2 * k
        )));
    }
    let values = r.f32s(count)?;
    if values.iter().any(|c| !c.is_finite()) {
        return Err(FormatError::Malformed("non-finite centroid".into()));
    }
    let centroids = match mode {
        CodebookMode::PerFactor => Centroids::PerFactor {
            u: values[..k].to_vec(),
            v: values[k..].to_vec(),
        },
        CodebookMode::Joint2D => {
            Centroids::Joint2D(values.chunks_exact(2).map(|p| [p[0], p[1]]).collect())
        }
    };

    let elements = m
        .checked_mul(n)
        .ok_or_else(|| FormatError::Malformed("shape overflows".into()))?;
    let needed = packed_len(elements, bits);
    let read_stream = |r: &mut Reader<'_>| -> Result<Vec<u8>, FormatError> {
        let len = r.u32()? as usize;
        if len < needed {
            return Err(FormatError::TruncatedCodes {
                needed,
                available: len,
            });
        }
        if len > needed {
            return Err(FormatError::Malformed(format!(
                "code stream has {len} bytes, expected {needed}"
            )));
        }
        Ok(r.take(len)?.to_vec())
    };
    let codes_u = read_stream(&mut r)?;
    let codes_v = match mode {
        CodebookMode::PerFactor => Some(read_stream(&mut r)?),
        CodebookMode::Joint2D => None,
    };

    let converged = r.bool()?;
    let poorly_converged = r.bool()?;
    let tol = r.f64()?;
    let iterations = r.u32()?;
    let source_crc = r.u32()?;
    let payload_crc = r.u32()?;
    let fit_stats = FitStats {
        inertia: r.f64()?,
        iterations: r.u32()? as usize,
        seed: r.u64()?,
        degenerate: r.bool()?,
    };
    r.finish()?;

    let computed = crate::quantize::codes_crc(&codes_u, codes_v.as_deref());
    if computed != payload_crc {
        return Err(FormatError::ChecksumMismatch {
            stored: payload_crc,
            computed,
        });
    }

    Ok(QuantizedTensor {
        shape: (m, n),
        q1,
        q2,
        scale,
        codebook: Codebook {
            bits,
            centroids,
            fit_stats,
        },
        codes_u,
        codes_v,
        payload_crc,
        meta: QuantMeta {
            tol,
            iterations,
            converged,
            poorly_converged,
            source_crc,
        },
    })
}

pub fn write_kqtz(path: impl AsRef<Path>, q: &QuantizedTensor) -> Result<()> {
    super::write_atomic(path.as_ref(), &kqtz_to_bytes(q)?)
}

pub fn read_kqtz(path: impl AsRef<Path>) -> Result<QuantizedTensor> {
    Ok(kqtz_from_bytes(&std::fs::read(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{kashin_matrix, KashinConfig};
    use crate::error::KashinError;
    use crate::ortho::OrthogonalOperator;
    use crate::quantize::{decode, encode};
    use nalgebra::DMatrix;

    fn artifact(m: usize, n: usize, kind: TransformKind, mode: CodebookMode, bits: u8) -> QuantizedTensor {
        let x = DMatrix::from_fn(m, n, |i, j| ((i * 7 + j * 13) % 11) as f64 - 5.0);
        let q1 = OrthogonalOperator::generate(kind, m, 1).unwrap();
        let q2 = OrthogonalOperator::generate(kind, n, 2).unwrap();
        let d = kashin_matrix(&x, &q1, &q2, &KashinConfig::default()).unwrap();
        encode(&d, bits, mode, 0).unwrap()
    }

    #[test]
    fn round_trip_preserves_artifact_and_decode() {
        for (kind, mode) in [
            (TransformKind::RandomDense, CodebookMode::PerFactor),
            (TransformKind::Dct, CodebookMode::Joint2D),
            (TransformKind::Butterfly, CodebookMode::PerFactor),
            (TransformKind::Householder, CodebookMode::Joint2D),
        ] {
            let q = artifact(8, 16, kind, mode, 3);
            let bytes = kqtz_to_bytes(&q).unwrap();
            let back = kqtz_from_bytes(&bytes).unwrap();
            assert_eq!(back, q, "{kind} {mode}");
            assert_eq!(kqtz_to_bytes(&back).unwrap(), bytes);
            let a = decode(&q).unwrap();
            let b = decode(&back).unwrap();
            assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn file_round_trip() {
        let q = artifact(4, 4, TransformKind::Dct, CodebookMode::PerFactor, 2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.kqtz");
        write_kqtz(&path, &q).unwrap();
        assert_eq!(read_kqtz(&path).unwrap(), q);
    }

    #[test]
    fn size_tracks_code_payload() {
        let q = artifact(32, 64, TransformKind::Dct, CodebookMode::PerFactor, 4);
        let bytes = kqtz_to_bytes(&q).unwrap();
        let codes = 2 * packed_len(32 * 64, 4);
        let overhead = bytes.len() - codes;
        assert_eq!(overhead, 4 + 2 + 8 + 2 * 17 + 4 + 2 + 2 + 32 * 4 + 2 * 4 + 1 + 1 + 8 + 3 * 4 + 8 + 4 + 8 + 1 + 4);
    }

    #[test]
    fn distinct_errors() {
        let q = artifact(4, 8, TransformKind::Dct, CodebookMode::PerFactor, 2);
        let bytes = kqtz_to_bytes(&q).unwrap();

        let mut bad = bytes.clone();
        bad[4] = 9;
        assert_eq!(kqtz_from_bytes(&bad), Err(FormatError::UnsupportedVersion(9)));

        let mut bad = bytes.clone();
        bad[14] = 7;
        assert_eq!(kqtz_from_bytes(&bad), Err(FormatError::UnknownTransformKind(7)));

        let mut bad = bytes.clone();
        let last = bad.len() - 1;
        bad[last] ^= 0xff;
        assert!(matches!(kqtz_from_bytes(&bad), Err(FormatError::CrcMismatch { .. })));

        // Corrupt one code byte and patch the outer CRC: the payload checksum still catches it.
        let mut bad = bytes.clone();
        let body = bad.len() - 4;
        let code_byte = body - 60;
        bad[code_byte] ^= 0x01;
        let crc = crc32fast::hash(&bad[..body]);
        bad[body..].copy_from_slice(&crc.to_le_bytes());
        assert!(matches!(
            kqtz_from_bytes(&bad),
            Err(FormatError::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn short_code_stream_is_reported() {
        let mut q = artifact(4, 8, TransformKind::Dct, CodebookMode::Joint2D, 2);
        q.codes_u.pop();
        q.payload_crc = crate::quantize::codes_crc(&q.codes_u, None);
        assert!(matches!(
            kqtz_to_bytes(&q),
            Err(KashinError::Format(FormatError::TruncatedCodes { .. }))
        ));
    }
}
