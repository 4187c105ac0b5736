//! Codebook quantization of decomposition factors.
//!
//! The unit-normalized factors `U` and `V = Q₁ᵀV̂Q₂` are clustered and each
//! entry is replaced by the index of its nearest centroid. Decoding returns
//! `scale·(Uq + Q₁VqQ₂ᵀ)` with the operators regenerated from descriptors;
//! the decomposition residual is dropped.

mod baseline;
mod codebook;
pub mod kmeans;
pub mod packing;
mod stats;

use nalgebra::DMatrix;

pub use baseline::{direct_kmeans, direct_uniform};
pub use codebook::{fit_codebook, fit_scalar_codebook, Centroids, Codebook, CodebookMode, FitStats};
pub use stats::{error_stats, ErrorStats};

use crate::decomp::MatrixDecomposition;
use crate::error::{FormatError, KashinError, Result};
use crate::ortho::{OrthogonalOperator, TransformDescriptor};
use packing::{pack_codes, packed_len, unpack_codes};

/// Provenance carried alongside the codes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantMeta {
    pub tol: f64,
    pub iterations: u32,
    pub converged: bool,
    pub poorly_converged: bool,
    /// CRC32 of the source tensor's bytes, or 0 when unknown.
    pub source_crc: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedTensor {
    pub shape: (usize, usize),
    pub q1: TransformDescriptor,
    pub q2: TransformDescriptor,
    pub scale: f32,
    pub codebook: Codebook,
    /// Packed `U` codes, or the joint codes in [`CodebookMode::Joint2D`].
    pub codes_u: Vec<u8>,
    /// Packed `V` codes; `None` in [`CodebookMode::Joint2D`].
    pub codes_v: Option<Vec<u8>>,
    /// CRC32 over the packed code streams.
    pub payload_crc: u32,
    pub meta: QuantMeta,
}

/// Row-major factor streams of `d`, pre-multiplied so that the `f32` scale
/// reproduces the exact `f64` one: `scale_f32·(r·U) = scale·U`.
pub struct FactorStreams {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub scale: f32,
}

pub fn factor_streams(d: &MatrixDecomposition) -> Result<FactorStreams> {
    let (q1, q2) = d.operators()?;
    let v = d.v(&q1, &q2)?;
    let scale = d.scale as f32;
    if !scale.is_finite() {
        return Err(KashinError::InvalidInput(format!(
            "scale {} is not representable in single precision",
            d.scale
        )));
    }
    let ratio = if scale == 0.0 { 1.0 } else { d.scale / scale as f64 };
    Ok(FactorStreams {
        u: row_major(&d.u).map(|x| x * ratio).collect(),
        v: row_major(&v).map(|x| x * ratio).collect(),
        scale,
    })
}

fn row_major(m: &DMatrix<f64>) -> impl Iterator<Item = f64> + '_ {
    (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| m[(i, j)]))
}

pub(crate) fn codes_crc(codes_u: &[u8], codes_v: Option<&[u8]>) -> u32 {
    let mut h = crc32fast::Hasher::new();
    h.update(codes_u);
    if let Some(v) = codes_v {
        h.update(v);
    }
    h.finalize()
}

/// Fits a codebook to `d` and encodes it.
pub fn encode(
    d: &MatrixDecomposition,
    bits: u8,
    mode: CodebookMode,
    seed: u64,
) -> Result<QuantizedTensor> {
    let streams = factor_streams(d)?;
    let codebook = fit_codebook(&streams.u, &streams.v, bits, mode, seed)?;
    encode_streams(d, &streams, codebook)
}

/// Encodes `d` against a fixed codebook.
pub fn encode_with_codebook(d: &MatrixDecomposition, codebook: &Codebook) -> Result<QuantizedTensor> {
    codebook.validate()?;
    let streams = factor_streams(d)?;
    encode_streams(d, &streams, codebook.clone())
}

/// One codebook fitted to the stacked factors of several decompositions.
pub fn fit_shared_codebook(
    decomps: &[&MatrixDecomposition],
    bits: u8,
    mode: CodebookMode,
    seed: u64,
) -> Result<Codebook> {
    if decomps.is_empty() {
        return Err(KashinError::InvalidArgument(
            "a shared codebook needs at least one tensor".into(),
        ));
    }
    let mut u = Vec::new();
    let mut v = Vec::new();
    for d in decomps {
        let s = factor_streams(d)?;
        u.extend(s.u);
        v.extend(s.v);
    }
    fit_codebook(&u, &v, bits, mode, seed)
}

fn encode_streams(
    d: &MatrixDecomposition,
    streams: &FactorStreams,
    codebook: Codebook,
) -> Result<QuantizedTensor> {
    let (d1, d2) = d.transforms.clone().ok_or_else(|| {
        KashinError::InvalidInput("decomposition carries no transform descriptors".into())
    })?;
    let (codes_u, codes_v) = codebook.assign(&streams.u, &streams.v);
    let codes_u = pack_codes(&codes_u, codebook.bits);
    let codes_v = codes_v.map(|c| pack_codes(&c, codebook.bits));
    let report = &d.report;
    Ok(QuantizedTensor {
        shape: d.shape(),
        q1: d1,
        q2: d2,
        scale: streams.scale,
        payload_crc: codes_crc(&codes_u, codes_v.as_deref()),
        codebook,
        codes_u,
        codes_v,
        meta: QuantMeta {
            tol: d.tol,
            iterations: report.iterations.min(u32::MAX as usize) as u32,
            converged: report.converged,
            poorly_converged: report.poorly_converged,
            source_crc: 0,
        },
    })
}

impl QuantizedTensor {
    pub fn mode(&self) -> CodebookMode {
        self.codebook.mode()
    }

    pub fn len(&self) -> usize {
        self.shape.0 * self.shape.1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unpacked code streams after structural and checksum validation.
    pub fn codes(&self) -> Result<(Vec<u8>, Option<Vec<u8>>)> {
        self.codebook.validate()?;
        let bits = self.codebook.bits;
        let count = self.len();
        let expect_v = self.mode() == CodebookMode::PerFactor;
        if self.codes_v.is_some() != expect_v {
            return Err(FormatError::Malformed(format!(
                "{} artifact has the wrong number of code streams",
                self.mode()
            ))
            .into());
        }
        for stream in std::iter::once(&self.codes_u).chain(self.codes_v.as_ref()) {
            if stream.len() > packed_len(count, bits) {
                return Err(FormatError::TrailingBytes(stream.len() - packed_len(count, bits)).into());
            }
        }
        let u = unpack_codes(&self.codes_u, bits, count)?;
        let v = match &self.codes_v {
            Some(v) => Some(unpack_codes(v, bits, count)?),
            None => None,
        };
        let computed = codes_crc(&self.codes_u, self.codes_v.as_deref());
        if computed != self.payload_crc {
            return Err(FormatError::ChecksumMismatch {
                stored: self.payload_crc,
                computed,
            }
            .into());
        }
        Ok((u, v))
    }

    /// Quantized factors `(Uq, Vq)` without the scale, in the `V` domain.
    pub fn dequantized_factors(&self) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let (m, n) = self.shape;
        let (cu, cv) = self.codes()?;
        let mut uq = DMatrix::zeros(m, n);
        let mut vq = DMatrix::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                let k = i * n + j;
                let code_v = cv.as_ref().map_or(0, |c| c[k]);
                let (a, b) = self.codebook.lookup(cu[k], code_v);
                uq[(i, j)] = a;
                vq[(i, j)] = b;
            }
        }
        Ok((uq, vq))
    }

    /// Rebuilds `(Q₁, Q₂)` and checks them against the shape.
    pub fn operators(&self) -> Result<(OrthogonalOperator, OrthogonalOperator)> {
        let (m, n) = self.shape;
        if self.q1.dim != m || self.q2.dim != n {
            return Err(FormatError::Malformed(format!(
                "transforms of size {}x{} do not fit a {m}x{n} tensor",
                self.q1.dim, self.q2.dim
            ))
            .into());
        }
        Ok((
            OrthogonalOperator::from_descriptor(&self.q1)?,
            OrthogonalOperator::from_descriptor(&self.q2)?,
        ))
    }

    /// `(max |Uq|, max |Vq|)` over the quantized unit-normalized factors.
    pub fn factor_inf_norms(&self) -> Result<(f64, f64)> {
        let (uq, vq) = self.dequantized_factors()?;
        Ok((uq.amax(), vq.amax()))
    }
}

/// `scale·(Uq + Q₁VqQ₂ᵀ)`.
pub fn decode(q: &QuantizedTensor) -> Result<DMatrix<f64>> {
    let (uq, vq) = q.dequantized_factors()?;
    let (q1, q2) = q.operators()?;
    let rotated = q2.apply_rows(&q1.apply_columns(&vq, false)?, false)?;
    let scale = q.scale as f64;
    Ok((uq + rotated) * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{kashin_matrix, KashinConfig};
    use crate::ortho::TransformKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng))
    }

    fn decompose(x: &DMatrix<f64>, kind: TransformKind, seed: u64) -> MatrixDecomposition {
        let q1 = OrthogonalOperator::generate(kind, x.nrows(), seed).unwrap();
        let q2 = OrthogonalOperator::generate(kind, x.ncols(), seed + 1).unwrap();
        kashin_matrix(x, &q1, &q2, &KashinConfig::default()).unwrap()
    }

    fn rel_err(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        (x - y).norm() / x.norm()
    }

    #[test]
    fn all_ones_is_exact() {
        let x = DMatrix::from_element(8, 4, 1.0);
        let d = decompose(&x, TransformKind::RandomDense, 3);
        for mode in [CodebookMode::PerFactor, CodebookMode::Joint2D] {
            let q = encode(&d, 1, mode, 0).unwrap();
            let y = decode(&q).unwrap();
            // Exact up to single-precision centroid storage.
            assert!(rel_err(&x, &y) < 1e-7, "{mode}: {}", rel_err(&x, &y));
        }
    }

    #[test]
    fn zero_matrix_decodes_to_zero() {
        let x = DMatrix::zeros(4, 4);
        let d = decompose(&x, TransformKind::Dct, 0);
        let q = encode(&d, 2, CodebookMode::PerFactor, 0).unwrap();
        assert_eq!(decode(&q).unwrap(), x);
    }

    #[test]
    fn stream_lengths_and_shape() {
        let x = gaussian(12, 10, 1);
        let d = decompose(&x, TransformKind::RandomDense, 1);
        for bits in 1..=8u8 {
            let q = encode(&d, bits, CodebookMode::PerFactor, 0).unwrap();
            assert_eq!(q.codes_u.len(), packed_len(120, bits));
            assert_eq!(q.codes_v.as_ref().unwrap().len(), packed_len(120, bits));
            assert_eq!(q.codebook.len(), 1 << bits);
            assert_eq!(decode(&q).unwrap().shape(), (12, 10));
        }
        let q = encode(&d, 3, CodebookMode::Joint2D, 0).unwrap();
        assert!(q.codes_v.is_none());
    }

    #[test]
    fn per_factor_centroids_sorted() {
        let d = decompose(&gaussian(16, 16, 2), TransformKind::Dct, 0);
        let q = encode(&d, 4, CodebookMode::PerFactor, 5).unwrap();
        let Centroids::PerFactor { u, v } = &q.codebook.centroids else {
            panic!("mode mismatch")
        };
        assert!(u.windows(2).all(|w| w[0] <= w[1]));
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn nearest_centroid_is_optimal() {
        let d = decompose(&gaussian(9, 7, 4), TransformKind::RandomDense, 4);
        let s = factor_streams(&d).unwrap();
        for mode in [CodebookMode::PerFactor, CodebookMode::Joint2D] {
            let q = encode(&d, 3, mode, 1).unwrap();
            let (cu, cv) = q.codes().unwrap();
            for k in 0..s.u.len() {
                match &q.codebook.centroids {
                    Centroids::PerFactor { u, v } => {
                        let chosen = (s.u[k] - u[cu[k] as usize] as f64).abs();
                        assert!(u.iter().all(|&c| (s.u[k] - c as f64).abs() >= chosen));
                        let cv = cv.as_ref().unwrap();
                        let chosen = (s.v[k] - v[cv[k] as usize] as f64).abs();
                        assert!(v.iter().all(|&c| (s.v[k] - c as f64).abs() >= chosen));
                    }
                    Centroids::Joint2D(pairs) => {
                        let d2 = |p: [f32; 2]| {
                            (s.u[k] - p[0] as f64).powi(2) + (s.v[k] - p[1] as f64).powi(2)
                        };
                        let chosen = d2(pairs[cu[k] as usize]);
                        assert!(pairs.iter().all(|&p| d2(p) >= chosen));
                    }
                }
            }
        }
    }

    #[test]
    fn decoded_factors_are_centroids() {
        let d = decompose(&gaussian(10, 6, 5), TransformKind::Householder, 2);
        let q = encode(&d, 2, CodebookMode::PerFactor, 0).unwrap();
        let (uq, _) = q.dequantized_factors().unwrap();
        let Centroids::PerFactor { u, .. } = &q.codebook.centroids else {
            unreachable!()
        };
        assert!(uq.iter().all(|x| u.iter().any(|&c| c as f64 == *x)));
    }

    #[test]
    fn reencoding_is_idempotent() {
        let d = decompose(&gaussian(16, 8, 6), TransformKind::Dct, 0);
        for mode in [CodebookMode::PerFactor, CodebookMode::Joint2D] {
            let q = encode(&d, 3, mode, 2).unwrap();
            let (uq, vq) = q.dequantized_factors().unwrap();
            let (a, b) = q.codebook.assign(
                &row_major(&uq).collect::<Vec<_>>(),
                &row_major(&vq).collect::<Vec<_>>(),
            );
            assert_eq!(pack_codes(&a, 3), q.codes_u);
            assert_eq!(b.map(|b| pack_codes(&b, 3)), q.codes_v);
        }
    }

    #[test]
    fn reconstruction_error_identity() {
        let x = gaussian(16, 8, 7);
        let d = decompose(&x, TransformKind::RandomDense, 7);
        let q = encode(&d, 3, CodebookMode::PerFactor, 0).unwrap();
        let (q1, q2) = d.operators().unwrap();
        let (uq, vq) = q.dequantized_factors().unwrap();
        let s = factor_streams(&d).unwrap();
        let u = DMatrix::from_row_slice(16, 8, &s.u);
        let v = DMatrix::from_row_slice(16, 8, &s.v);
        let sq = q.scale as f64;
        let dv = q2.apply_rows(&q1.apply_columns(&(v - vq), false).unwrap(), false).unwrap();
        let predicted = ((u - uq) + dv + &d.residual * (d.scale / sq)) * sq;
        let actual = &x - decode(&q).unwrap();
        assert!((predicted - actual).amax() < 1e-10);
    }

    #[test]
    fn error_decreases_with_bits() {
        let x = gaussian(64, 32, 8);
        let d = decompose(&x, TransformKind::RandomDense, 8);
        let errs: Vec<f64> = (2..=6)
            .map(|b| rel_err(&x, &decode(&encode(&d, b, CodebookMode::PerFactor, 0).unwrap()).unwrap()))
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn eight_bits_error_is_codebook_error() {
        let x = gaussian(128, 128, 9);
        let d = decompose(&x, TransformKind::RandomDense, 9);
        assert!(d.report.converged);
        let decoded = decode(&encode(&d, 8, CodebookMode::PerFactor, 0).unwrap()).unwrap();
        let total = rel_err(&x, &decoded);
        let (q1, q2) = d.operators().unwrap();
        let exact = crate::decomp::reconstruct_matrix(&d, &q1, &q2, false).unwrap();
        let codebook_only = rel_err(&exact, &decoded) * exact.norm() / x.norm();
        // Dropping the residual adds at most tol on top of the codebook error.
        assert!((total - codebook_only).abs() <= 10.0 * d.tol, "{total} vs {codebook_only}");
        assert!(total < 2e-3, "{total}");
    }

    #[test]
    fn missing_descriptors_rejected() {
        let mut d = decompose(&gaussian(4, 4, 0), TransformKind::Dct, 0);
        d.transforms = None;
        assert!(matches!(
            encode(&d, 2, CodebookMode::PerFactor, 0),
            Err(KashinError::InvalidInput(_))
        ));
    }

    #[test]
    fn corrupted_codes_are_detected() {
        let d = decompose(&gaussian(8, 8, 1), TransformKind::Dct, 0);
        let q = encode(&d, 4, CodebookMode::PerFactor, 0).unwrap();

        let mut bad = q.clone();
        bad.codes_u[3] ^= 0x10;
        assert!(matches!(
            decode(&bad),
            Err(KashinError::Format(FormatError::ChecksumMismatch { .. }))
        ));

        let mut short = q.clone();
        short.codes_v.as_mut().unwrap().pop();
        assert!(matches!(
            decode(&short),
            Err(KashinError::Format(FormatError::TruncatedCodes { .. }))
        ));
    }

    #[test]
    fn shared_codebook_applies_to_each_tensor() {
        let d1 = decompose(&gaussian(8, 8, 1), TransformKind::Dct, 0);
        let d2 = decompose(&gaussian(8, 4, 2), TransformKind::RandomDense, 3);
        let cb = fit_shared_codebook(&[&d1, &d2], 3, CodebookMode::PerFactor, 0).unwrap();
        for d in [&d1, &d2] {
            let q = encode_with_codebook(d, &cb).unwrap();
            assert_eq!(q.codebook, cb);
            decode(&q).unwrap();
        }
    }
}
