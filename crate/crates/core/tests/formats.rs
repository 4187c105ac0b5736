use kashin::analysis::gaussian_matrix;
use kashin::decomp::{kashin_matrix, KashinConfig};
use kashin::ortho::{OrthogonalOperator, TransformKind};
use kashin::quantize::{decode, encode, CodebookMode};
use kashin::tensorio::{
    dense_from_bytes, dense_to_bytes, kdec_from_bytes, kdec_to_bytes, kqtz_from_bytes, kqtz_to_bytes,
    npy_from_bytes, DType, DenseTensor,
};
use kashin::KashinError;
use proptest::prelude::*;

fn kqtz_sample(kind: TransformKind, mode: CodebookMode) -> Vec<u8> {
    let x = gaussian_matrix(8, 4, 1);
    let q1 = OrthogonalOperator::generate(kind, 8, 1).unwrap();
    let q2 = OrthogonalOperator::generate(kind, 4, 2).unwrap();
    let d = kashin_matrix(&x, &q1, &q2, &KashinConfig::default()).unwrap();
    kqtz_to_bytes(&encode(&d, 3, mode, 0).unwrap()).unwrap()
}

#[derive(Debug, Clone)]
enum Mutation {
    Flip { at: usize, mask: u8 },
    Truncate(usize),
    Insert { at: usize, byte: u8 },
    Remove(usize),
}

fn mutation() -> impl Strategy<Value = Mutation> {
    prop_oneof![
        (any::<usize>(), 1u8..=255).prop_map(|(at, mask)| Mutation::Flip { at, mask }),
        any::<usize>().prop_map(Mutation::Truncate),
        (any::<usize>(), any::<u8>()).prop_map(|(at, byte)| Mutation::Insert { at, byte }),
        any::<usize>().prop_map(Mutation::Remove),
    ]
}

fn mutate(bytes: &[u8], muts: &[Mutation], patch_crc: bool) -> Vec<u8> {
    let mut out = bytes.to_vec();
    for m in muts {
        let len = out.len().max(1);
        match *m {
            Mutation::Flip { at, mask } if !out.is_empty() => out[at % len] ^= mask,
            Mutation::Truncate(at) => out.truncate(at % len),
            Mutation::Insert { at, byte } => out.insert(at % (out.len() + 1), byte),
            Mutation::Remove(at) if !out.is_empty() => {
                out.remove(at % len);
            }
            _ => {}
        }
    }
    if patch_crc && out.len() >= 4 {
        let body = out.len() - 4;
        let crc = crc32fast::hash(&out[..body]);
        out[body..].copy_from_slice(&crc.to_le_bytes());
    }
    out
}

fn is_typed(e: &KashinError) -> bool {
    !matches!(e, KashinError::Io(_))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn kqtz_reader_never_panics(
        kind in prop::sample::select(TransformKind::ALL.to_vec()),
        joint in any::<bool>(),
        muts in prop::collection::vec(mutation(), 1..4),
        patch_crc in any::<bool>(),
    ) {
        let mode = if joint { CodebookMode::Joint2D } else { CodebookMode::PerFactor };
        let original = kqtz_sample(kind, mode);
        let bytes = mutate(&original, &muts, patch_crc);
        match kqtz_from_bytes(&bytes) {
            Ok(q) => {
                // A successful parse either reproduces the input or decodes
                // (or fails) cleanly.
                if bytes == original {
                    prop_assert_eq!(kqtz_to_bytes(&q).unwrap(), original);
                } else if let Err(e) = decode(&q) {
                    prop_assert!(is_typed(&e));
                }
            }
            Err(_) => prop_assert_ne!(bytes, original),
        }
    }

    #[test]
    fn kden_reader_never_panics(
        f32_storage in any::<bool>(),
        muts in prop::collection::vec(mutation(), 1..4),
        patch_crc in any::<bool>(),
    ) {
        let dtype = if f32_storage { DType::F32 } else { DType::F64 };
        let original = dense_to_bytes(&DenseTensor::from_matrix(&gaussian_matrix(3, 5, 0), dtype)).unwrap();
        let bytes = mutate(&original, &muts, patch_crc);
        if let Ok(t) = dense_from_bytes(&bytes) {
            prop_assert_eq!(t.data.len(), t.dims.iter().product::<usize>());
            if !patch_crc {
                prop_assert_eq!(bytes, original);
            }
        }
    }

    #[test]
    fn kdec_and_npy_readers_never_panic(
        bytes in prop::collection::vec(any::<u8>(), 0..256),
    ) {
        let _ = kdec_from_bytes(&bytes);
        let _ = npy_from_bytes(&bytes);
        let mut npy = b"\x93NUMPY\x01\x00".to_vec();
        npy.extend(&bytes);
        let _ = npy_from_bytes(&npy);
    }
}

#[test]
fn kdec_mutations_are_rejected() {
    let x = gaussian_matrix(4, 4, 2);
    let q = OrthogonalOperator::dct(4).unwrap();
    let d = kashin_matrix(&x, &q, &q, &KashinConfig::default()).unwrap();
    let bytes = kdec_to_bytes(&d).unwrap();
    for at in 0..bytes.len() {
        let mut bad = bytes.clone();
        bad[at] ^= 0x5a;
        assert!(kdec_from_bytes(&bad).is_err(), "byte {at}");
    }
}
