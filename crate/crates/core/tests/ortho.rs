use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use kashin::ortho::{
    haar_orthogonal, orthogonality_defect, BlockParam, ButterflyFactorSet, Dct, OpTally,
    OrthogonalOperator, TransformKind,
};
use kashin::{FormatError, KashinError};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const SIZES: [usize; 7] = [2, 4, 8, 16, 64, 500, 512];

fn gaussian(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn operators(n: usize) -> Vec<OrthogonalOperator> {
    TransformKind::ALL
        .iter()
        .filter(|&&k| k != TransformKind::Butterfly || n.is_power_of_two())
        .map(|&k| OrthogonalOperator::generate(k, n, 17).unwrap())
        .collect()
}

#[test]
fn adjoint_isometry_and_round_trip() {
    for n in SIZES {
        for op in operators(n) {
            let x = gaussian(n, 1);
            let y = gaussian(n, 2);
            let qx = op.apply(&x).unwrap();
            let qty = op.apply_adjoint(&y).unwrap();
            let tol = 1e-10 * norm(&x) * norm(&y);
            assert!((dot(&qx, &y) - dot(&x, &qty)).abs() < tol, "{} n={n}", op.kind());
            assert!((norm(&qx) - norm(&x)).abs() < 1e-10 * norm(&x), "{} n={n}", op.kind());
            let back = op.apply_adjoint(&qx).unwrap();
            let err: f64 = back.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "{} n={n}: {err}", op.kind());
        }
    }
}

#[test]
fn zero_maps_to_zero_and_lengths_are_checked() {
    for op in operators(16) {
        assert_eq!(op.apply(&[0.0; 16]).unwrap(), vec![0.0; 16]);
        assert!(matches!(op.apply(&[0.0; 15]), Err(KashinError::Shape { .. })));
        assert!(matches!(op.apply_adjoint(&[0.0; 17]), Err(KashinError::Shape { .. })));
    }
}

#[test]
fn dense_agrees_with_apply_on_basis() {
    for n in [2, 4, 8, 16, 64] {
        for op in operators(n) {
            let dense = op.to_dense().unwrap();
            for j in 0..n {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                let col = op.apply(&e).unwrap();
                for i in 0..n {
                    assert!((dense[(i, j)] - col[i]).abs() < 1e-12, "{} n={n}", op.kind());
                }
            }
        }
    }
}

#[test]
fn dense_cap_is_enforced() {
    let op = OrthogonalOperator::dct(64).unwrap();
    assert!(matches!(
        op.to_dense_with_cap(32),
        Err(KashinError::ResourceLimit { dim: 64, cap: 32 })
    ));
    assert!(matches!(
        OrthogonalOperator::random_dense(5000, 0),
        Err(KashinError::ResourceLimit { .. })
    ));
}

#[test]
fn haar_orthogonality_and_determinism() {
    let q = haar_orthogonal(100, 5).unwrap();
    assert!(orthogonality_defect(&q) <= 1e-12);
    assert_eq!(q, haar_orthogonal(100, 5).unwrap());
    assert_ne!(q, haar_orthogonal(100, 6).unwrap());
    let op = OrthogonalOperator::random_dense(100, 5).unwrap();
    assert_eq!(op.dense_payload().unwrap(), &q);
    assert_eq!(op.to_dense().unwrap(), q);
}

#[test]
fn haar_columns_have_no_sign_bias() {
    // Without the sign correction of QR, the diagonal of Q is biased positive.
    let n = 8;
    let mut sum = 0.0;
    for seed in 0..400 {
        let q = haar_orthogonal(n, seed).unwrap();
        sum += (0..n).map(|i| q[(i, i)]).sum::<f64>();
    }
    let mean = sum / (400 * n) as f64;
    assert!(mean.abs() < 0.05, "{mean}");
}

#[test]
fn householder_examples() {
    let mut e1 = vec![0.0; 5];
    e1[0] = 1.0;
    let op = OrthogonalOperator::householder(&e1).unwrap();
    let out = op.apply(&e1).unwrap();
    assert_eq!(out[0], -1.0);
    assert!(out[1..].iter().all(|&v| v == 0.0));
    assert!(OrthogonalOperator::householder(&[0.0; 4]).is_err());

    let op = OrthogonalOperator::householder_random(32, 9).unwrap();
    let y = op.householder_vector().unwrap();
    assert_abs_diff_eq!(norm(y), 1.0, epsilon = 1e-14);
    let mut tally = OpTally::default();
    let mut x = gaussian(32, 0);
    op.apply_counted(&mut x, false, &mut tally).unwrap();
    assert!(tally.mul_adds <= 2 * 32);
    assert_eq!(tally.max_scratch, 0);
}

#[test]
fn dct_matches_cosine_formula() {
    let dense = OrthogonalOperator::dct(2).unwrap().to_dense().unwrap();
    let h = 0.5f64.sqrt();
    let expected = DMatrix::from_row_slice(2, 2, &[h, h, h, -h]);
    assert!((dense - expected).amax() < 1e-12);

    for n in [1, 3, 8, 37] {
        let dense = OrthogonalOperator::dct(n).unwrap().to_dense().unwrap();
        for i in 0..n {
            for j in 0..n {
                let scale = if j == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
                let oracle = scale * (PI * (2 * i + 1) as f64 * j as f64 / (2 * n) as f64).cos();
                assert!((dense[(i, j)] - oracle).abs() < 1e-13, "n={n} ({i},{j})");
            }
        }
    }
}

#[test]
fn dct_constant_vector_maps_to_first_basis_vector() {
    let op = OrthogonalOperator::dct(8).unwrap();
    let x = vec![1.0 / 8f64.sqrt(); 8];
    let y = op.apply_adjoint(&x).unwrap();
    assert_abs_diff_eq!(y[0], 1.0, epsilon = 1e-12);
    assert!(y[1..].iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn dct_orthogonality_at_500() {
    let q = OrthogonalOperator::dct(500).unwrap().to_dense().unwrap();
    assert!(orthogonality_defect(&q) <= 1e-10);
}

#[test]
fn dct_fast_path_matches_direct() {
    for n in [1, 2, 5, 64, 500, 1000] {
        let dct = Dct::new(n).unwrap();
        let op = OrthogonalOperator::dct(n).unwrap();
        let x = gaussian(n, n as u64);
        for adjoint in [false, true] {
            let fast = if adjoint { op.apply_adjoint(&x) } else { op.apply(&x) }.unwrap();
            let slow = dct.apply_direct(&x, adjoint).unwrap();
            let err = fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "n={n} adjoint={adjoint}: {err}");
        }
    }
    assert!(matches!(Dct::new(0), Err(KashinError::InvalidDimension(0))));
}

#[test]
fn structured_paths_stay_below_quadratic_scratch() {
    for n in [256, 1024] {
        for kind in [TransformKind::Dct, TransformKind::Butterfly, TransformKind::Householder] {
            let op = OrthogonalOperator::generate(kind, n, 0).unwrap();
            let mut tally = OpTally::default();
            let mut x = gaussian(n, 0);
            op.apply_counted(&mut x, false, &mut tally).unwrap();
            op.apply_counted(&mut x, true, &mut tally).unwrap();
            assert!(tally.max_scratch < n * n / 4, "{kind} n={n}: {}", tally.max_scratch);
        }
    }
}

#[test]
fn butterfly_operation_count() {
    for n in [2, 16, 256, 1024, 4096] {
        let op = OrthogonalOperator::butterfly(n, 3).unwrap();
        let bound = 4 * n as u64 * n.trailing_zeros() as u64;
        for adjoint in [false, true] {
            let mut tally = OpTally::default();
            let mut x = gaussian(n, 1);
            op.apply_counted(&mut x, adjoint, &mut tally).unwrap();
            assert!(tally.mul_adds <= bound, "n={n}: {} > {bound}", tally.mul_adds);
            assert_eq!(tally.max_scratch, 0);
        }
    }
}

#[test]
fn butterfly_structure() {
    let op = OrthogonalOperator::butterfly(16, 4).unwrap();
    let f = op.butterfly_factors().unwrap();
    assert_eq!(f.depth(), 4);
    assert_eq!(f.block_sizes(), vec![16, 8, 4, 2]);

    let base = OrthogonalOperator::butterfly(2, 1).unwrap().to_dense().unwrap();
    assert!(orthogonality_defect(&base) <= 1e-12);

    let op = OrthogonalOperator::butterfly(4, 8).unwrap();
    let f = op.butterfly_factors().unwrap();
    let product = f.factor_dense(0).unwrap() * f.factor_dense(1).unwrap();
    assert!((product - op.to_dense().unwrap()).amax() < 1e-14);
    for index in 0..f.depth() {
        let factor = f.factor_dense(index).unwrap();
        assert!(orthogonality_defect(&factor) <= 1e-12);
    }

    for n in [0, 1, 3, 500] {
        assert!(matches!(
            OrthogonalOperator::butterfly(n, 0),
            Err(KashinError::UnsupportedDimension { .. })
        ));
    }
}

#[test]
fn butterfly_blocks_have_rotation_or_reflection_form() {
    let params = vec![
        vec![BlockParam { angle: 0.3, reflect: false }],
        vec![
            BlockParam { angle: 1.1, reflect: true },
            BlockParam { angle: -0.4, reflect: false },
        ],
    ];
    let f = ButterflyFactorSet::from_level_params(4, params).unwrap();
    let b = f.block_dense(1, 0).unwrap();
    let (c, s) = (1.1f64.cos(), 1.1f64.sin());
    assert!((b - DMatrix::from_row_slice(2, 2, &[c, s, s, -c])).amax() < 1e-15);
    let b = f.block_dense(0, 0).unwrap();
    let (c, s) = (0.3f64.cos(), 0.3f64.sin());
    let expected = DMatrix::from_row_slice(
        4,
        4,
        &[c, 0.0, -s, 0.0, 0.0, c, 0.0, -s, s, 0.0, c, 0.0, 0.0, s, 0.0, c],
    );
    assert!((b - expected).amax() < 1e-15);
}

#[test]
fn descriptors_round_trip() {
    let mut ops = operators(16);
    ops.push(OrthogonalOperator::householder(&gaussian(16, 3)).unwrap());
    ops.push(OrthogonalOperator::from_dense(haar_orthogonal(16, 2).unwrap()).unwrap());
    let f = ButterflyFactorSet::random(16, 12).unwrap();
    ops.push(OrthogonalOperator::from_butterfly_factors(f));
    for op in ops {
        let desc = op.descriptor();
        let back = OrthogonalOperator::from_descriptor(&desc).unwrap();
        assert_eq!(back.to_dense().unwrap(), op.to_dense().unwrap(), "{}", op.kind());
        assert_eq!(back.descriptor().params.len(), desc.params.len());
    }
}

#[test]
fn generation_is_deterministic() {
    for kind in TransformKind::ALL {
        let a = OrthogonalOperator::generate(kind, 64, 99).unwrap();
        let b = OrthogonalOperator::generate(kind, 64, 99).unwrap();
        let x = gaussian(64, 0);
        let (ya, yb) = (a.apply(&x).unwrap(), b.apply(&x).unwrap());
        assert!(ya.iter().zip(&yb).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}

#[test]
fn transform_kind_codes_and_names() {
    for kind in TransformKind::ALL {
        assert_eq!(TransformKind::from_code(kind.code()).unwrap(), kind);
        assert_eq!(kind.name().parse::<TransformKind>().unwrap(), kind);
    }
    assert_eq!(TransformKind::from_code(4), Err(FormatError::UnknownTransformKind(4)));
    assert!("givens".parse::<TransformKind>().is_err());
}

#[test]
fn apply_columns_and_rows() {
    let q1 = OrthogonalOperator::butterfly(8, 1).unwrap();
    let q2 = OrthogonalOperator::dct(5).unwrap();
    let m = DMatrix::from_fn(8, 5, |i, j| (i as f64 + 1.0) * (j as f64 - 2.0));
    let d1 = q1.to_dense().unwrap();
    let d2 = q2.to_dense().unwrap();
    assert!((q1.apply_columns(&m, false).unwrap() - &d1 * &m).amax() < 1e-12);
    assert!((q1.apply_columns(&m, true).unwrap() - d1.transpose() * &m).amax() < 1e-12);
    assert!((q2.apply_rows(&m, false).unwrap() - &m * d2.transpose()).amax() < 1e-12);
    assert!((q2.apply_rows(&m, true).unwrap() - &m * &d2).amax() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn isometry_holds_for_any_input(
        kind in prop::sample::select(TransformKind::ALL.to_vec()),
        log_n in 1u32..8,
        seed in any::<u64>(),
        x in prop::collection::vec(-1e3f64..1e3, 128),
    ) {
        let n = 1usize << log_n;
        let op = OrthogonalOperator::generate(kind, n, seed).unwrap();
        let x = &x[..n];
        let y = op.apply(x).unwrap();
        prop_assert!((norm(&y) - norm(x)).abs() <= 1e-10 * norm(x).max(1.0));
    }
}
