use std::io::Write;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::{derive_seed, evaluation_dim};
use crate::decomp::{kashin_matrix, kashin_vector, Branch, KashinConfig};
use crate::error::{KashinError, Result};
use crate::ortho::{OrthogonalOperator, TransformKind};

/// Grid of convergence runs: every family at every size, `trials` inputs each.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub families: Vec<TransformKind>,
    pub trials: usize,
    pub decomp: KashinConfig,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![1000],
            families: TransformKind::ALL.to_vec(),
            trials: 23,
            decomp: KashinConfig::new(1e-6, 200),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub kind: TransformKind,
    /// Evaluated dimension (butterfly rounds up to a power of two).
    pub n: usize,
    pub requested_n: usize,
    pub trial: usize,
    pub input_seed: u64,
    pub operator_seed: u64,
    /// Where the input came from; always `"gaussian"` for generated inputs.
    pub source: &'static str,
    pub residual_norms: Vec<f64>,
    pub wall_ns: u64,
    /// First iteration whose residual is at most the tolerance.
    pub iterations_to_tol: Option<usize>,
}

impl BenchRecord {
    pub fn final_residual(&self) -> f64 {
        *self.residual_norms.last().unwrap_or(&0.0)
    }
}

/// Standard-normal vector of length `n`.
pub fn gaussian_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Standard-normal `m × n` matrix filled row by row.
pub fn gaussian_matrix(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
    let values = gaussian_vector(m * n, seed);
    DMatrix::from_row_slice(m, n, &values)
}

/// Runs `kashin_vector` over the configured grid. Records are ordered by
/// size, then family in configuration order, then trial.
pub fn bench_convergence(config: &BenchConfig) -> Result<Vec<BenchRecord>> {
    config.decomp.validate()?;
    let mut jobs = Vec::new();
    for &n in &config.sizes {
        for &kind in &config.families {
            for trial in 0..config.trials {
                jobs.push((n, kind, trial));
            }
        }
    }
    jobs.par_iter()
        .map(|&(requested_n, kind, trial)| {
            let n = evaluation_dim(kind, requested_n);
            // Inputs depend on the trial only, so families see the same draws.
            let input_seed = derive_seed(config.seed, TransformKind::RandomDense, trial as u64) ^ n as u64;
            let operator_seed = derive_seed(config.seed, kind, trial as u64);
            let q = OrthogonalOperator::generate(kind, n, operator_seed)?;
            let x = gaussian_vector(n, input_seed);
            let start = Instant::now();
            let d = kashin_vector(&x, &q, &config.decomp)?;
            let wall_ns = start.elapsed().as_nanos() as u64;
            let iterations_to_tol = d
                .report
                .residual_norms
                .iter()
                .position(|&r| r <= config.decomp.tol);
            Ok(BenchRecord {
                kind,
                n,
                requested_n,
                trial,
                input_seed,
                operator_seed,
                source: "gaussian",
                residual_norms: d.report.residual_norms,
                wall_ns,
                iterations_to_tol,
            })
        })
        .collect()
}

/// Long-format CSV: one row per (record, iteration) with columns
/// `family, n, trial, iteration, residual, wall_ns`.
pub fn write_bench_csv<W: Write>(records: &[BenchRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["family", "n", "trial", "iteration", "residual", "wall_ns"])
        .map_err(csv_error)?;
    for r in records {
        for (k, residual) in r.residual_norms.iter().enumerate() {
            w.write_record([
                r.kind.name().to_string(),
                r.n.to_string(),
                r.trial.to_string(),
                k.to_string(),
                format!("{residual:e}"),
                r.wall_ns.to_string(),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> KashinError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => KashinError::Io(io),
        other => KashinError::InvalidInput(format!("csv: {other:?}")),
    }
}

/// Dense `Q₂ ⊗ Q₁`, the operator acting on column-major `vec(X)` for which
/// `(Q₂ ⊗ Q₁)ᵀ vec(X) = vec(Q₁ᵀXQ₂)`. Refused when `m·n` exceeds `cap`.
pub fn kronecker_operator(
    q1: &OrthogonalOperator,
    q2: &OrthogonalOperator,
    cap: usize,
) -> Result<OrthogonalOperator> {
    let dim = q1.dim() * q2.dim();
    if dim > cap {
        return Err(KashinError::ResourceLimit { dim, cap });
    }
    let a = q1.to_dense_with_cap(cap)?;
    let b = q2.to_dense_with_cap(cap)?;
    Ok(OrthogonalOperator::from_dense_trusted(b.kronecker(&a)))
}

/// Matrix algorithm against the vector algorithm on `vec(X)` with the dense
/// Kronecker operator, on identical inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixVsVector {
    pub kind: TransformKind,
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    pub matrix_ns: Vec<u64>,
    pub vector_ns: Vec<u64>,
    /// Largest per-iteration residual difference between the two paths.
    pub max_residual_gap: f64,
    /// Trials whose branch sequences differ.
    pub branch_mismatches: usize,
}

impl MatrixVsVector {
    pub fn median_matrix_ns(&self) -> u64 {
        median(&self.matrix_ns)
    }

    pub fn median_vector_ns(&self) -> u64 {
        median(&self.vector_ns)
    }
}

fn median(values: &[u64]) -> u64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    v.get(v.len() / 2).copied().unwrap_or(0)
}

/// Times both paths sequentially so the measurements do not compete.
pub fn bench_matrix_vs_vector(
    kind: TransformKind,
    m: usize,
    n: usize,
    trials: usize,
    config: &KashinConfig,
    seed: u64,
    cap: usize,
) -> Result<MatrixVsVector> {
    config.validate()?;
    if m * n > cap {
        return Err(KashinError::ResourceLimit { dim: m * n, cap });
    }
    let mut out = MatrixVsVector {
        kind,
        m,
        n,
        trials,
        matrix_ns: Vec::with_capacity(trials),
        vector_ns: Vec::with_capacity(trials),
        max_residual_gap: 0.0,
        branch_mismatches: 0,
    };
    for trial in 0..trials {
        let s = derive_seed(seed, kind, trial as u64);
        let q1 = OrthogonalOperator::generate(kind, m, s)?;
        let q2 = OrthogonalOperator::generate(kind, n, s.wrapping_add(1))?;
        let kron = kronecker_operator(&q1, &q2, cap)?;
        let x = gaussian_matrix(m, n, s ^ 0x5EED);

        let start = Instant::now();
        let dm = kashin_matrix(&x, &q1, &q2, config)?;
        out.matrix_ns.push(start.elapsed().as_nanos() as u64);

        let start = Instant::now();
        let dv = kashin_vector(x.as_slice(), &kron, config)?;
        out.vector_ns.push(start.elapsed().as_nanos() as u64);

        let (a, b) = (&dm.report, &dv.report);
        if a.branch_choices != b.branch_choices {
            out.branch_mismatches += 1;
        }
        let gap = a
            .residual_norms
            .iter()
            .zip(&b.residual_norms)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        let len_gap = if a.residual_norms.len() == b.residual_norms.len() { 0.0 } else { f64::INFINITY };
        out.max_residual_gap = out.max_residual_gap.max(gap).max(len_gap);
    }
    Ok(out)
}

/// Counts of each branch over a run, `(identity, rotated)`.
pub fn branch_counts(branches: &[Branch]) -> (usize, usize) {
    let rotated = branches.iter().filter(|&&b| b == Branch::RotatedBasis).count();
    (branches.len() - rotated, rotated)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_trials_yield_no_records() {
        let cfg = BenchConfig {
            trials: 0,
            ..BenchConfig::default()
        };
        assert!(bench_convergence(&cfg).unwrap().is_empty());
    }

    #[test]
    fn records_are_ordered_and_reproducible() {
        let cfg = BenchConfig {
            sizes: vec![30],
            families: vec![TransformKind::Dct, TransformKind::Butterfly],
            trials: 3,
            decomp: KashinConfig::new(1e-4, 50),
            seed: 4,
        };
        let a = bench_convergence(&cfg).unwrap();
        let b = bench_convergence(&cfg).unwrap();
        assert_eq!(a.len(), 6);
        let keys: Vec<_> = a.iter().map(|r| (r.kind, r.trial, r.n)).collect();
        assert_eq!(keys[0], (TransformKind::Dct, 0, 30));
        assert_eq!(keys[3], (TransformKind::Butterfly, 0, 32));
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.residual_norms, y.residual_norms);
        }
        assert!(a.iter().all(|r| r.residual_norms.windows(2).all(|w| w[1] <= w[0])));
    }

    #[test]
    fn csv_layout() {
        let cfg = BenchConfig {
            sizes: vec![8],
            families: vec![TransformKind::RandomDense],
            trials: 1,
            decomp: KashinConfig::new(1e-3, 5),
            seed: 0,
        };
        let records = bench_convergence(&cfg).unwrap();
        let mut buf = Vec::new();
        write_bench_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("family,n,trial,iteration,residual,wall_ns"));
        assert_eq!(lines.count(), records[0].residual_norms.len());
        assert!(text.lines().nth(1).unwrap().starts_with("qr,8,0,0,1e0,"));
    }

    #[test]
    fn kronecker_cap() {
        let q = OrthogonalOperator::dct(8).unwrap();
        assert!(matches!(
            kronecker_operator(&q, &q, 32),
            Err(KashinError::ResourceLimit { dim: 64, cap: 32 })
        ));
        assert!(matches!(
            bench_matrix_vs_vector(TransformKind::Dct, 8, 8, 1, &KashinConfig::default(), 0, 32),
            Err(KashinError::ResourceLimit { .. })
        ));
    }

    #[test]
    fn matrix_and_vector_paths_agree() {
        let r = bench_matrix_vs_vector(TransformKind::RandomDense, 4, 8, 3, &KashinConfig::new(1e-8, 100), 1, 4096)
            .unwrap();
        assert_eq!(r.branch_mismatches, 0);
        assert!(r.max_residual_gap < 1e-10, "{}", r.max_residual_gap);
    }
}
