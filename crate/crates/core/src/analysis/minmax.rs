use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eig::orthogonal_eigenvectors;
use super::derive_seed;
use crate::decomp::{l1, l2};
use crate::error::{KashinError, Result};
use crate::ortho::{OrthogonalOperator, TransformKind, DEFAULT_DENSE_CAP};

/// Real parts with a smaller 2-norm than this are discarded.
pub const NEGLIGIBLE_REAL_PART: f64 = 1e-8;

/// Result of one eigenvector search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigSearch {
    /// `min over candidates of max(‖x‖₁, ‖Qᵀx‖₁) / √n`.
    pub value: f64,
    pub candidates: usize,
    pub discarded: usize,
    pub max_imag: f64,
}

/// Worst-case probe over the real parts of the eigenvectors of `op`.
///
/// Eigenvectors are taken with unit 2-norm and largest entry real. Their real
/// parts are scored as they are, without rescaling, by
/// `max(‖x‖₁, ‖Qᵀx‖₁) / √n`; the minimum score is returned. A complex
/// eigenvector's real part has norm below one, which is what places random
/// operators near 0.55 rather than near √(2/π).
pub fn minmax_eig_estimate(op: &OrthogonalOperator) -> Result<f64> {
    Ok(minmax_eig_search(op)?.value)
}

pub fn minmax_eig_search(op: &OrthogonalOperator) -> Result<EigSearch> {
    let dense = op.to_dense_with_cap(DEFAULT_DENSE_CAP)?;
    let n = op.dim();
    let eig = orthogonal_eigenvectors(&dense)?;
    let sqrt_n = (n as f64).sqrt();
    let mut best = f64::INFINITY;
    let mut candidates = 0;
    let mut discarded = 0;
    for x in eig.real_parts {
        if l2(&x) < NEGLIGIBLE_REAL_PART {
            discarded += 1;
            continue;
        }
        let rotated = op.apply_adjoint(&x)?;
        let score = l1(&x).max(l1(&rotated)) / sqrt_n;
        best = best.min(score);
        candidates += 1;
    }
    if candidates == 0 {
        return Err(KashinError::Numerical(
            "every eigenvector had a negligible real part".into(),
        ));
    }
    Ok(EigSearch {
        value: best,
        candidates,
        discarded,
        max_imag: eig.max_imag,
    })
}

/// Min-max statistics for one operator family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxEstimate {
    pub kind: TransformKind,
    /// Dimension actually evaluated (butterfly rounds up to a power of two).
    pub n: usize,
    pub requested_n: usize,
    pub trials: usize,
    pub per_trial_values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl MinMaxEstimate {
    fn from_values(kind: TransformKind, n: usize, requested_n: usize, values: Vec<f64>) -> Self {
        let trials = values.len();
        let mean = values.iter().sum::<f64>() / trials.max(1) as f64;
        let std = if trials > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            kind,
            n,
            requested_n,
            trials,
            per_trial_values: values,
            mean,
            std,
        }
    }

    /// Set when the evaluated size differs from the requested one.
    pub fn note(&self) -> Option<String> {
        (self.n != self.requested_n).then(|| {
            format!(
                "{} evaluated at n = {} (requested {} is not a power of two)",
                self.kind.label(),
                self.n,
                self.requested_n
            )
        })
    }
}

/// Dimension at which a family is evaluated for a requested `n`.
pub fn evaluation_dim(kind: TransformKind, n: usize) -> usize {
    match kind {
        TransformKind::Butterfly => n.next_power_of_two().max(2),
        _ => n,
    }
}

/// Min-max estimates for all four families. Random families are averaged
/// over `trials` seeded operators; the DCT is deterministic and evaluated once.
pub fn minmax_table(n: usize, trials: usize, seed: u64) -> Result<Vec<MinMaxEstimate>> {
    minmax_table_for(&TransformKind::ALL, n, trials, seed)
}

/// [`minmax_table`] restricted to `kinds`, in the given order. Per-trial seeds
/// do not depend on which other families are requested.
pub fn minmax_table_for(
    kinds: &[TransformKind],
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<MinMaxEstimate>> {
    if n < 2 {
        return Err(KashinError::InvalidDimension(n));
    }
    if trials == 0 {
        return Err(KashinError::InvalidArgument(
            "at least one trial is required".into(),
        ));
    }
    let count = |kind: TransformKind| if kind == TransformKind::Dct { 1 } else { trials };
    let jobs: Vec<(TransformKind, usize)> = kinds
        .iter()
        .flat_map(|&kind| (0..count(kind)).map(move |t| (kind, t)))
        .collect();
    let values: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(kind, trial)| {
            let dim = evaluation_dim(kind, n);
            let op = OrthogonalOperator::generate(kind, dim, derive_seed(seed, kind, trial as u64))?;
            minmax_eig_estimate(&op)
        })
        .collect();

    let mut out = Vec::with_capacity(kinds.len());
    let mut iter = values.into_iter();
    for &kind in kinds {
        let per_trial = iter.by_ref().take(count(kind)).collect::<Result<Vec<_>>>()?;
        out.push(MinMaxEstimate::from_values(
            kind,
            evaluation_dim(kind, n),
            n,
            per_trial,
        ));
    }
    Ok(out)
}

/// Squared residual after one greedy step from the unit vector `x`:
/// `1 - max(‖x‖₁, ‖Qᵀx‖₁)² / n`, clamped at zero.
pub fn step_bound(x: &[f64], op: &OrthogonalOperator) -> Result<f64> {
    let n = op.dim();
    if x.len() != n {
        return Err(KashinError::shape(n, x.len()));
    }
    let norm = l2(x);
    if (norm - 1.0).abs() > 1e-10 {
        return Err(KashinError::InvalidArgument(format!(
            "step bound needs a unit vector, got norm {norm}"
        )));
    }
    let best = l1(x).max(l1(&op.apply_adjoint(x)?));
    Ok((1.0 - best * best / n as f64).max(0.0))
}
