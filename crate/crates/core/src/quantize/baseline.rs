//! Direct quantizers applied to the raw matrix, for comparison.

use nalgebra::DMatrix;

use super::codebook::check_bits;
use super::kmeans::{kmeans, nearest_sorted};
use crate::error::{KashinError, Result};

/// Rounds every entry to the nearest of `2^bits` evenly spaced levels over
/// `[min(X), max(X)]`. A constant matrix maps to its single value.
pub fn direct_uniform(x: &DMatrix<f64>, bits: u8) -> Result<DMatrix<f64>> {
    check_bits(bits)?;
    check_finite(x)?;
    if x.is_empty() {
        return Ok(x.clone());
    }
    let lo = x.min();
    let hi = x.max();
    let steps = ((1u32 << bits) - 1) as f64;
    let step = (hi - lo) / steps;
    if step == 0.0 {
        return Ok(x.clone());
    }
    Ok(x.map(|v| {
        let level = ((v - lo) / step).round().clamp(0.0, steps);
        if level == steps {
            hi
        } else {
            lo + level * step
        }
    }))
}

/// 1-D k-means with `2^bits` centroids over the entries, then
/// nearest-centroid replacement.
pub fn direct_kmeans(x: &DMatrix<f64>, bits: u8, seed: u64) -> Result<DMatrix<f64>> {
    check_bits(bits)?;
    check_finite(x)?;
    if x.is_empty() {
        return Ok(x.clone());
    }
    let fit = kmeans(x.as_slice(), 1, 1usize << bits, seed);
    let mut centroids = fit.centroids;
    centroids.sort_by(f64::total_cmp);
    Ok(x.map(|v| centroids[nearest_sorted(v, &centroids).0]))
}

fn check_finite(x: &DMatrix<f64>) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(KashinError::InvalidInput("matrix has non-finite entries".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_entries_are_exact() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(direct_uniform(&x, 1).unwrap(), x);
        assert_eq!(direct_kmeans(&x, 1, 0).unwrap(), x);
    }

    #[test]
    fn uniform_grid_rounding() {
        let x = DMatrix::from_row_slice(1, 3, &[0.0, 0.4, 1.0]);
        let y = direct_uniform(&x, 1).unwrap();
        assert_eq!(y.as_slice(), &[0.0, 0.0, 1.0]);
        let y = direct_uniform(&x, 2).unwrap();
        assert!((y[(0, 1)] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constant_matrix_is_unchanged() {
        let x = DMatrix::from_element(3, 3, -2.5);
        assert_eq!(direct_uniform(&x, 3).unwrap(), x);
        assert_eq!(direct_kmeans(&x, 3, 0).unwrap(), x);
    }

    #[test]
    fn rejects_bad_bits() {
        let x = DMatrix::from_element(1, 1, 0.0);
        assert!(direct_uniform(&x, 0).is_err());
        assert!(direct_kmeans(&x, 9, 0).is_err());
    }
}
