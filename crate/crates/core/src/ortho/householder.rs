use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::tally::OpCounter;
use crate::error::{KashinError, Result};

/// Reflection `I - 2yyᵀ` across the hyperplane orthogonal to the unit vector `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Householder {
    y: Vec<f64>,
}

impl Householder {
    /// Normalizes `y` to unit length. Rejects zero and non-finite vectors.
    /// A vector already of unit norm to rounding is kept bit for bit, so a
    /// stored reflection vector rebuilds the identical operator.
    pub fn new(y: &[f64]) -> Result<Self> {
        if y.is_empty() {
            return Err(KashinError::InvalidDimension(0));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(KashinError::InvalidArgument(
                "householder vector has non-finite entries".into(),
            ));
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(KashinError::InvalidArgument(
                "householder vector must be nonzero".into(),
            ));
        }
        if (norm - 1.0).abs() <= 4.0 * f64::EPSILON * (y.len() as f64).sqrt() {
            return Ok(Self { y: y.to_vec() });
        }
        Ok(Self {
            y: y.iter().map(|v| v / norm).collect(),
        })
    }

    /// Reflection vector drawn from a standard normal and normalized.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(KashinError::InvalidDimension(0));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            if y.iter().any(|&v| v != 0.0) {
                return Self::new(&y);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.y.len()
    }

    pub fn vector(&self) -> &[f64] {
        &self.y
    }

    /// `x ← x - 2⟨y, x⟩y`. The reflection is symmetric, so this is also the adjoint.
    pub(crate) fn reflect_in_place<C: OpCounter>(&self, x: &mut [f64], counter: &mut C) {
        let dot: f64 = self.y.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        let coef = 2.0 * dot;
        for (xi, yi) in x.iter_mut().zip(&self.y) {
            *xi -= coef * yi;
        }
        counter.mul_adds(2 * self.y.len() as u64);
    }
}
