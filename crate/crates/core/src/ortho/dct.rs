//! Orthonormal DCT-II.
//!
//! The operator matrix has entries
//!
//! ```text
//! Q[i, 0] = 1/√n
//! Q[i, j] = √(2/n) · cos(π(2i+1)j / 2n)      j > 0
//! ```
//!
//! so its columns are the cosine basis vectors. `Qᵀx` is the forward DCT-II
//! of `x` and `Qx` is the inverse (DCT-III). Both directions are evaluated
//! through a complex FFT of length `2n`; a direct `O(n²)` evaluation driven by
//! a `4n`-entry cosine table is kept as the reference path.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::tally::OpCounter;
use crate::error::{KashinError, Result};

#[derive(Clone)]
pub struct Dct {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    /// `e^{-iπj/2n}` for `j < n`.
    twiddles: Vec<Complex64>,
    /// `cos(πm/2n)` for `m < 4n`.
    cos_table: Vec<f64>,
    first_scale: f64,
    rest_scale: f64,
}

impl fmt::Debug for Dct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dct").field("n", &self.n).finish_non_exhaustive()
    }
}

impl PartialEq for Dct {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl Dct {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(KashinError::InvalidDimension(0));
        }
        let fft = FftPlanner::<f64>::new().plan_fft_forward(2 * n);
        let twiddles = (0..n)
            .map(|j| Complex64::from_polar(1.0, -PI * j as f64 / (2 * n) as f64))
            .collect();
        let cos_table = (0..4 * n)
            .map(|m| (PI * m as f64 / (2 * n) as f64).cos())
            .collect();
        Ok(Self {
            n,
            fft,
            twiddles,
            cos_table,
            first_scale: 1.0 / (n as f64).sqrt(),
            rest_scale: (2.0 / n as f64).sqrt(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn column_scale(&self, j: usize) -> f64 {
        if j == 0 {
            self.first_scale
        } else {
            self.rest_scale
        }
    }

    /// Entry `Q[i, j]` evaluated from the closed form.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let n = self.n as f64;
        self.column_scale(j) * (PI * ((2 * i + 1) * j) as f64 / (2.0 * n)).cos()
    }

    fn scratch_buffers<C: OpCounter>(&self, counter: &mut C) -> (Vec<Complex64>, Vec<Complex64>) {
        let len = 2 * self.n;
        let scratch_len = self.fft.get_inplace_scratch_len();
        counter.scratch(2 * len);
        if scratch_len > 0 {
            counter.scratch(2 * scratch_len);
        }
        (
            vec![Complex64::new(0.0, 0.0); len],
            vec![Complex64::new(0.0, 0.0); scratch_len],
        )
    }

    /// `x ← Qᵀx` (forward DCT-II).
    pub(crate) fn forward_in_place<C: OpCounter>(&self, x: &mut [f64], counter: &mut C) {
        let (mut buf, mut scratch) = self.scratch_buffers(counter);
        for (b, &v) in buf.iter_mut().zip(x.iter()) {
            *b = Complex64::new(v, 0.0);
        }
        self.fft.process_with_scratch(&mut buf, &mut scratch);
        for (j, out) in x.iter_mut().enumerate() {
            *out = self.column_scale(j) * (self.twiddles[j] * buf[j]).re;
        }
    }

    /// `x ← Qx` (inverse, DCT-III).
    pub(crate) fn inverse_in_place<C: OpCounter>(&self, x: &mut [f64], counter: &mut C) {
        let (mut buf, mut scratch) = self.scratch_buffers(counter);
        // Forward FFT of the conjugated sequence; only real parts are kept,
        // which are unaffected by the outer conjugation.
        for (j, &v) in x.iter().enumerate() {
            buf[j] = self.twiddles[j] * (self.column_scale(j) * v);
        }
        self.fft.process_with_scratch(&mut buf, &mut scratch);
        for (out, b) in x.iter_mut().zip(buf.iter()) {
            *out = b.re;
        }
    }

    /// Reference `O(n²)` evaluation of `Qx` (or `Qᵀx` when `adjoint`).
    pub fn apply_direct(&self, x: &[f64], adjoint: bool) -> Result<Vec<f64>> {
        let n = self.n;
        if x.len() != n {
            return Err(KashinError::shape(n, x.len()));
        }
        let period = 4 * n;
        let mut out = vec![0.0; n];
        if adjoint {
            for (j, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (i, &xi) in x.iter().enumerate() {
                    acc += xi * self.cos_table[((2 * i + 1) * j) % period];
                }
                *o = self.column_scale(j) * acc;
            }
        } else {
            for (i, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, &xj) in x.iter().enumerate() {
                    acc += self.column_scale(j) * xj * self.cos_table[((2 * i + 1) * j) % period];
                }
                *o = acc;
            }
        }
        Ok(out)
    }
}
