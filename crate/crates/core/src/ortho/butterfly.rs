//! Butterfly matrices `Q = B_n B_{n/2} ⋯ B_2`.
//!
//! Each factor `B_k` is block diagonal with `n/k` blocks of size `k`. A block
//! has the form `[[D₁, D₂], [D₃, D₄]]` with diagonal `k/2 × k/2` entries; here
//! every block is a scaled 2×2 orthogonal matrix `[[c, -s], [s, c]]` (rotation)
//! or `[[c, s], [s, -c]]` (reflection) repeated along the diagonals, so each
//! block and therefore `Q` is orthogonal by construction.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tally::OpCounter;
use crate::error::{FormatError, KashinError, Result};

/// Parameters of one butterfly factor `F_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockParam {
    pub angle: f64,
    pub reflect: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct Level {
    /// Block size `k`.
    block: usize,
    params: Vec<BlockParam>,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Level {
    fn new(block: usize, params: Vec<BlockParam>) -> Self {
        let cos = params.iter().map(|p| p.angle.cos()).collect();
        let sin = params.iter().map(|p| p.angle.sin()).collect();
        Self {
            block,
            params,
            cos,
            sin,
        }
    }

    fn apply<C: OpCounter>(&self, x: &mut [f64], transpose: bool, counter: &mut C) {
        let half = self.block / 2;
        for (b, chunk) in x.chunks_exact_mut(self.block).enumerate() {
            let (c, s) = (self.cos[b], self.sin[b]);
            let (top, bottom) = chunk.split_at_mut(half);
            if self.params[b].reflect {
                for (t, d) in top.iter_mut().zip(bottom.iter_mut()) {
                    let (a, e) = (*t, *d);
                    *t = c * a + s * e;
                    *d = s * a - c * e;
                }
            } else if transpose {
                for (t, d) in top.iter_mut().zip(bottom.iter_mut()) {
                    let (a, e) = (*t, *d);
                    *t = c * a + s * e;
                    *d = c * e - s * a;
                }
            } else {
                for (t, d) in top.iter_mut().zip(bottom.iter_mut()) {
                    let (a, e) = (*t, *d);
                    *t = c * a - s * e;
                    *d = s * a + c * e;
                }
            }
        }
        counter.mul_adds(2 * x.len() as u64);
    }
}

/// The factors of a butterfly matrix, stored in product order `B_n, …, B_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ButterflyFactorSet {
    n: usize,
    levels: Vec<Level>,
}

impl ButterflyFactorSet {
    fn check_dim(n: usize) -> Result<()> {
        if n < 2 || !n.is_power_of_two() {
            return Err(KashinError::UnsupportedDimension {
                dim: n,
                reason: "butterfly matrices need n = 2^m with m >= 1",
            });
        }
        Ok(())
    }

    /// Draws one uniform angle in `[0, 2π)` and one fair reflection bit per block.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        Self::check_dim(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut level_params = Vec::new();
        let mut block = n;
        while block >= 2 {
            let params = (0..n / block)
                .map(|_| BlockParam {
                    angle: rng.random::<f64>() * TAU,
                    reflect: rng.random::<bool>(),
                })
                .collect();
            level_params.push(params);
            block /= 2;
        }
        Self::from_level_params(n, level_params)
    }

    /// `level_params[l]` holds the `2^l` block parameters of `B_{n / 2^l}`.
    pub fn from_level_params(n: usize, level_params: Vec<Vec<BlockParam>>) -> Result<Self> {
        Self::check_dim(n)?;
        let depth = n.trailing_zeros() as usize;
        if level_params.len() != depth {
            return Err(KashinError::InvalidArgument(format!(
                "butterfly of size {n} needs {depth} factors, got {}",
                level_params.len()
            )));
        }
        let mut levels = Vec::with_capacity(depth);
        for (l, params) in level_params.into_iter().enumerate() {
            let block = n >> l;
            if params.len() != n / block {
                return Err(KashinError::InvalidArgument(format!(
                    "factor B_{block} needs {} blocks, got {}",
                    n / block,
                    params.len()
                )));
            }
            if params.iter().any(|p| !p.angle.is_finite()) {
                return Err(KashinError::InvalidArgument(
                    "non-finite butterfly angle".into(),
                ));
            }
            levels.push(Level::new(block, params));
        }
        Ok(Self { n, levels })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of factor matrices, `log₂ n`.
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Block sizes of the factors in product order.
    pub fn block_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.block).collect()
    }

    pub fn level_params(&self) -> Vec<Vec<BlockParam>> {
        self.levels.iter().map(|l| l.params.clone()).collect()
    }

    /// `x ← Qx`: factors are applied right to left, `B_2` first.
    pub(crate) fn apply_in_place<C: OpCounter>(&self, x: &mut [f64], counter: &mut C) {
        for level in self.levels.iter().rev() {
            level.apply(x, false, counter);
        }
    }

    /// `x ← Qᵀx = B_2ᵀ ⋯ B_nᵀ x`.
    pub(crate) fn apply_adjoint_in_place<C: OpCounter>(&self, x: &mut [f64], counter: &mut C) {
        for level in &self.levels {
            level.apply(x, true, counter);
        }
    }

    /// Dense `n × n` materialization of the factor at `index` in product order.
    pub fn factor_dense(&self, index: usize) -> Option<nalgebra::DMatrix<f64>> {
        let level = self.levels.get(index)?;
        let n = self.n;
        let mut m = nalgebra::DMatrix::<f64>::identity(n, n);
        for j in 0..n {
            let mut col = m.column(j).iter().copied().collect::<Vec<_>>();
            level.apply(&mut col, false, &mut ());
            m.column_mut(j).copy_from_slice(&col);
        }
        Some(m)
    }

    /// Dense block `F_i` of the factor at `index`.
    pub fn block_dense(&self, index: usize, block: usize) -> Option<nalgebra::DMatrix<f64>> {
        let level = self.levels.get(index)?;
        let k = level.block;
        if block >= self.n / k {
            return None;
        }
        let full = self.factor_dense(index)?;
        Some(full.view((block * k, block * k), (k, k)).into_owned())
    }

    pub(crate) fn to_blob(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity((self.n - 1) * 9);
        for level in &self.levels {
            for p in &level.params {
                out.extend_from_slice(&p.angle.to_le_bytes());
                out.push(p.reflect as u8);
            }
        }
        out
    }

    pub(crate) fn from_blob(n: usize, blob: &[u8]) -> Result<Self> {
        Self::check_dim(n)?;
        let expected = (n - 1) * 9;
        if blob.len() != expected {
            return Err(FormatError::Malformed(format!(
                "butterfly parameter blob has {} bytes, expected {expected}",
                blob.len()
            ))
            .into());
        }
        let mut records = blob.chunks_exact(9);
        let mut level_params = Vec::new();
        let mut block = n;
        while block >= 2 {
            let mut params = Vec::with_capacity(n / block);
            for _ in 0..n / block {
                let rec = records.next().expect("blob length checked");
                let angle = f64::from_le_bytes(rec[..8].try_into().expect("8 bytes"));
                let reflect = match rec[8] {
                    0 => false,
                    1 => true,
                    other => {
                        return Err(FormatError::Malformed(format!(
                            "invalid reflection flag {other}"
                        ))
                        .into())
                    }
                };
                params.push(BlockParam { angle, reflect });
            }
            level_params.push(params);
            block /= 2;
        }
        Self::from_level_params(n, level_params).map_err(|e| match e {
            KashinError::InvalidArgument(msg) => FormatError::Malformed(msg).into(),
            other => other,
        })
    }
}
