use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans, nearest, nearest_sorted};
use crate::error::{KashinError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodebookMode {
    /// Independent scalar codebooks for the `U` and `V` factors.
    PerFactor,
    /// One codebook over `(u, v)` entry pairs.
    Joint2D,
}

impl CodebookMode {
    pub fn code(self) -> u8 {
        match self {
            CodebookMode::PerFactor => 0,
            CodebookMode::Joint2D => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(CodebookMode::PerFactor),
            1 => Some(CodebookMode::Joint2D),
            _ => None,
        }
    }

    /// Number of packed code streams an artifact carries.
    pub fn streams(self) -> usize {
        match self {
            CodebookMode::PerFactor => 2,
            CodebookMode::Joint2D => 1,
        }
    }
}

impl fmt::Display for CodebookMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodebookMode::PerFactor => "per-factor",
            CodebookMode::Joint2D => "joint2d",
        })
    }
}

impl FromStr for CodebookMode {
    type Err = KashinError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "per-factor" | "perfactor" | "factor" => Ok(CodebookMode::PerFactor),
            "joint2d" | "joint" | "2d" => Ok(CodebookMode::Joint2D),
            other => Err(KashinError::InvalidArgument(format!(
                "unknown codebook mode {other:?} (expected per-factor or joint2d)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Centroids {
    PerFactor { u: Vec<f32>, v: Vec<f32> },
    Joint2D(Vec<[f32; 2]>),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FitStats {
    pub inertia: f64,
    pub iterations: usize,
    pub seed: u64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub bits: u8,
    pub centroids: Centroids,
    pub fit_stats: FitStats,
}

pub(crate) fn check_bits(bits: u8) -> Result<()> {
    if !(1..=8).contains(&bits) {
        return Err(KashinError::InvalidArgument(format!(
            "bit width must be in 1..=8, got {bits}"
        )));
    }
    Ok(())
}

/// Fits a sorted scalar codebook of `2^bits` entries.
pub fn fit_scalar_codebook(values: &[f64], bits: u8, seed: u64) -> Result<(Vec<f32>, FitStats)> {
    check_bits(bits)?;
    if values.is_empty() {
        return Err(KashinError::InvalidArgument(
            "cannot fit a codebook to an empty stream".into(),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(KashinError::InvalidInput(
            "codebook input has non-finite values".into(),
        ));
    }
    let fit = kmeans(values, 1, 1usize << bits, seed);
    let mut centroids: Vec<f32> = fit.centroids.iter().map(|&c| c as f32).collect();
    centroids.sort_by(f32::total_cmp);
    Ok((
        centroids,
        FitStats {
            inertia: fit.inertia,
            iterations: fit.iterations,
            seed,
            degenerate: fit.degenerate,
        },
    ))
}

/// Fits a codebook to the `U`- and `V`-factor streams.
pub fn fit_codebook(
    u: &[f64],
    v: &[f64],
    bits: u8,
    mode: CodebookMode,
    seed: u64,
) -> Result<Codebook> {
    check_bits(bits)?;
    match mode {
        CodebookMode::PerFactor => {
            let (cu, su) = fit_scalar_codebook(u, bits, seed)?;
            let (cv, sv) = fit_scalar_codebook(v, bits, seed.wrapping_add(1))?;
            Ok(Codebook {
                bits,
                centroids: Centroids::PerFactor { u: cu, v: cv },
                fit_stats: FitStats {
                    inertia: su.inertia + sv.inertia,
                    iterations: su.iterations.max(sv.iterations),
                    seed,
                    degenerate: su.degenerate || sv.degenerate,
                },
            })
        }
        CodebookMode::Joint2D => {
            if u.len() != v.len() {
                return Err(KashinError::shape(u.len(), v.len()));
            }
            if u.is_empty() {
                return Err(KashinError::InvalidArgument(
                    "cannot fit a codebook to an empty stream".into(),
                ));
            }
            if u.iter().chain(v).any(|x| !x.is_finite()) {
                return Err(KashinError::InvalidInput(
                    "codebook input has non-finite values".into(),
                ));
            }
            let points: Vec<f64> = u.iter().zip(v).flat_map(|(&a, &b)| [a, b]).collect();
            let fit = kmeans(&points, 2, 1usize << bits, seed);
            Ok(Codebook {
                bits,
                centroids: Centroids::Joint2D(
                    fit.centroids
                        .chunks_exact(2)
                        .map(|c| [c[0] as f32, c[1] as f32])
                        .collect(),
                ),
                fit_stats: FitStats {
                    inertia: fit.inertia,
                    iterations: fit.iterations,
                    seed,
                    degenerate: fit.degenerate,
                },
            })
        }
    }
}

impl Codebook {
    pub fn mode(&self) -> CodebookMode {
        match self.centroids {
            Centroids::PerFactor { .. } => CodebookMode::PerFactor,
            Centroids::Joint2D(_) => CodebookMode::Joint2D,
        }
    }

    /// Entries per list: `2^bits`.
    pub fn len(&self) -> usize {
        match &self.centroids {
            Centroids::PerFactor { u, .. } => u.len(),
            Centroids::Joint2D(pairs) => pairs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn validate(&self) -> Result<()> {
        check_bits(self.bits)?;
        let k = 1usize << self.bits;
        let ok = match &self.centroids {
            Centroids::PerFactor { u, v } => u.len() == k && v.len() == k,
            Centroids::Joint2D(pairs) => pairs.len() == k,
        };
        if !ok {
            return Err(KashinError::InvalidInput(format!(
                "codebook must hold {k} centroids per list"
            )));
        }
        Ok(())
    }

    /// Nearest-centroid codes for the factor streams. PerFactor returns two
    /// streams, Joint2D one.
    pub(crate) fn assign(&self, u: &[f64], v: &[f64]) -> (Vec<u8>, Option<Vec<u8>>) {
        match &self.centroids {
            Centroids::PerFactor { u: cu, v: cv } => {
                let cu: Vec<f64> = cu.iter().map(|&c| c as f64).collect();
                let cv: Vec<f64> = cv.iter().map(|&c| c as f64).collect();
                let codes_u = u.iter().map(|&x| nearest_sorted(x, &cu).0 as u8).collect();
                let codes_v = v.iter().map(|&x| nearest_sorted(x, &cv).0 as u8).collect();
                (codes_u, Some(codes_v))
            }
            Centroids::Joint2D(pairs) => {
                let flat: Vec<f64> = pairs.iter().flat_map(|p| [p[0] as f64, p[1] as f64]).collect();
                let codes = u
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| nearest(&[a, b], &flat, 2).0 as u8)
                    .collect();
                (codes, None)
            }
        }
    }

    /// Centroid values `(u, v)` for code(s) at one position.
    #[inline]
    pub(crate) fn lookup(&self, code_u: u8, code_v: u8) -> (f64, f64) {
        match &self.centroids {
            Centroids::PerFactor { u, v } => (u[code_u as usize] as f64, v[code_v as usize] as f64),
            Centroids::Joint2D(pairs) => {
                let p = pairs[code_u as usize];
                (p[0] as f64, p[1] as f64)
            }
        }
    }
}
