use serde::{Deserialize, Serialize};

/// Which basis the greedy step projected onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// `sign(x)`, accumulated into `u`.
    IdentityBasis,
    /// `Q·sign(Qᵀx)`, accumulated into `v̂`.
    RotatedBasis,
}

impl Branch {
    pub fn code(self) -> u8 {
        match self {
            Branch::IdentityBasis => 0,
            Branch::RotatedBasis => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Branch::IdentityBasis),
            1 => Some(Branch::RotatedBasis),
            _ => None,
        }
    }
}

/// Per-iteration history of a greedy decomposition run.
///
/// All norms refer to the unit-normalized input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// `‖x_k‖₂` for `k = 0..=iterations`.
    pub residual_norms: Vec<f64>,
    pub branch_choices: Vec<Branch>,
    /// ℓ₁ norm of the chosen branch at each step; the projection removed at step `k`
    /// has squared norm `chosen_l1[k]² / n`.
    pub chosen_l1: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Stopped on the iteration budget with a relative residual above
    /// [`POOR_CONVERGENCE_THRESHOLD`](super::POOR_CONVERGENCE_THRESHOLD).
    pub poorly_converged: bool,
    /// Geometric mean of successive residual ratios; `None` before the first step.
    pub contraction_estimate: Option<f64>,
}

impl ConvergenceReport {
    pub(crate) fn empty() -> Self {
        Self {
            residual_norms: vec![0.0],
            branch_choices: Vec::new(),
            chosen_l1: Vec::new(),
            iterations: 0,
            converged: true,
            poorly_converged: false,
            contraction_estimate: None,
        }
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_norms.last().unwrap_or(&0.0)
    }

    pub(crate) fn finish(&mut self, tol: f64, poor_threshold: f64) {
        self.iterations = self.branch_choices.len();
        let last = self.final_residual();
        self.converged = last <= tol;
        self.poorly_converged = !self.converged && last > poor_threshold;
        self.contraction_estimate = if self.iterations == 0 {
            None
        } else {
            let first = self.residual_norms[0];
            Some((last / first).powf(1.0 / self.iterations as f64))
        };
    }
}
