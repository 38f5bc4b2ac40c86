use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::box_rule::GridPolicy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Subspace-accelerated gradient flow with Löwdin re-orthonormalization.
    Flow,
    /// Diagonalize, refill by aufbau, mix densities.
    Scf,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flow" => Ok(Engine::Flow),
            "scf" => Ok(Engine::Scf),
            other => Err(Error::InvalidParameter(format!("unknown engine '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub engine: Engine,
    pub grid: GridPolicy,
    pub el_tol: f64,
    pub eig_tol: f64,
    pub energy_tol: f64,
    pub max_iter: usize,
    pub mixing: f64,
    pub n_restarts: usize,
    pub seed: u64,
    /// Unoccupied vectors carried alongside the occupied ones.
    pub guard: usize,
    /// Monotonicity slack for the flow step.
    pub backtrack_slack: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            engine: Engine::Flow,
            grid: GridPolicy::default(),
            el_tol: 1e-7,
            eig_tol: 1e-8,
            energy_tol: 1e-12,
            max_iter: 3000,
            mixing: 0.3,
            n_restarts: 1,
            seed: 0,
            guard: 2,
            backtrack_slack: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.mixing > 0.0 && self.mixing <= 1.0) {
            return bad(format!("mixing must lie in (0, 1], got {}", self.mixing));
        }
        for (name, v) in [("el_tol", self.el_tol), ("eig_tol", self.eig_tol), ("energy_tol", self.energy_tol)] {
            if !(v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.n_restarts == 0 {
            return bad("n_restarts must be at least 1".into());
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        if let Some(l) = self.grid.box_length {
            if !(l > 0.0) {
                return bad(format!("box length must be positive, got {l}"));
            }
        }
        if let Some(n) = self.grid.grid_n {
            if n < 8 || n % 2 == 1 {
                return bad(format!("grid_n must be even and at least 8, got {n}"));
            }
        }
        let b = &self.grid.rule;
        if !(b.l_min > 0.0 && b.c_box >= 0.0 && b.decay_lengths >= 0.0 && b.points_per_decay > 0.0) {
            return bad("box policy parameters must be positive".into());
        }
        Ok(())
    }
}
