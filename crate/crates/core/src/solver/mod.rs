//! Orthonormal-system ground states: energy, mean-field operator,
//! eigensolver and the minimization engines.

pub mod box_rule;
pub mod config;
pub mod eigen;
pub mod engine;
pub mod functional;
pub mod ground;
pub mod init;
pub mod model;

pub use box_rule::{BoxPolicy, GridPolicy};
pub use config::{Engine, SolverConfig};
pub use eigen::{lowest_eigenpairs, EigenOptions};
pub use functional::{density, energy, mean_field_apply};
pub use ground::{
    compute_diagnostics, count_local_maxima, solve_ground_state, solve_on_grid, sweep_mass, DiagnosticsReport,
    GroundStateResult, SweepPoint,
};
pub use model::{ModelParams, OrbitalSet};
