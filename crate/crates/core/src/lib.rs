pub mod bounds;
pub mod dimer;
pub mod error;
pub mod grid;
pub mod harness;
pub mod ledger;
pub mod linalg;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction, GridSpec};
