use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bounds::{PCritical, PlaneWaveBound};
use crate::dimer::{GapPoint, InteractionCurve};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::ledger::{BindingLedger, BindingVerdict, Decomposition};
use crate::solver::ground::{BoxCheck, RestartRecord};
use crate::solver::{DiagnosticsReport, Engine, GroundStateResult, ModelParams};

use super::config::ExperimentSpec;

/// Bumped whenever the layout of [`RunRecord`] changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Everything about a ground state except the fields on the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    pub params: ModelParams,
    pub grid: GridSpec,
    pub energy: f64,
    pub mu: Vec<f64>,
    pub mu_next: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub engine: Engine,
    pub diagnostics: DiagnosticsReport,
    pub restarts: Vec<RestartRecord>,
    pub box_check: Option<BoxCheck>,
    pub max_orth_defect: f64,
    pub monotonicity_violations: usize,
}

impl From<&GroundStateResult> for StateSummary {
    fn from(r: &GroundStateResult) -> Self {
        Self {
            params: r.params,
            grid: r.grid.spec(),
            energy: r.energy,
            mu: r.mu.clone(),
            mu_next: r.mu_next,
            iterations: r.iterations,
            converged: r.converged,
            engine: r.engine,
            diagnostics: r.diagnostics.clone(),
            restarts: r.restarts.clone(),
            box_check: r.box_check.clone(),
            max_orth_defect: r.max_orth_defect,
            monotonicity_violations: r.monotonicity_violations,
        }
    }
}

impl StateSummary {
    /// Spread of the converged restart energies.
    pub fn restart_spread(&self) -> f64 {
        let e: Vec<f64> = self.restarts.iter().filter(|r| r.converged).map(|r| r.energy).collect();
        if e.is_empty() {
            return 0.0;
        }
        e.iter().cloned().fold(f64::MIN, f64::max) - e.iter().cloned().fold(f64::MAX, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mass: f64,
    pub state: Option<StateSummary>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn energy(&self) -> Option<f64> {
        self.state.as_ref().map(|s| s.energy)
    }

    pub fn converged(&self) -> bool {
        self.state.as_ref().is_some_and(|s| s.converged)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub n: u32,
    pub e_lt: f64,
    pub per_particle: f64,
    /// `J(1)` from the same table.
    pub i1: f64,
    pub slack: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BindingReport {
    pub ledger: BindingLedger,
    /// Values the ledger refused, with the reason.
    pub rejections: Vec<String>,
    pub verdicts: Vec<BindingVerdict>,
    pub binding_set: Vec<u32>,
    pub decompositions: Vec<Decomposition>,
    pub decomposition_errors: Vec<String>,
    pub sandwich: Vec<SandwichRow>,
    pub per_particle_non_increasing: bool,
    pub states: Vec<SweepRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub dim: usize,
    pub p: f64,
    pub c_tf: f64,
    pub c_lt: f64,
    pub c_lt_source: String,
    pub e_tf: f64,
    pub e_lt: f64,
    /// `I(d,p,1)` and `μ(1)` by radial shooting.
    pub i1: f64,
    pub mu1: f64,
    /// `I(d,p,1)` from the grid solver.
    pub i1_grid: f64,
    pub virial_grid: f64,
    pub rescaled_constant: f64,
    pub p_critical: Option<PCritical>,
    pub p_critical_error: Option<String>,
    pub plane_wave: Vec<PlaneWaveBound>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimerReport {
    pub state: StateSummary,
    pub curve: InteractionCurve,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Figure1Report {
    pub state: StateSummary,
    pub peaks: usize,
    pub peak_positions: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRow {
    pub n: u32,
    pub state: Option<StateSummary>,
    pub error: Option<String>,
    pub energy_per_n: Option<f64>,
    pub restart_spread: f64,
    pub peaks: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub rows: Vec<ClusterRow>,
    /// `J(N)/N` non-increasing up to the restart spread.
    pub non_increasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcavityPoint {
    pub mass: f64,
    /// Linear interpolation of the neighbours minus `J`: half the second
    /// difference on a uniform grid, so nonpositive where `J` is concave.
    pub defect: f64,
    pub slack: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Figure4Report {
    pub rows: Vec<SweepRow>,
    pub strictly_decreasing: bool,
    pub concavity: Vec<ConcavityPoint>,
    pub piecewise_concave: bool,
    /// `J(λ)/λ` is monotone over the grid.
    pub ratio_monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub points: Vec<GapPoint>,
    pub all_negative: bool,
    pub shrinking: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "kebab-case")]
pub enum Results {
    Solve(StateSummary),
    SweepLambda(Vec<SweepRow>),
    BindingTable(BindingReport),
    BoundsReport(BoundsReport),
    DimerCurve(DimerReport),
    Figure1(Figure1Report),
    Figure2(ClusterReport),
    Figure3(ClusterReport),
    Figure4(Figure4Report),
    GapVsP(GapReport),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub code_version: String,
    pub spec: ExperimentSpec,
    pub started_unix: u64,
    pub wall_time_s: f64,
    pub converged: bool,
    pub results: Results,
    /// Files written next to the record, relative to the output directory.
    pub files: Vec<String>,
}

impl RunRecord {
    pub fn load(path: &Path) -> Result<Self> {
        let rec: RunRecord = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if rec.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!(
                "record schema {} differs from supported {SCHEMA_VERSION}",
                rec.schema_version
            )));
        }
        Ok(rec)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
