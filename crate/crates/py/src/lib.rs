//! Python bindings. Structured reports cross the boundary as JSON and come
//! back as plain dicts.

use std::path::PathBuf;

use fnls::bounds::{self, MemoizedI1};
use fnls::harness::{self, ExperimentSpec, Kind, RawConfig};
use fnls::scalar::{self, ScalarOptions};
use fnls::solver::{self, GridPolicy, GroundStateResult, SolverConfig};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: fnls::Error) -> PyErr {
    match e {
        fnls::Error::Config { .. }
        | fnls::Error::InvalidParameter(_)
        | fnls::Error::InvalidGrid(_)
        | fnls::Error::GridMismatch(_)
        | fnls::Error::ExponentOutOfRange { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_dict<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Periodic box `[-L/2, L/2)^d` with `n` points per axis.
#[pyclass(name = "Grid", module = "fnls", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid(fnls::Grid);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(dim: usize, length: f64, n: usize) -> PyResult<Self> {
        fnls::Grid::new(dim, length, n).map(Self).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn length(&self) -> f64 {
        self.0.length()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// Axis coordinates `-L/2 + j h`.
    fn coordinates(&self) -> Vec<f64> {
        (0..self.0.n()).map(|j| self.0.coordinate(j)).collect()
    }

    fn dot(&self, f: Vec<f64>, g: Vec<f64>) -> PyResult<f64> {
        self.check(&f)?;
        self.check(&g)?;
        Ok(self.0.dot(&f, &g))
    }

    fn kinetic(&self, f: Vec<f64>) -> PyResult<f64> {
        self.check(&f)?;
        Ok(self.0.kinetic(&f))
    }

    fn neg_laplacian(&self, f: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check(&f)?;
        Ok(self.0.neg_laplacian(&f))
    }

    fn translate(&self, f: Vec<f64>, shift: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check(&f)?;
        if shift.len() != self.0.dim() {
            return Err(PyValueError::new_err(format!("shift needs {} components", self.0.dim())));
        }
        Ok(self.0.translate(&f, &shift))
    }

    fn __repr__(&self) -> String {
        format!("Grid(dim={}, length={}, n={})", self.0.dim(), self.0.length(), self.0.n())
    }
}

impl PyGrid {
    fn check(&self, f: &[f64]) -> PyResult<()> {
        if f.len() != self.0.len() {
            return Err(PyValueError::new_err(format!("expected {} values, got {}", self.0.len(), f.len())));
        }
        Ok(())
    }
}

/// Dimension, exponent and mass `λ`.
#[pyclass(name = "ModelParams", module = "fnls", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModelParams(solver::ModelParams);

#[pymethods]
impl PyModelParams {
    #[new]
    fn new(dim: usize, p: f64, mass: f64) -> PyResult<Self> {
        solver::ModelParams::new(dim, p, mass).map(Self).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim
    }

    #[getter]
    fn p(&self) -> f64 {
        self.0.p
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.0.mass
    }

    fn occupations(&self) -> Vec<f64> {
        self.0.occupations()
    }

    fn __repr__(&self) -> String {
        format!("ModelParams(dim={}, p={}, mass={})", self.0.dim, self.0.p, self.0.mass)
    }
}

#[pyclass(name = "GroundState", module = "fnls", frozen)]
struct PyGroundState(GroundStateResult);

#[pymethods]
impl PyGroundState {
    #[getter]
    fn energy(&self) -> f64 {
        self.0.energy
    }

    #[getter]
    fn mu(&self) -> Vec<f64> {
        self.0.mu.clone()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.0.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.0.iterations
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(self.0.grid.clone())
    }

    #[getter]
    fn density(&self) -> Vec<f64> {
        self.0.density.values().to_vec()
    }

    #[getter]
    fn occupations(&self) -> Vec<f64> {
        self.0.orbitals.occupations().to_vec()
    }

    fn orbitals(&self) -> Vec<Vec<f64>> {
        self.0.orbitals.raw()
    }

    fn energy_history(&self) -> Vec<f64> {
        self.0.energy_history.clone()
    }

    fn diagnostics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.0.diagnostics)
    }

    fn __repr__(&self) -> String {
        format!("GroundState(energy={}, converged={}, mu={:?})", self.0.energy, self.0.converged, self.0.mu)
    }
}

/// Ground state for `J(λ)`. A box length or point count, when given, fixes
/// that part of the grid; the rest follows the box rule.
#[pyfunction]
#[pyo3(signature = (params, *, n_restarts=1, seed=0, max_iter=None, box_length=None, grid_n=None))]
fn solve_ground_state(
    py: Python<'_>,
    params: &PyModelParams,
    n_restarts: usize,
    seed: u64,
    max_iter: Option<usize>,
    box_length: Option<f64>,
    grid_n: Option<usize>,
) -> PyResult<PyGroundState> {
    let mut cfg = SolverConfig { n_restarts, seed, ..SolverConfig::default() };
    if let Some(m) = max_iter {
        cfg.max_iter = m;
    }
    cfg.grid = GridPolicy { box_length, grid_n, ..GridPolicy::default() };
    let p = params.0.clone();
    py.detach(move || solver::solve_ground_state(&p, &cfg)).map(PyGroundState).map_err(err)
}

/// `(I(d,p,1), μ_1)` from radial shooting.
#[pyfunction]
fn radial_ground_state(py: Python<'_>, dim: usize, p: f64) -> PyResult<(f64, f64)> {
    let r = py.detach(|| scalar::radial_ground_state(dim, p)).map_err(err)?;
    Ok((r.i1, r.mu1))
}

/// Scalar ground state on the default grid, as a dict.
#[pyfunction]
fn solve_scalar<'py>(py: Python<'py>, dim: usize, p: f64) -> PyResult<Bound<'py, PyAny>> {
    let s = py.detach(|| scalar::solve_scalar(dim, p, &ScalarOptions::default())).map_err(err)?;
    to_dict(py, &s)
}

#[pyfunction]
fn energy_exponent(dim: usize, p: f64) -> PyResult<f64> {
    scalar::energy_exponent(dim, p).map_err(err)
}

#[pyfunction]
fn c_tf(dim: usize) -> PyResult<f64> {
    bounds::c_tf(dim).map_err(err)
}

#[pyfunction]
fn e_tf(dim: usize, p: f64) -> PyResult<f64> {
    bounds::e_tf(dim, p).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (dim, p, c_lt=None))]
fn e_lt(dim: usize, p: f64, c_lt: Option<f64>) -> PyResult<f64> {
    let c = match c_lt {
        Some(c) => c,
        None => bounds::default_c_lt(dim).map_err(err)?.value,
    };
    bounds::e_lt(dim, p, c).map_err(err)
}

/// Shipped Lieb-Thirring constant with its source.
#[pyfunction]
fn default_c_lt<'py>(py: Python<'py>, dim: usize) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &bounds::default_c_lt(dim).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (dim, c_lt=None, spacing=0.02))]
fn p_critical<'py>(py: Python<'py>, dim: usize, c_lt: Option<f64>, spacing: f64) -> PyResult<Bound<'py, PyAny>> {
    let c = match c_lt {
        Some(c) => c,
        None => bounds::default_c_lt(dim).map_err(err)?.value,
    };
    let pc = py
        .detach(|| MemoizedI1::build(dim, spacing).and_then(|memo| bounds::p_critical(dim, c, |q| memo.eval(q))))
        .map_err(err)?;
    to_dict(py, &pc)
}

#[pyfunction]
fn plane_wave_upper_bound<'py>(
    py: Python<'py>,
    dim: usize,
    p: f64,
    particles: usize,
    length: f64,
    eps: f64,
) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &bounds::plane_wave_upper_bound(dim, p, particles, length, eps).map_err(err)?)
}

/// Runs a harness verb on key-value config text; returns the run record.
#[pyfunction]
#[pyo3(signature = (kind, config="", out="out"))]
fn run<'py>(py: Python<'py>, kind: &str, config: &str, out: &str) -> PyResult<Bound<'py, PyAny>> {
    let kind: Kind = kind.parse().map_err(err)?;
    let raw = RawConfig::parse(config).map_err(err)?;
    let spec = ExperimentSpec::resolve(Some(kind), &raw, PathBuf::from(out)).map_err(err)?;
    let rec = py.detach(|| harness::run(&spec)).map_err(err)?;
    to_dict(py, &rec)
}

#[pymodule]
#[pyo3(name = "fnls")]
fn fnls_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyGroundState>()?;
    m.add_function(wrap_pyfunction!(solve_ground_state, m)?)?;
    m.add_function(wrap_pyfunction!(radial_ground_state, m)?)?;
    m.add_function(wrap_pyfunction!(solve_scalar, m)?)?;
    m.add_function(wrap_pyfunction!(energy_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(c_tf, m)?)?;
    m.add_function(wrap_pyfunction!(e_tf, m)?)?;
    m.add_function(wrap_pyfunction!(e_lt, m)?)?;
    m.add_function(wrap_pyfunction!(default_c_lt, m)?)?;
    m.add_function(wrap_pyfunction!(p_critical, m)?)?;
    m.add_function(wrap_pyfunction!(plane_wave_upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("SCHEMA_VERSION", harness::SCHEMA_VERSION)?;
    Ok(())
}
