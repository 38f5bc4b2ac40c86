use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::mu_n_bounds;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::linalg::{self, Block};
use crate::scalar::radial_ground_state;

use super::box_rule::{enlarged, grid_for, mu_estimate};
use super::config::{Engine, SolverConfig};
use super::eigen::{eigenpairs_for_potential, EigenOptions};
use super::engine::{flow, scf, EngineOutcome, EngineSettings};
use super::functional::{density_raw, energy_parts, potential};
use super::init::initial_frame;
use super::model::{ModelParams, OrbitalSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuBoundsCheck {
    pub lower: f64,
    pub upper: f64,
    pub mu_n: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Fitted rate, absent when the tail window was too short.
    pub rate: Option<f64>,
    pub target: f64,
    pub window: (f64, f64),
    pub skipped: bool,
}

impl DecayFit {
    pub fn relative_error(&self) -> Option<f64> {
        self.rate.map(|r| (r - self.target).abs() / self.target)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub kinetic: f64,
    pub interaction_integral: f64,
    pub virial_residual: f64,
    pub el_residuals: Vec<f64>,
    /// Lowest `N + 1` eigenvalues of the converged mean-field operator.
    pub spectrum: Vec<f64>,
    /// `μ_{N+1} - μ_N` from the mean-field spectrum.
    pub aufbau_margin: f64,
    /// Largest gap between an occupied multiplier and its eigenvalue slot.
    pub occupied_mismatch: f64,
    pub aufbau_verified: bool,
    pub near_degenerate: bool,
    pub first_gap: Option<f64>,
    pub mu_bounds: MuBoundsCheck,
    pub mu_bounds_ok: bool,
    pub decay_rate_fit: DecayFit,
    pub orthonormality_defect: f64,
    pub local_maxima: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub index: usize,
    pub energy: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub warm: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxCheck {
    pub length: f64,
    pub n: usize,
    pub energy: f64,
    pub relative_change: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug)]
pub struct GroundStateResult {
    pub params: ModelParams,
    pub energy: f64,
    pub orbitals: OrbitalSet,
    /// Occupied multipliers `μ_1..μ_N`.
    pub mu: Vec<f64>,
    /// `μ_{N+1}` of the converged mean field.
    pub mu_next: Option<f64>,
    pub density: GridFunction,
    pub diagnostics: DiagnosticsReport,
    pub grid: Grid,
    pub iterations: usize,
    pub converged: bool,
    pub engine: Engine,
    pub restarts: Vec<RestartRecord>,
    pub box_check: Option<BoxCheck>,
    pub energy_history: Vec<f64>,
    pub max_orth_defect: f64,
    pub monotonicity_violations: usize,
    /// Full block (occupied plus guard vectors), kept for warm starts.
    pub(crate) block: Block,
}

/// Strict local maxima of a grid field above `rel_floor · max`, comparing
/// against all `3^d - 1` periodic neighbours.
pub fn count_local_maxima(rho: &GridFunction, rel_floor: f64) -> usize {
    local_maxima(rho, rel_floor).len()
}

pub fn local_maxima(rho: &GridFunction, rel_floor: f64) -> Vec<usize> {
    let grid = rho.grid();
    let v = rho.values();
    let floor = rel_floor * rho.max();
    let dim = grid.dim();
    let n = grid.n() as isize;
    let offsets: Vec<[isize; 3]> = (0..3usize.pow(dim as u32))
        .map(|c| {
            let mut o = [0isize; 3];
            let mut c = c;
            for slot in o.iter_mut().take(dim) {
                *slot = (c % 3) as isize - 1;
                c /= 3;
            }
            o
        })
        .filter(|o| o.iter().any(|&x| x != 0))
        .collect();
    (0..grid.len())
        .filter(|&idx| {
            let x = v[idx];
            if x <= floor {
                return false;
            }
            let mi = grid.multi_index(idx);
            offsets.iter().all(|o| {
                let mut nb = [0usize; 3];
                for a in 0..dim {
                    nb[a] = ((mi[a] as isize + o[a]).rem_euclid(n)) as usize;
                }
                v[grid.flat_index(nb)] < x
            })
        })
        .collect()
}

/// Circular mean position of a nonnegative field, per axis.
pub(crate) fn periodic_center(grid: &Grid, rho: &[f64]) -> [f64; 3] {
    let mut center = [0.0; 3];
    let l = grid.length();
    for (a, c) in center.iter_mut().enumerate().take(grid.dim()) {
        let (mut s, mut co) = (0.0, 0.0);
        for (idx, &r) in rho.iter().enumerate() {
            let theta = 2.0 * std::f64::consts::PI * (grid.point(idx)[a] + l / 2.0) / l;
            s += r * theta.sin();
            co += r * theta.cos();
        }
        *c = s.atan2(co) * l / (2.0 * std::f64::consts::PI) - l / 2.0;
    }
    center
}

/// Radial average of `ρ` around its periodic centre, bins of width `h`.
fn radial_profile(grid: &Grid, rho: &[f64]) -> Vec<(f64, f64)> {
    let c = periodic_center(grid, rho);
    let h = grid.spacing();
    let l = grid.length();
    let bins = grid.n() / 2 + 1;
    let mut sum = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for (idx, &r) in rho.iter().enumerate() {
        let x = grid.point(idx);
        let dist2: f64 = (0..grid.dim())
            .map(|a| {
                let mut dx = x[a] - c[a];
                dx -= l * (dx / l).round();
                dx * dx
            })
            .sum();
        let b = (dist2.sqrt() / h).round() as usize;
        if b < bins {
            sum[b] += r;
            count[b] += 1;
        }
    }
    (0..bins).filter(|&b| count[b] > 0).map(|b| (b as f64 * h, sum[b] / count[b] as f64)).collect()
}

/// Least-squares slope of `log(ρ̄(r)(1+r)^{d-1})` over the tail window.
pub fn fit_decay(grid: &Grid, rho: &[f64], mu_n: f64) -> DecayFit {
    let kappa = (-mu_n).max(0.0).sqrt();
    let target = 2.0 * kappa;
    let profile = radial_profile(grid, rho);
    let top = profile.iter().map(|&(_, v)| v).fold(0.0, f64::max);
    let r_cap = if kappa > 0.0 { 0.5 * grid.length() - 1.5 / kappa } else { 0.0 };
    let start = profile.iter().rposition(|&(_, v)| v >= 1e-6 * top).map(|i| i + 1);
    let points: Vec<(f64, f64)> = match start {
        Some(s) => profile[s..]
            .iter()
            .filter(|&&(r, v)| r <= r_cap && v > 1e-14 * top)
            .map(|&(r, v)| (r, (v * (1.0 + r).powi(grid.dim() as i32 - 1)).ln()))
            .collect(),
        None => Vec::new(),
    };
    let window = (points.first().map_or(0.0, |p| p.0), points.last().map_or(0.0, |p| p.0));
    if points.len() < 5 || kappa == 0.0 || window.1 - window.0 < 2.0 / kappa {
        return DecayFit { rate: None, target, window, skipped: true };
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    DecayFit { rate: Some(-sxy / sxx), target, window, skipped: false }
}

fn settings(cfg: &SolverConfig, seed: u64) -> EngineSettings {
    EngineSettings {
        el_tol: cfg.el_tol,
        eig_tol: cfg.eig_tol,
        energy_tol: cfg.energy_tol,
        max_iter: cfg.max_iter,
        mixing: cfg.mixing,
        slack: cfg.backtrack_slack,
        seed,
    }
}

/// Width of the starting ladder: one estimated decay length, stretched by
/// `N^{1/(2d)}`.
fn ladder_width(params: &ModelParams) -> Result<f64> {
    let decay = 1.0 / mu_estimate(params.dim, params.p)?.abs().sqrt();
    Ok(decay * (params.orbital_count() as f64).powf(0.5 / params.dim as f64))
}

fn complete_block(grid: &Grid, mut block: Block, m: usize, sigma: f64, seed: u64) -> Block {
    block.truncate(m);
    if block.len() < m {
        block.extend(initial_frame(grid, m, sigma, seed, 1).into_iter().take(m - block.len()));
    }
    let c = linalg::orthonormal_coefficients(&linalg::gram(grid, &block), 1e-10);
    let mut block = linalg::combine(&block, &c);
    let mut k = 2;
    while block.len() < m {
        block.extend(initial_frame(grid, m, sigma, seed, k).into_iter().take(m - block.len()));
        let c = linalg::orthonormal_coefficients(&linalg::gram(grid, &block), 1e-10);
        block = linalg::combine(&block, &c);
        k += 1;
    }
    let _ = linalg::lowdin_orthonormalize(grid, &mut block, 1e-14);
    block
}

/// Minimizes on a fixed grid. `warm` adds one extra candidate started
/// from a previous block on the same grid.
pub fn solve_on_grid(
    params: &ModelParams,
    cfg: &SolverConfig,
    grid: &Grid,
    warm: Option<&[Vec<f64>]>,
) -> Result<GroundStateResult> {
    cfg.validate()?;
    let occ = params.occupations();
    let n = occ.len();
    let m = (n + cfg.guard.max(1)).min(grid.len());
    let sigma = ladder_width(params)?;
    let run = |init: Block, seed: u64| -> EngineOutcome {
        let s = settings(cfg, seed);
        match cfg.engine {
            Engine::Flow => flow(grid, init, &occ, params.p, &s),
            Engine::Scf => scf(grid, init, &occ, params.p, &s),
        }
    };
    let mut outcomes: Vec<(RestartRecord, EngineOutcome)> = (0..cfg.n_restarts)
        .into_par_iter()
        .map(|r| {
            let init = initial_frame(grid, m, sigma, cfg.seed, r);
            let out = run(init, cfg.seed.wrapping_add(r as u64));
            let rec = RestartRecord {
                index: r,
                energy: out.energy,
                converged: out.converged,
                iterations: out.iterations,
                residual: out.residual,
                warm: false,
            };
            (rec, out)
        })
        .collect();
    if let Some(w) = warm {
        let init = complete_block(grid, w.to_vec(), m, sigma, cfg.seed);
        let out = run(init, cfg.seed);
        let rec = RestartRecord {
            index: cfg.n_restarts,
            energy: out.energy,
            converged: out.converged,
            iterations: out.iterations,
            residual: out.residual,
            warm: true,
        };
        outcomes.push((rec, out));
    }
    let best = outcomes
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.energy.total_cmp(&b.1 .1.energy).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one restart");
    let restarts: Vec<RestartRecord> = outcomes.iter().map(|(r, _)| r.clone()).collect();
    let (_, out) = outcomes.swap_remove(best);
    finish(params, cfg, grid, out, restarts)
}

fn finish(
    params: &ModelParams,
    cfg: &SolverConfig,
    grid: &Grid,
    out: EngineOutcome,
    restarts: Vec<RestartRecord>,
) -> Result<GroundStateResult> {
    let occ = params.occupations();
    let n = occ.len();
    let orbitals: Vec<GridFunction> =
        out.block[..n].iter().map(|u| GridFunction::new(grid, u.clone())).collect::<Result<_>>()?;
    let orbitals = OrbitalSet::new(orbitals, occ.clone())?;
    let rho = density_raw(&out.block[..n], &occ, grid.len());
    let density = GridFunction::new(grid, rho.clone())?;
    let mu: Vec<f64> = out.ritz[..n].to_vec();

    // Aufbau check against the spectrum of the converged mean field.
    let v = potential(&rho, params.p);
    let opts = EigenOptions { tol: cfg.eig_tol, max_iter: 3000, guard: 2, seed: cfg.seed };
    let eig = eigenpairs_for_potential(grid, &v, n + 1, Some(&out.block), &opts);
    let spectrum = eig.values.clone();
    let mu_next = spectrum.get(n).copied();
    let aufbau_margin = mu_next.map_or(f64::NAN, |next| next - mu[n - 1]);
    let occupied_mismatch = mu.iter().zip(&spectrum).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let match_tol = 1e-6 * mu[0].abs().max(1e-3);
    let aufbau_verified = eig.converged && aufbau_margin >= -cfg.eig_tol && occupied_mismatch <= match_tol;
    let near_degenerate = aufbau_margin.abs() < 1e-8;

    let (kinetic, w) = energy_parts(grid, &out.block[..n], &occ, params.p);
    let d = params.dim as f64;
    let virial_residual = (kinetic - d * (params.p - 1.0) / (2.0 * params.p) * w).abs() / kinetic;
    let el_residuals = el_residuals(grid, &out.block[..n], &v, &mu);

    let j_one = radial_ground_state(params.dim, params.p)?.i1;
    let (lower, upper) = mu_n_bounds(params.dim, params.p, params.mass, out.energy, j_one)?;
    let mu_n = mu[n - 1];
    let slack = 1e-6 * mu_n.abs();
    let mu_ok = lower - slack <= mu_n && mu_n <= upper + slack && mu_n < 0.0;
    let decay = fit_decay(grid, &rho, mu_n);

    let diagnostics = DiagnosticsReport {
        kinetic,
        interaction_integral: w,
        virial_residual,
        el_residuals,
        spectrum,
        aufbau_margin,
        occupied_mismatch,
        aufbau_verified,
        near_degenerate,
        first_gap: (n >= 2).then(|| mu[1] - mu[0]),
        mu_bounds: MuBoundsCheck { lower, upper, mu_n, ok: mu_ok },
        mu_bounds_ok: mu_ok,
        decay_rate_fit: decay,
        orthonormality_defect: orbitals.orthonormality_defect(),
        local_maxima: count_local_maxima(&density, 1e-3),
    };
    Ok(GroundStateResult {
        params: *params,
        energy: out.energy,
        orbitals,
        mu,
        mu_next,
        density,
        diagnostics,
        grid: grid.clone(),
        iterations: out.iterations,
        converged: out.converged,
        engine: cfg.engine,
        restarts,
        box_check: None,
        energy_history: out.history,
        max_orth_defect: out.max_orth_defect,
        monotonicity_violations: out.monotonicity_violations,
        block: out.block,
    })
}

fn el_residuals(grid: &Grid, orbitals: &[Vec<f64>], v: &[f64], mu: &[f64]) -> Vec<f64> {
    orbitals
        .iter()
        .zip(mu)
        .map(|(u, &m)| {
            let hu = super::functional::apply_hamiltonian(grid, v, u);
            let r: Vec<f64> = hu.iter().zip(u).map(|(a, b)| a - m * b).collect();
            grid.dot(&r, &r).sqrt()
        })
        .collect()
}

/// Recomputes every diagnostic of a state from its orbitals.
pub fn compute_diagnostics(state: &GroundStateResult, cfg: &SolverConfig) -> Result<DiagnosticsReport> {
    let out = EngineOutcome {
        block: state.block.clone(),
        ritz: state.mu.iter().copied().chain(state.mu_next).collect(),
        energy: state.energy,
        residual: state.diagnostics.el_residuals.iter().cloned().fold(0.0, f64::max),
        iterations: state.iterations,
        converged: state.converged,
        history: Vec::new(),
        max_orth_defect: state.max_orth_defect,
        monotonicity_violations: state.monotonicity_violations,
    };
    Ok(finish(&state.params, cfg, &state.grid, out, Vec::new())?.diagnostics)
}

/// Embeds a block into a larger grid with the same spacing, centred.
fn embed(small: &Grid, large: &Grid, block: &[Vec<f64>]) -> Block {
    let off = (large.n() - small.n()) / 2;
    block
        .iter()
        .map(|u| {
            let mut out = vec![0.0; large.len()];
            for (idx, &x) in u.iter().enumerate() {
                let mi = small.multi_index(idx);
                let mut big = [0usize; 3];
                for a in 0..small.dim() {
                    big[a] = mi[a] + off;
                }
                out[large.flat_index(big)] = x;
            }
            out
        })
        .collect()
}

/// Box growths allowed after the first solve.
const MAX_BOX_GROWTH: usize = 3;
/// No growth beyond this many grid points.
const MAX_GROWN_POINTS: usize = 1 << 18;

/// `J(λ)` with the configured box policy, restarts and diagnostics.
pub fn solve_ground_state(params: &ModelParams, cfg: &SolverConfig) -> Result<GroundStateResult> {
    cfg.validate()?;
    let mut grid = grid_for(params.dim, params.p, params.mass, &cfg.grid)?;
    let mut result = solve_on_grid(params, cfg, &grid, None)?;
    if cfg.grid.box_length.is_none() && cfg.grid.grid_n.is_none() {
        // The rule sizes the box from a lower bound on μ_N, which can
        // overstate |μ_N| by orders of magnitude for weakly bound states.
        // Re-check against the converged multiplier and grow at fixed spacing.
        for _ in 0..MAX_BOX_GROWTH {
            let Some(&mu_n) = result.mu.last() else { break };
            if mu_n >= 0.0 {
                break;
            }
            let rule = &cfg.grid.rule;
            let core = rule.c_box * (params.orbital_count() as f64).powf(1.0 / params.dim as f64);
            let needed = core + 2.0 * rule.decay_lengths / mu_n.abs().sqrt();
            if needed <= 1.05 * grid.length() {
                break;
            }
            let big = enlarged(&grid, (needed / grid.length()).max(1.25))?;
            if big.len() > MAX_GROWN_POINTS {
                break;
            }
            let warm = embed(&grid, &big, &result.block);
            let single = SolverConfig { n_restarts: 1, ..cfg.clone() };
            let grown = solve_on_grid(params, &single, &big, Some(&warm))?;
            grid = big;
            result = grown;
        }
    }
    if cfg.grid.rule.verify {
        let big = enlarged(&grid, 1.5)?;
        let warm = embed(&grid, &big, &result.block);
        let single = SolverConfig { n_restarts: 1, ..cfg.clone() };
        let check = solve_on_grid(params, &single, &big, Some(&warm))?;
        let rel = (check.energy - result.energy).abs() / result.energy.abs();
        result.box_check = Some(BoxCheck {
            length: big.length(),
            n: big.n(),
            energy: check.energy,
            relative_change: rel,
            accepted: rel < cfg.grid.rule.verify_tol,
        });
    }
    Ok(result)
}

#[derive(Debug)]
pub struct SweepPoint {
    pub mass: f64,
    pub result: std::result::Result<GroundStateResult, String>,
}

impl SweepPoint {
    pub fn energy(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|r| r.energy)
    }
}

/// Solves every mass on one common grid (sized for the largest mass).
/// With `warm_start` the points run in order, each also seeded by its
/// predecessor; otherwise they run in parallel.
pub fn sweep_mass(dim: usize, p: f64, masses: &[f64], cfg: &SolverConfig, warm_start: bool) -> Result<Vec<SweepPoint>> {
    if masses.is_empty() {
        return Ok(Vec::new());
    }
    if masses.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("masses must be strictly ascending".into()));
    }
    let top = *masses.last().expect("nonempty");
    let grid = grid_for(dim, p, top, &cfg.grid)?;
    if !warm_start {
        return Ok(masses
            .par_iter()
            .map(|&mass| SweepPoint {
                mass,
                result: ModelParams::new(dim, p, mass)
                    .and_then(|params| solve_on_grid(&params, cfg, &grid, None))
                    .map_err(|e| e.to_string()),
            })
            .collect());
    }
    let mut out = Vec::with_capacity(masses.len());
    let mut prev: Option<Block> = None;
    for &mass in masses {
        let res = ModelParams::new(dim, p, mass).and_then(|params| solve_on_grid(&params, cfg, &grid, prev.as_deref()));
        if let Ok(r) = &res {
            prev = Some(r.block.clone());
        }
        out.push(SweepPoint { mass, result: res.map_err(|e| e.to_string()) });
    }
    Ok(out)
}
