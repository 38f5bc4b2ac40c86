//! Inner minimization engines. Both act on a block of `m ≥ N` orthonormal
//! vectors whose first `N` columns carry the occupations.

use nalgebra::DMatrix;

use crate::grid::Grid;
use crate::linalg::{self, Block};

use super::eigen::{eigenpairs_for_potential, precondition, EigenOptions};
use super::functional::{apply_hamiltonian, density_raw, energy_raw, interaction_integral, potential};

#[derive(Clone, Debug)]
pub struct EngineSettings {
    pub el_tol: f64,
    pub eig_tol: f64,
    pub energy_tol: f64,
    pub max_iter: usize,
    pub mixing: f64,
    pub slack: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct EngineOutcome {
    /// Ritz vectors, occupied ones first, ascending Ritz values.
    pub block: Block,
    pub ritz: Vec<f64>,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Energy after every outer iteration.
    pub history: Vec<f64>,
    /// Largest orthonormality defect observed after re-orthonormalization.
    pub max_orth_defect: f64,
    /// Steps whose energy rose by more than the slack.
    pub monotonicity_violations: usize,
}

fn orth_defect(grid: &Grid, x: &[Vec<f64>]) -> f64 {
    let g = linalg::gram(grid, x);
    (g - DMatrix::identity(x.len(), x.len())).abs().max()
}

fn project_out(grid: &Grid, w: &mut [Vec<f64>], x: &[Vec<f64>]) {
    for wi in w.iter_mut() {
        for xj in x {
            let c = grid.dot(xj, wi);
            for (a, b) in wi.iter_mut().zip(xj) {
                *a -= c * b;
            }
        }
    }
}

/// Ritz rotation of `x` for the mean field of its own occupied part.
/// Returns (rotated x, H x, Ritz values, occupied residual).
fn ritz_step(grid: &Grid, x: &[Vec<f64>], occ: &[f64], p: f64) -> (Block, Block, Vec<f64>, Vec<f64>) {
    let n = occ.len();
    let rho = density_raw(&x[..n], occ, grid.len());
    let v = potential(&rho, p);
    let hx: Block = x.iter().map(|u| apply_hamiltonian(grid, &v, u)).collect();
    let h = linalg::cross_gram(grid, x, &hx);
    let (theta, c) = linalg::sym_eigen(&((&h + h.transpose()) * 0.5));
    let x = linalg::combine(x, &c);
    let hx = linalg::combine(&hx, &c);
    let res: Vec<f64> = x
        .iter()
        .zip(&hx)
        .zip(&theta)
        .map(|((xi, hxi), &t)| {
            let r: f64 = hxi.iter().zip(xi).map(|(a, b)| (a - t * b).powi(2)).sum();
            (r * grid.cell_volume()).sqrt()
        })
        .collect();
    (x, hx, theta, res)
}

/// Self-consistent aufbau restricted to the span of an orthonormal basis.
struct Subspace<'a> {
    grid: &'a Grid,
    basis: &'a [Vec<f64>],
    kinetic: DMatrix<f64>,
    occ: &'a [f64],
    p: f64,
}

impl Subspace<'_> {
    fn occupied_density(&self, c: &DMatrix<f64>) -> Vec<f64> {
        let n = self.occ.len();
        let u = linalg::combine(self.basis, &c.columns(0, n).into_owned());
        density_raw(&u, self.occ, self.grid.len())
    }

    fn energy(&self, c: &DMatrix<f64>, rho: &[f64]) -> f64 {
        let kin: f64 = (0..self.occ.len())
            .map(|i| {
                let ci = c.column(i);
                self.occ[i] * (ci.transpose() * &self.kinetic * ci)[(0, 0)]
            })
            .sum();
        kin - interaction_integral(self.grid, rho, self.p) / self.p
    }

    fn potential_matrix(&self, rho: &[f64]) -> DMatrix<f64> {
        let v = potential(rho, self.p);
        let nb = self.basis.len();
        let vb: Block = self
            .basis
            .iter()
            .map(|b| b.iter().zip(&v).map(|(x, y)| x * y).collect())
            .collect();
        let mut m = DMatrix::zeros(nb, nb);
        for i in 0..nb {
            for j in i..nb {
                let s = self.grid.dot(&self.basis[i], &vb[j]);
                m[(i, j)] = s;
                m[(j, i)] = s;
            }
        }
        m
    }

    /// Repeated aufbau refills in the subspace, starting from `c0`. Every
    /// refill is energy-nonincreasing because the energy is concave in the
    /// density matrix. Returns the best coefficients and their energy.
    fn minimize(&self, c0: DMatrix<f64>, width: usize, max_inner: usize, tol: f64) -> (DMatrix<f64>, f64) {
        let mut c = c0;
        let mut rho = self.occupied_density(&c);
        let mut e = self.energy(&c, &rho);
        for _ in 0..max_inner {
            let h = &self.kinetic + self.potential_matrix(&rho);
            let (_, vecs) = linalg::sym_eigen(&h);
            let trial = vecs.columns(0, width).into_owned();
            let trial_rho = self.occupied_density(&trial);
            let trial_e = self.energy(&trial, &trial_rho);
            if trial_e > e {
                break;
            }
            let gain = e - trial_e;
            c = trial;
            rho = trial_rho;
            e = trial_e;
            if gain < tol {
                break;
            }
        }
        (c, e)
    }
}

/// Block flow: each step minimizes the energy over
/// `span[X, T·R, P]` (current frame, preconditioned residuals, previous
/// update direction) and re-orthonormalizes the frame by Löwdin.
pub fn flow(grid: &Grid, init: Block, occ: &[f64], p: f64, s: &EngineSettings) -> EngineOutcome {
    let n = occ.len();
    let m = init.len();
    let mut x = init;
    let _ = linalg::lowdin_orthonormalize(grid, &mut x, 1e-14);
    let mut dir: Block = Vec::new();
    let mut history: Vec<f64> = Vec::new();
    let mut max_defect = orth_defect(grid, &x);
    let mut violations = 0;
    let mut energy = energy_raw(grid, &x[..n], occ, p);
    let mut iterations = 0;

    loop {
        let (xr, hx, theta, res) = ritz_step(grid, &x, occ, p);
        x = xr;
        let residual = res[..n].iter().cloned().fold(0.0, f64::max);
        let e_now = energy_raw(grid, &x[..n], occ, p);
        let stalled = history.len() >= 2
            && (history[history.len() - 2] - history[history.len() - 1]).abs() < s.energy_tol * e_now.abs().max(1.0);
        if residual < s.el_tol && (stalled || residual < 0.1 * s.el_tol) {
            return EngineOutcome {
                block: x,
                ritz: theta,
                energy: e_now,
                residual,
                iterations,
                converged: true,
                history,
                max_orth_defect: max_defect,
                monotonicity_violations: violations,
            };
        }
        // Energy flat for many steps: the residual has reached its floor.
        let flat = history.len() >= 25
            && history[history.len() - 25..].windows(2).all(|w| (w[0] - w[1]).abs() < s.energy_tol * e_now.abs().max(1.0));
        if iterations >= s.max_iter || flat {
            return EngineOutcome {
                block: x,
                ritz: theta,
                energy: e_now,
                residual,
                iterations,
                converged: false,
                history,
                max_orth_defect: max_defect,
                monotonicity_violations: violations,
            };
        }
        iterations += 1;
        energy = energy.min(e_now);

        // Residual directions.
        let shift = (-theta[0]).max(0.1);
        let mut w: Block = x
            .iter()
            .zip(&hx)
            .zip(&theta)
            .zip(&res)
            .filter(|(_, &r)| r > 1e-3 * s.el_tol)
            .map(|(((xi, hxi), &t), _)| {
                let r: Vec<f64> = hxi.iter().zip(xi).map(|(a, b)| a - t * b).collect();
                precondition(grid, &r, shift)
            })
            .collect();
        w.append(&mut dir);
        project_out(grid, &mut w, &x);
        project_out(grid, &mut w, &x);
        let z = {
            let c = linalg::orthonormal_coefficients(&linalg::gram(grid, &w), 1e-10);
            linalg::combine(&w, &c)
        };
        let mut basis = x.clone();
        basis.extend(z);
        let nb = basis.len();

        let kb: Block = basis.iter().map(|b| grid.neg_laplacian(b)).collect();
        let k = linalg::cross_gram(grid, &basis, &kb);
        let sub = Subspace { grid, basis: &basis, kinetic: (&k + k.transpose()) * 0.5, occ, p };
        let c0 = DMatrix::from_fn(nb, m, |i, j| if i == j { 1.0 } else { 0.0 });
        let (c, e_new) = sub.minimize(c0, m, 30, 1e-3 * s.energy_tol * e_now.abs().max(1e-300));

        if e_new > e_now + s.slack {
            violations += 1;
            dir.clear();
            history.push(e_now);
            continue;
        }
        let mut c_dir = c.clone();
        for i in 0..m {
            for j in 0..m {
                c_dir[(i, j)] = 0.0;
            }
        }
        dir = linalg::combine(&basis, &c_dir);
        x = linalg::combine(&basis, &c);
        let _ = linalg::lowdin_orthonormalize(grid, &mut x, 1e-14);
        max_defect = max_defect.max(orth_defect(grid, &x));
        history.push(e_new);
    }
}

/// Self-consistent field: diagonalize the mean field of the input density,
/// fill by aufbau and mix densities linearly.
pub fn scf(grid: &Grid, init: Block, occ: &[f64], p: f64, s: &EngineSettings) -> EngineOutcome {
    let n = occ.len();
    let m = init.len();
    let mut x = init;
    let _ = linalg::lowdin_orthonormalize(grid, &mut x, 1e-14);
    let mut rho_in = density_raw(&x[..n], occ, grid.len());
    let mut history = Vec::new();
    let mut max_defect = orth_defect(grid, &x);
    let mut iterations = 0;
    let opts = EigenOptions { tol: s.eig_tol, max_iter: 200, guard: 0, seed: s.seed };

    loop {
        let v = potential(&rho_in, p);
        let eig = eigenpairs_for_potential(grid, &v, m, Some(&x), &opts);
        x = eig.vectors;
        max_defect = max_defect.max(orth_defect(grid, &x));
        let (xr, _, theta, res) = ritz_step(grid, &x, occ, p);
        let residual = res[..n].iter().cloned().fold(0.0, f64::max);
        let e = energy_raw(grid, &xr[..n], occ, p);
        history.push(e);
        let done = residual < s.el_tol;
        if done || iterations >= s.max_iter {
            return EngineOutcome {
                block: xr,
                ritz: theta,
                energy: e,
                residual,
                iterations,
                converged: done,
                history,
                max_orth_defect: max_defect,
                monotonicity_violations: 0,
            };
        }
        iterations += 1;
        let rho_out = density_raw(&x[..n], occ, grid.len());
        for (a, b) in rho_in.iter_mut().zip(&rho_out) {
            *a = (1.0 - s.mixing) * *a + s.mixing * b;
        }
    }
}
