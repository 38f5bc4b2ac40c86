//! Block preconditioned conjugate gradient (LOBPCG) for the lowest
//! eigenpairs of `-Δ + V` on a periodic grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::linalg::{self, Block};

use super::functional::{apply_hamiltonian, potential};

#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Residual bound `‖Hφ - μφ‖` for every requested pair.
    pub tol: f64,
    pub max_iter: usize,
    /// Extra block vectors iterated alongside the requested ones.
    pub guard: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 2000, guard: 2, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: Block,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// `1 / (|k|² + s)` applied in Fourier space.
pub(crate) fn precondition(grid: &Grid, r: &[f64], shift: f64) -> Vec<f64> {
    grid.apply_multiplier(r, |k2| 1.0 / (k2 + shift))
}

/// Smooth random vectors: Fourier noise damped like `(1 + |k|²)^{-2}`.
pub(crate) fn smooth_random(grid: &Grid, count: usize, rng: &mut ChaCha8Rng) -> Block {
    (0..count)
        .map(|_| {
            let noise: Vec<f64> = (0..grid.len()).map(|_| rng.random::<f64>() - 0.5).collect();
            grid.apply_multiplier(&noise, |k2| 1.0 / (1.0 + k2).powi(2))
        })
        .collect()
}

/// Projects `w` off the span of the orthonormal block `x`.
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

fn drop_tiny(grid: &Grid, w: Block, scale: f64) -> Block {
    w.into_iter()
        .filter_map(|mut v| {
            let n = linalg::normalize(grid, &mut v);
            (n > 1e-14 * scale.max(1.0)).then_some(v)
        })
        .collect()
}

/// Lowest eigenpairs of `-Δ + V` for an explicit potential. `initial`
/// vectors (if any) seed the block; missing columns are filled with smooth
/// random vectors.
pub fn eigenpairs_for_potential(
    grid: &Grid,
    v: &[f64],
    k: usize,
    initial: Option<&[Vec<f64>]>,
    opts: &EigenOptions,
) -> EigenResult {
    let m = (k + opts.guard).min(grid.len());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Block = initial.map(|b| b.iter().take(m).cloned().collect()).unwrap_or_default();
    if x.len() < m {
        let extra = smooth_random(grid, m - x.len(), &mut rng);
        x.extend(extra);
    }
    let c = linalg::orthonormal_coefficients(&linalg::gram(grid, &x), 1e-12);
    x = linalg::combine(&x, &c);
    while x.len() < m {
        let mut extra = smooth_random(grid, m - x.len(), &mut rng);
        project_out(grid, &mut extra, &x);
        x.extend(drop_tiny(grid, extra, 1.0));
    }

    let apply = |u: &Vec<f64>| apply_hamiltonian(grid, v, u);
    let mut hx: Block = x.iter().map(apply).collect();
    let mut p: Block = Vec::new();
    let mut values = vec![0.0; m];
    let mut residuals = vec![f64::INFINITY; m];
    let mut iterations = 0;
    let mut converged = false;

    loop {
        // Ritz step on the current block.
        let (theta, coeff) = linalg::rayleigh_ritz(grid, &x, &hx, 1e-14);
        x = linalg::combine(&x, &coeff);
        hx = linalg::combine(&hx, &coeff);
        values = theta;
        let r: Block = x
            .iter()
            .zip(&hx)
            .zip(&values)
            .map(|((xi, hxi), &t)| hxi.iter().zip(xi).map(|(a, b)| a - t * b).collect())
            .collect();
        residuals = r.iter().map(|ri| grid.dot(ri, ri).sqrt()).collect();
        let worst = residuals[..k].iter().cloned().fold(0.0, f64::max);
        if worst < opts.tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let shift = (-values[0]).max(0.0) + 1.0;
        let mut w: Block = r
            .iter()
            .zip(&residuals)
            .filter(|(_, &res)| res > 0.1 * opts.tol)
            .map(|(ri, _)| precondition(grid, ri, shift))
            .collect();
        project_out(grid, &mut w, &x);
        let w = drop_tiny(grid, w, 1.0);
        project_out(grid, &mut p, &x);
        let p_kept = drop_tiny(grid, std::mem::take(&mut p), 1.0);

        let mut basis = x.clone();
        basis.extend(w.iter().cloned());
        basis.extend(p_kept.iter().cloned());
        let mut images = hx.clone();
        images.extend(w.iter().chain(&p_kept).map(apply));

        let (_, coeff) = linalg::rayleigh_ritz(grid, &basis, &images, 1e-13);
        let cols = coeff.ncols().min(m);
        let coeff = coeff.columns(0, cols).into_owned();
        let new_x = linalg::combine(&basis, &coeff);
        let new_hx = linalg::combine(&images, &coeff);
        // Direction: the part of the update carried by W and P.
        let mut c_dir = coeff.clone();
        for i in 0..x.len() {
            for j in 0..cols {
                c_dir[(i, j)] = 0.0;
            }
        }
        p = linalg::combine(&basis, &c_dir);
        x = new_x;
        hx = new_hx;
        // Re-orthonormalize against drift.
        let s = linalg::gram(grid, &x);
        match linalg::inverse_sqrt(&s, 1e-12) {
            Ok(c) => {
                x = linalg::combine(&x, &c);
                hx = linalg::combine(&hx, &c);
            }
            Err(_) => {
                let c = linalg::orthonormal_coefficients(&s, 1e-12);
                x = linalg::combine(&x, &c);
                hx = x.iter().map(apply).collect();
                while x.len() < m {
                    let mut extra = smooth_random(grid, m - x.len(), &mut rng);
                    project_out(grid, &mut extra, &x);
                    let extra = drop_tiny(grid, extra, 1.0);
                    hx.extend(extra.iter().map(apply));
                    x.extend(extra);
                }
                p.clear();
            }
        }
    }

    values.truncate(k);
    residuals.truncate(k);
    x.truncate(k);
    EigenResult { values, vectors: x, residuals, iterations, converged }
}

/// The `k` lowest eigenpairs of `-Δ - ρ^{p-1}`, ascending, orthonormal.
pub fn lowest_eigenpairs(
    rho: &GridFunction,
    p: f64,
    k: usize,
    opts: &EigenOptions,
) -> Result<Vec<(f64, GridFunction)>> {
    if k == 0 {
        return Err(Error::InvalidParameter("eigenpair count must be at least 1".into()));
    }
    let grid = rho.grid();
    if k > grid.len() {
        return Err(Error::InvalidParameter(format!("cannot compute {k} eigenpairs on {} points", grid.len())));
    }
    let v = potential(rho.values(), p);
    let res = eigenpairs_for_potential(grid, &v, k, None, opts);
    if !res.converged {
        let residual = res.residuals.iter().cloned().fold(0.0, f64::max);
        return Err(Error::NoConvergence { iterations: res.iterations, residual });
    }
    Ok(res
        .values
        .into_iter()
        .zip(res.vectors)
        .map(|(mu, phi)| (mu, GridFunction::from_raw(grid, phi)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_laplacian_ground_state_is_constant() {
        let grid = Grid::new(1, 10.0, 64).unwrap();
        let rho = grid.zeros();
        let pairs = lowest_eigenpairs(&rho, 1.5, 3, &EigenOptions::default()).unwrap();
        assert!(pairs[0].0.abs() < 1e-10);
        let k1 = (2.0 * std::f64::consts::PI / 10.0).powi(2);
        assert!((pairs[1].0 - k1).abs() < 1e-8);
        assert!((pairs[2].0 - k1).abs() < 1e-8);
        let u = pairs[0].1.values();
        let spread = u.iter().cloned().fold(f64::MIN, f64::max) - u.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-8);
    }

    #[test]
    fn harmonic_well_levels() {
        // -u'' + x² u: levels 1, 3, 5, ...
        let grid = Grid::new(1, 20.0, 256).unwrap();
        let v: Vec<f64> = (0..grid.len()).map(|j| grid.coordinate(j).powi(2)).collect();
        let res = eigenpairs_for_potential(&grid, &v, 4, None, &EigenOptions::default());
        assert!(res.converged);
        for (i, mu) in res.values.iter().enumerate() {
            assert!((mu - (2 * i + 1) as f64).abs() < 1e-8, "{i}: {mu}");
        }
    }
}
