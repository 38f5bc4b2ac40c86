//! Single-orbital NLS ground state `Q`, its energy `I(d, p, 1)` and
//! multiplier, plus the mass scaling laws.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::solver::box_rule::{grid_for, mu_estimate, GridPolicy};
use crate::solver::engine::{flow, EngineSettings};
use crate::solver::model::check_exponent;

/// Exponent `(2/d)(p-1)/(1+2/d-p)` of the multiplier scaling.
pub fn mu_exponent(dim: usize, p: f64) -> Result<f64> {
    let d = dim as f64;
    let s = 1.0 + 2.0 / d - p;
    if !(s > 0.0) {
        return Err(Error::ExponentOutOfRange { dim, p, upper: 1.0 + 2.0 / d });
    }
    Ok((2.0 / d) * (p - 1.0) / s)
}

/// Exponent `1 + (2/d)(p-1)/(1+2/d-p)` of the energy scaling.
pub fn energy_exponent(dim: usize, p: f64) -> Result<f64> {
    Ok(1.0 + mu_exponent(dim, p)?)
}

fn check_mass(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("mass must be nonnegative, got {lambda}")));
    }
    Ok(())
}

/// `I(λ) = I(1) λ^{1 + (2/d)(p-1)/(1+2/d-p)}`.
#[allow(non_snake_case)]
pub fn I_lambda(dim: usize, p: f64, i1: f64, lambda: f64) -> Result<f64> {
    check_mass(lambda)?;
    Ok(i1 * lambda.powf(energy_exponent(dim, p)?))
}

/// `μ(λ) = μ(1) λ^{(2/d)(p-1)/(1+2/d-p)}`.
pub fn mu_lambda(dim: usize, p: f64, mu1: f64, lambda: f64) -> Result<f64> {
    check_mass(lambda)?;
    Ok(mu1 * lambda.powf(mu_exponent(dim, p)?))
}

#[derive(Clone, Debug)]
pub struct ScalarOptions {
    pub policy: GridPolicy,
    pub el_tol: f64,
    pub energy_tol: f64,
    pub max_iter: usize,
}

impl Default for ScalarOptions {
    fn default() -> Self {
        Self { policy: GridPolicy::default(), el_tol: 1e-7, energy_tol: 1e-13, max_iter: 5000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalarGroundState {
    pub dim: usize,
    pub p: f64,
    pub i1: f64,
    pub mu1: f64,
    #[serde(skip)]
    pub profile: GridFunction,
    pub decay_rate: f64,
    pub el_residual: f64,
    pub virial_residual: f64,
    pub min_value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `∫|∇u|² - (1/p)∫|u|^{2p}` over `‖u‖ = 1` with the block flow
/// on a single orbital, starting from a centered Gaussian one estimated
/// decay length wide.
pub fn solve_scalar(dim: usize, p: f64, opts: &ScalarOptions) -> Result<ScalarGroundState> {
    check_exponent(dim, p)?;
    let grid = grid_for(dim, p, 1.0, &opts.policy)?;
    let w2 = 1.0 / mu_estimate(dim, p)?.abs();
    let gauss = grid.sample(|x| (-x[..dim].iter().map(|a| a * a).sum::<f64>() / (2.0 * w2)).exp()).into_values();
    // Residuals scale like |μ|; tolerances are meant at |μ| ~ 1.
    let tol = opts.el_tol * mu_estimate(dim, p)?.abs().min(1.0);
    let settings = EngineSettings {
        el_tol: tol,
        eig_tol: tol,
        energy_tol: opts.energy_tol,
        max_iter: opts.max_iter,
        mixing: 1.0,
        slack: 1e-14,
        seed: 0,
    };
    let out = flow(&grid, vec![gauss], &[1.0], p, &settings);
    let mut u = out.block.into_iter().next().expect("single orbital");
    if u.iter().sum::<f64>() < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }
    let min_value = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let t = grid.kinetic(&u);
    let w: f64 = u.iter().map(|x| x.abs().powf(2.0 * p)).sum::<f64>() * grid.cell_volume();
    let virial = (t - dim as f64 * (p - 1.0) / (2.0 * p) * w).abs() / t;
    let mu = out.ritz[0];
    Ok(ScalarGroundState {
        dim,
        p,
        i1: t - w / p,
        mu1: mu,
        profile: GridFunction::new(&grid, u)?,
        decay_rate: (-mu).max(0.0).sqrt(),
        el_residual: out.residual,
        virial_residual: virial,
        min_value,
        iterations: out.iterations,
        converged: out.converged,
    })
}

/// Radial ground state from shooting on
/// `Q'' + (d-1)/r Q' - Q + Q^{2p-1} = 0`, `Q'(0) = 0`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RadialSolution {
    pub dim: usize,
    pub p: f64,
    /// `Q(0)` for the unit-frequency profile.
    pub amplitude: f64,
    /// `∫Q²` of the unit-frequency profile.
    pub mass: f64,
    pub i1: f64,
    pub mu1: f64,
}

enum Shot {
    Over,
    Under { mass: f64, kinetic: f64, potential: f64 },
}

fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI,
    }
}

fn shoot(dim: usize, p: f64, a: f64, step: f64, r_max: f64) -> Shot {
    let d = dim as f64;
    let q = 2.0 * p - 1.0;
    let rhs = |r: f64, y: &[f64; 5]| -> [f64; 5] {
        let (u, du) = (y[0], y[1]);
        let w = r.powf(d - 1.0);
        let nl = u.abs().powf(q - 1.0) * u;
        [du, -(d - 1.0) / r * du + u - nl, w * u * u, w * du * du, w * u.abs().powf(2.0 * p)]
    };
    let mut r = 1e-4;
    let c = (a - a.powf(q)) / d;
    // Integrals over [0, r) from the Taylor start, leading order in r.
    let mut y = [
        a + 0.5 * c * r * r,
        c * r,
        a * a * r.powf(d) / d,
        c * c * r.powf(d + 2.0) / (d + 2.0),
        a.powf(2.0 * p) * r.powf(d) / d,
    ];
    let factor = sphere_area(dim);
    while r < r_max {
        let k1 = rhs(r, &y);
        let mid = |k: &[f64; 5], h: f64| -> [f64; 5] { std::array::from_fn(|i| y[i] + h * k[i]) };
        let k2 = rhs(r + 0.5 * step, &mid(&k1, 0.5 * step));
        let k3 = rhs(r + 0.5 * step, &mid(&k2, 0.5 * step));
        let k4 = rhs(r + step, &mid(&k3, step));
        for i in 0..5 {
            y[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        r += step;
        if y[0] < 0.0 {
            return Shot::Over;
        }
        if y[1] > 0.0 {
            break;
        }
    }
    Shot::Under { mass: factor * y[2], kinetic: factor * y[3], potential: factor * y[4] }
}

/// Shooting on the amplitude `Q(0)` by bisection, then rescaling the
/// unit-frequency profile to mass one.
pub fn radial_ground_state(dim: usize, p: f64) -> Result<RadialSolution> {
    check_exponent(dim, p)?;
    let (step, r_max) = (1e-3, 80.0);
    let mut lo = 1.0;
    let mut hi = 2.0;
    while matches!(shoot(dim, p, hi, step, r_max), Shot::Under { .. }) {
        lo = hi;
        hi *= 1.5;
        if hi > 1e8 {
            return Err(Error::NoConvergence { iterations: 0, residual: hi });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(dim, p, mid, step, r_max) {
            Shot::Over => hi = mid,
            Shot::Under { .. } => lo = mid,
        }
    }
    let Shot::Under { mass, kinetic, potential } = shoot(dim, p, lo, step, r_max) else {
        return Err(Error::NoConvergence { iterations: 200, residual: hi - lo });
    };
    let e = kinetic - potential / p;
    let i1 = e * mass.powf(-energy_exponent(dim, p)?);
    let mu1 = -mass.powf(-mu_exponent(dim, p)?);
    Ok(RadialSolution { dim, p, amplitude: lo, mass, i1, mu1 })
}
