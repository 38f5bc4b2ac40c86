//! Thomas–Fermi and Lieb–Thirring energies, the critical exponent, the
//! rescaled inequality constant and the plane-wave trial state.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::radial_ground_state;
use crate::solver::model::check_exponent;

pub fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => f64::NAN,
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidParameter(format!("dimension must be 1, 2 or 3, got {dim}")));
    }
    Ok(())
}

/// `c_TF = 4π² d/(d+2) · (d/|S^{d-1}|)^{2/d}`.
pub fn c_tf(dim: usize) -> Result<f64> {
    check_dim(dim)?;
    let d = dim as f64;
    Ok(4.0 * PI * PI * d / (d + 2.0) * (d / sphere_area(dim)).powf(2.0 / d))
}

/// Per-particle minimum of `∫ C ρ^{1+2/d} - (1/p) ρ^p` at fixed mass.
fn lt_per_particle(dim: usize, p: f64, c: f64) -> Result<f64> {
    check_dim(dim)?;
    check_exponent(dim, p)?;
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("constant must be positive, got {c}")));
    }
    let d = dim as f64;
    let s = 1.0 + 2.0 / d - p;
    Ok(-s * (d / (2.0 * p)) * (d * (p - 1.0) / (2.0 * p * c)).powf((p - 1.0) / s))
}

pub fn e_tf(dim: usize, p: f64) -> Result<f64> {
    lt_per_particle(dim, p, c_tf(dim)?)
}

pub fn e_lt(dim: usize, p: f64, c_lt: f64) -> Result<f64> {
    lt_per_particle(dim, p, c_lt)
}

/// `-N (1+2/d-p)(d/2p)(d(p-1)/(2pC))^{(p-1)/(1+2/d-p)}`.
pub fn lt_min_value(c: f64, dim: usize, p: f64, mass: f64) -> Result<f64> {
    if !(mass >= 0.0) {
        return Err(Error::InvalidParameter(format!("mass must be nonnegative, got {mass}")));
    }
    Ok(mass * lt_per_particle(dim, p, c)?)
}

/// Optimal density level `ρ_* = (d(p-1)/(2pC))^{1/(1+2/d-p)}`.
pub fn rho_star(c: f64, dim: usize, p: f64) -> Result<f64> {
    lt_per_particle(dim, p, c)?;
    let d = dim as f64;
    Ok((d * (p - 1.0) / (2.0 * p * c)).powf(1.0 / (1.0 + 2.0 / d - p)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CltDefault {
    pub dim: usize,
    pub ratio_bound: f64,
    pub source: String,
    #[serde(default)]
    pub value: f64,
}

#[derive(Deserialize)]
struct CltFile {
    entries: Vec<CltDefault>,
}

const CLT_DATA: &str = include_str!("../data/c_lt_defaults.json");

/// Shipped `c_LT(d)` defaults with their provenance.
pub fn c_lt_defaults() -> Vec<CltDefault> {
    let file: CltFile = serde_json::from_str(CLT_DATA).expect("embedded c_LT table is valid JSON");
    file.entries
        .into_iter()
        .map(|mut e| {
            let c = c_tf(e.dim).expect("table dimensions are 1..3");
            e.value = c * e.ratio_bound.powf(-2.0 / e.dim as f64);
            e
        })
        .collect()
}

pub fn default_c_lt(dim: usize) -> Result<CltDefault> {
    c_lt_defaults()
        .into_iter()
        .find(|e| e.dim == dim)
        .ok_or_else(|| Error::InvalidParameter(format!("no c_LT default for d = {dim}")))
}

/// Prefactor `(2p - d(p-1))/(2 - d(p-1))` of the lower bound on `μ_N`.
pub fn mu_lower_factor(dim: usize, p: f64) -> f64 {
    let d = dim as f64;
    (2.0 * p - d * (p - 1.0)) / (2.0 - d * (p - 1.0))
}

/// `(lower, upper)` for the last filled multiplier:
/// `factor · J(λ)/λ ≤ μ_N ≤ J(1)(λ-N+1)^{(2/d)(p-1)/(1+2/d-p)}`.
pub fn mu_n_bounds(dim: usize, p: f64, mass: f64, j_mass: f64, j_one: f64) -> Result<(f64, f64)> {
    check_exponent(dim, p)?;
    let n = crate::solver::model::orbital_count(mass);
    let frac = mass - (n - 1) as f64;
    let lower = mu_lower_factor(dim, p) * j_mass / mass;
    let upper = j_one * frac.powf(crate::scalar::mu_exponent(dim, p)?);
    Ok((lower, upper))
}

/// `1 + sqrt(|I(d,p,1)| / |e_LT(d,p)|) · sqrt((2-d(p-1))/(2p-d(p-1))) - p`.
pub fn critical_function(dim: usize, p: f64, c_lt: f64, i1: f64) -> Result<f64> {
    let e = e_lt(dim, p, c_lt)?;
    Ok(1.0 + (i1.abs() / e.abs()).sqrt() / mu_lower_factor(dim, p).sqrt() - p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PCritical {
    pub dim: usize,
    pub value: f64,
    pub bracket: (f64, f64),
    pub f_bracket: (f64, f64),
    pub c_lt: f64,
    pub tolerance: f64,
    pub evaluations: usize,
}

/// First zero in `(1, min(2, 1+2/d))` of the critical function: a coarse
/// scan for the first sign change followed by bisection to `1e-4`.
pub fn p_critical<F>(dim: usize, c_lt: f64, mut i1_of_p: F) -> Result<PCritical>
where
    F: FnMut(f64) -> Result<f64>,
{
    check_dim(dim)?;
    if !(c_lt > 0.0) {
        return Err(Error::InvalidParameter(format!("c_LT must be positive, got {c_lt}")));
    }
    let upper = 2f64.min(1.0 + 2.0 / dim as f64);
    let (start, stop, step, tol) = (1.02, upper - 0.02, 0.01, 1e-4);
    let mut evaluations = 0;
    let mut f = |p: f64| -> Result<f64> {
        evaluations += 1;
        critical_function(dim, p, c_lt, i1_of_p(p)?)
    };
    let mut lo = start;
    let mut f_lo = f(lo)?;
    let mut bracket = None;
    let mut p = start;
    while p < stop {
        let next = (p + step).min(stop);
        let f_next = f(next)?;
        if f_lo.signum() != f_next.signum() {
            bracket = Some((lo, next, f_lo, f_next));
            break;
        }
        p = next;
        lo = next;
        f_lo = f_next;
    }
    let Some((mut a, mut b, mut fa, mut fb)) = bracket else {
        return Err(Error::NoSignChange { lo: start, hi: stop });
    };
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    drop(f);
    Ok(PCritical { dim, value: 0.5 * (a + b), bracket: (a, b), f_bracket: (fa, fb), c_lt, tolerance: tol, evaluations })
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Clone, Debug)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n || x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("interpolation nodes must be increasing, at least two".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut m = vec![0.0; n];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
            let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if s * d0 <= 0.0 {
                0.0
            } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
                3.0 * d0
            } else {
                s
            }
        };
        if n == 2 {
            m[0] = delta[0];
            m[1] = delta[0];
        } else {
            m[0] = end(h[0], h[1], delta[0], delta[1]);
            m[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self { x, y, m })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s).powi(2);
        let h10 = s * (1.0 - s).powi(2);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.y[i] + h10 * h * self.m[i] + h01 * self.y[i + 1] + h11 * h * self.m[i + 1]
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }
}

/// `I(d, p, 1)` tabulated by radial shooting on a uniform `p` grid and
/// interpolated monotonically in between.
#[derive(Clone, Debug)]
pub struct MemoizedI1 {
    pub dim: usize,
    table: Pchip,
}

impl MemoizedI1 {
    pub fn build(dim: usize, spacing: f64) -> Result<Self> {
        check_dim(dim)?;
        let upper = 1.0 + 2.0 / dim as f64;
        let (lo, hi) = (1.01, upper.min(2.0) - 0.005);
        let count = ((hi - lo) / spacing).ceil() as usize + 1;
        let ps: Vec<f64> = (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect();
        let values = ps
            .par_iter()
            .map(|&p| radial_ground_state(dim, p).map(|s| s.i1))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self { dim, table: Pchip::new(ps, values)? })
    }

    pub fn eval(&self, p: f64) -> Result<f64> {
        let (lo, hi) = self.table.domain();
        if p < lo || p > hi {
            return Err(Error::InvalidParameter(format!("p = {p} outside the tabulated range [{lo}, {hi}]")));
        }
        Ok(self.table.eval(p))
    }
}

/// `c(d,p,N) = (N/|J_N|)^{(1+2/d-p)/(p-1)} (d/2p)^{2/(d(p-1))} (p-1) (1+2/d-p)^{(1+2/d-p)/(p-1)}`.
pub fn rescaled_constant(dim: usize, p: f64, mass: f64, j_mass: f64) -> Result<f64> {
    check_exponent(dim, p)?;
    if !(j_mass < 0.0) {
        return Err(Error::InvalidParameter(format!("energy must be negative, got {j_mass}")));
    }
    let d = dim as f64;
    let s = 1.0 + 2.0 / d - p;
    Ok((mass / -j_mass).powf(s / (p - 1.0))
        * (d / (2.0 * p)).powf(2.0 / (d * (p - 1.0)))
        * (p - 1.0)
        * s.powf(s / (p - 1.0)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneWaveBound {
    pub dim: usize,
    pub p: f64,
    pub particles: usize,
    pub length: f64,
    pub mollifier_width: f64,
    /// `(1/N) Σ |k|²` over the filled modes.
    pub mode_kinetic: f64,
    /// `L^{-d} ∫|∇ sqrt(g)|²`, identical for every orbital.
    pub mollifier_kinetic: f64,
    /// `-(1/p) N^{p-1} L^{-dp} ∫ g^p`.
    pub interaction: f64,
    pub per_particle: f64,
    pub e_tf: f64,
    /// The last filled shell is only partially occupied.
    pub degenerate_shell: bool,
}

/// Raised-cosine mollifier CDF on `[-ε, ε]`.
fn mollifier_cdf(t: f64, eps: f64) -> f64 {
    if t <= -eps {
        0.0
    } else if t >= eps {
        1.0
    } else {
        (t + eps) / (2.0 * eps) + (PI * t / eps).sin() / (2.0 * PI)
    }
}

fn mollifier(t: f64, eps: f64) -> f64 {
    if t.abs() >= eps {
        0.0
    } else {
        (PI * t / (2.0 * eps)).cos().powi(2) / eps
    }
}

/// The `count` lowest modes of `ℤ^d` by `|j|²`, lexicographic among ties;
/// also returns whether the next mode ties with the last filled one.
fn lowest_modes(dim: usize, count: usize) -> (Vec<Vec<i64>>, bool) {
    let radius = ((count as f64).powf(1.0 / dim as f64)).ceil() as i64 + 2;
    let mut all: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..dim {
        all = all
            .into_iter()
            .flat_map(|v| {
                (-radius..=radius).map(move |j| {
                    let mut w = v.clone();
                    w.push(j);
                    w
                })
            })
            .collect();
    }
    let norm = |v: &Vec<i64>| v.iter().map(|j| j * j).sum::<i64>();
    all.sort_by(|a, b| norm(a).cmp(&norm(b)).then_with(|| a.cmp(b)));
    let degenerate = all.len() > count && count > 0 && norm(&all[count - 1]) == norm(&all[count]);
    all.truncate(count);
    (all, degenerate)
}

/// Per-particle energy of `N` plane waves `e^{ik·x} sqrt(g)/L^{d/2}` with
/// `g = 1_{C_L} * χ` and `χ` a raised-cosine bump of half-width `eps`.
pub fn plane_wave_upper_bound(dim: usize, p: f64, particles: usize, length: f64, eps: f64) -> Result<PlaneWaveBound> {
    check_exponent(dim, p)?;
    if particles == 0 {
        return Err(Error::InvalidParameter("at least one particle is required".into()));
    }
    if !(eps > 0.0 && length >= 4.0 * eps) {
        return Err(Error::InvalidParameter(format!("need L ≥ 4ε > 0, got L = {length}, ε = {eps}")));
    }
    let (modes, degenerate_shell) = lowest_modes(dim, particles);
    let k0 = 2.0 * PI / length;
    let mode_kinetic =
        k0 * k0 * modes.iter().map(|v| v.iter().map(|&j| (j * j) as f64).sum::<f64>()).sum::<f64>() / particles as f64;

    // One edge layer of g_1 on [-ε, ε], midpoint rule.
    let samples = 1 << 16;
    let dt = 2.0 * eps / samples as f64;
    let (mut edge_grad, mut edge_pow) = (0.0, 0.0);
    for i in 0..samples {
        let t = -eps + (i as f64 + 0.5) * dt;
        let g = 1.0 - mollifier_cdf(t, eps);
        let dg = mollifier(t, eps);
        if g > 0.0 {
            edge_grad += dg * dg / (4.0 * g) * dt;
            edge_pow += g.powf(p) * dt;
        }
    }
    let grad_1d = 2.0 * edge_grad;
    let pow_1d = (length - 2.0 * eps) + 2.0 * edge_pow;
    let d = dim as f64;
    let mollifier_kinetic = d * grad_1d / length;
    let n = particles as f64;
    let interaction = -(1.0 / p) * n.powf(p - 1.0) * length.powf(-d * p) * pow_1d.powi(dim as i32);
    Ok(PlaneWaveBound {
        dim,
        p,
        particles,
        length,
        mollifier_width: eps,
        mode_kinetic,
        mollifier_kinetic,
        interaction,
        per_particle: mode_kinetic + mollifier_kinetic + interaction,
        e_tf: e_tf(dim, p)?,
        degenerate_shell,
    })
}

/// Particle number `round(ρ_TF L^d)` at the Thomas–Fermi optimal density.
pub fn tf_particle_count(dim: usize, p: f64, length: f64) -> Result<usize> {
    let rho = rho_star(c_tf(dim)?, dim, p)?;
    Ok(((rho * length.powi(dim as i32)).round() as usize).max(1))
}
