//! Box length and resolution from the decay scale of the expected state.

use serde::{Deserialize, Serialize};

use crate::bounds::{default_c_lt, e_lt, mu_lower_factor};
use crate::error::{Error, Result};
use crate::grid::Grid;

/// `L = max(L_min, c_box N^{1/d} + 2m / sqrt|μ_est|)` with `μ_est` the lower
/// bound on the last multiplier evaluated at `e_LT`: `m` decay lengths of
/// margin on each side of a core of size `c_box N^{1/d}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxPolicy {
    pub l_min: f64,
    pub c_box: f64,
    pub decay_lengths: f64,
    /// Grid points per decay length `1/sqrt|μ_est|` when `n` is not fixed.
    pub points_per_decay: f64,
    /// Re-solve at 1.5 L and compare energies.
    pub verify: bool,
    pub verify_tol: f64,
}

impl Default for BoxPolicy {
    fn default() -> Self {
        Self { l_min: 20.0, c_box: 10.0, decay_lengths: 14.0, points_per_decay: 6.0, verify: false, verify_tol: 1e-5 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GridPolicy {
    pub box_length: Option<f64>,
    pub grid_n: Option<usize>,
    pub rule: BoxPolicy,
}

impl GridPolicy {
    pub fn fixed(length: f64, n: usize) -> Self {
        Self { box_length: Some(length), grid_n: Some(n), rule: BoxPolicy::default() }
    }
}

/// Multiplier scale `((2p - d(p-1))/(2 - d(p-1))) e_LT` used by the box rule.
pub fn mu_estimate(dim: usize, p: f64) -> Result<f64> {
    let c = default_c_lt(dim)?.value;
    Ok(mu_lower_factor(dim, p) * e_lt(dim, p, c)?)
}

pub fn box_length(dim: usize, p: f64, mass: f64, rule: &BoxPolicy) -> Result<f64> {
    let n = crate::solver::model::orbital_count(mass) as f64;
    let decay = 1.0 / mu_estimate(dim, p)?.abs().sqrt();
    Ok(rule.l_min.max(rule.c_box * n.powf(1.0 / dim as f64) + 2.0 * rule.decay_lengths * decay))
}

/// Smallest even `2^a 3^b 5^c` not below `n`.
pub fn fft_friendly(n: usize) -> usize {
    let mut m = n.max(2);
    loop {
        if m % 2 == 0 {
            let mut r = m;
            for f in [2, 3, 5] {
                while r % f == 0 {
                    r /= f;
                }
            }
            if r == 1 {
                return m;
            }
        }
        m += 1;
    }
}

/// Point count with spacing at most one `points_per_decay`-th of the decay
/// length, at least 16, rounded up to a transform-friendly size.
pub fn points_for(dim: usize, p: f64, length: f64, rule: &BoxPolicy) -> Result<usize> {
    let decay = 1.0 / mu_estimate(dim, p)?.abs().sqrt();
    let needed = (length * rule.points_per_decay / decay).ceil() as usize;
    Ok(fft_friendly(needed.max(16)))
}

pub fn grid_for(dim: usize, p: f64, mass: f64, policy: &GridPolicy) -> Result<Grid> {
    let rule = &policy.rule;
    if !(rule.l_min > 0.0 && rule.points_per_decay > 0.0) {
        return Err(Error::InvalidParameter("box policy parameters must be positive".into()));
    }
    let length = match policy.box_length {
        Some(l) => l,
        None => box_length(dim, p, mass, rule)?,
    };
    let n = match policy.grid_n {
        Some(n) => n,
        None => points_for(dim, p, length, rule)?,
    };
    Grid::new(dim, length, n)
}

/// Same spacing on a box enlarged by about `factor`; the point count grows
/// by an even number so the old grid embeds centrally.
pub fn enlarged(grid: &Grid, factor: f64) -> Result<Grid> {
    let mut n = fft_friendly((grid.n() as f64 * factor).ceil() as usize);
    while (n - grid.n()) % 2 == 1 {
        n = fft_friendly(n + 1);
    }
    Grid::new(grid.dim(), grid.spacing() * n as f64, n)
}
