//! Two-cluster trial states: place two converged states at separation `R`
//! along the first axis, orthonormalize the union with `S^{-1/2}` and
//! measure the interaction energy `E(γ_R) - J - J'`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{self, Block};
use crate::scalar::ScalarGroundState;
use crate::solver::box_rule::GridPolicy;
use crate::solver::functional::{density_raw, energy_raw};
use crate::solver::ground::{periodic_center, sweep_mass, GroundStateResult};
use crate::solver::SolverConfig;

/// Smallest Gram eigenvalue accepted by the inverse square root.
pub const GRAM_FLOOR: f64 = 1e-12;

/// One input cluster, recentred on the grid origin.
#[derive(Clone, Debug)]
pub struct Cluster {
    grid: Grid,
    p: f64,
    orbitals: Block,
    occupations: Vec<f64>,
    energy: f64,
    mu_last: f64,
}

impl Cluster {
    pub fn new(grid: &Grid, p: f64, orbitals: Block, occupations: Vec<f64>, mu_last: f64) -> Result<Self> {
        if orbitals.is_empty() || orbitals.len() != occupations.len() {
            return Err(Error::InvalidParameter("cluster needs one occupation per orbital".into()));
        }
        if orbitals.iter().any(|u| u.len() != grid.len()) {
            return Err(Error::GridMismatch("orbital length differs from the grid".into()));
        }
        let rho = density_raw(&orbitals, &occupations, grid.len());
        let c = periodic_center(grid, &rho);
        let h = grid.spacing();
        let steps = [-(c[0] / h).round() as isize, -(c[1] / h).round() as isize, -(c[2] / h).round() as isize];
        let orbitals: Block = orbitals.iter().map(|u| grid.roll(u, steps)).collect();
        let energy = energy_raw(grid, &orbitals, &occupations, p);
        Ok(Self { grid: grid.clone(), p, orbitals, occupations, energy, mu_last })
    }

    pub fn from_ground_state(gs: &GroundStateResult) -> Result<Self> {
        let mu_last = *gs.mu.last().ok_or_else(|| Error::InvalidParameter("empty ground state".into()))?;
        Self::new(&gs.grid, gs.params.p, gs.orbitals.raw(), gs.orbitals.occupations().to_vec(), mu_last)
    }

    pub fn from_scalar(s: &ScalarGroundState) -> Result<Self> {
        Self::new(s.profile.grid(), s.p, vec![s.profile.values().to_vec()], vec![1.0], s.mu1)
    }

    /// The same cluster turned by `quarter_turns · 90°` in the first plane.
    pub fn rotated(&self, quarter_turns: u8) -> Self {
        let mut out = self.clone();
        for _ in 0..quarter_turns % 4 {
            out.orbitals = out.orbitals.iter().map(|u| self.grid.quarter_turn(u)).collect();
        }
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `E` of the recentred cluster on its own grid.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn mass(&self) -> f64 {
        self.occupations.iter().sum()
    }

    /// `ε = sqrt|μ|` of the last filled level.
    pub fn decay(&self) -> f64 {
        (-self.mu_last).max(0.0).sqrt()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DimerTrial {
    /// Separation actually used (a whole number of grid steps).
    pub separation: f64,
    pub gram_condition: f64,
    /// `e_R = max_{ij} ∫|u_i||v_{j,R}|`.
    pub overlap: f64,
    pub energy: f64,
    pub interaction: f64,
    /// `max |Gram(frame) - I|` of the orthonormalized frame.
    pub frame_defect: f64,
    #[serde(skip)]
    pub frame: Block,
    #[serde(skip)]
    pub occupations: Vec<f64>,
}

fn check_pair(left: &Cluster, right: &Cluster) -> Result<()> {
    if left.grid != right.grid {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", left.grid, right.grid)));
    }
    if (left.p - right.p).abs() > 0.0 {
        return Err(Error::InvalidParameter(format!("exponents differ: {} vs {}", left.p, right.p)));
    }
    Ok(())
}

/// Largest separation for which the periodic images stay farther apart
/// than the direct neighbours by four decay lengths of the slower cluster.
pub fn max_separation(left: &Cluster, right: &Cluster) -> f64 {
    let eps = left.decay().min(right.decay()).max(1e-12);
    0.5 * (left.grid.length() - 4.0 / eps)
}

pub fn build_dimer(left: &Cluster, right: &Cluster, separation: f64) -> Result<DimerTrial> {
    check_pair(left, right)?;
    let grid = &left.grid;
    if !(separation >= 0.0) || separation > max_separation(left, right) {
        return Err(Error::InvalidParameter(format!(
            "separation {separation} outside [0, {:.3}] for box length {}",
            max_separation(left, right),
            grid.length()
        )));
    }
    let k = (separation / grid.spacing()).round() as isize;
    let (kl, kr) = (-(k / 2), k - k / 2);
    let mut union: Block = left.orbitals.iter().map(|u| grid.roll(u, [kl, 0, 0])).collect();
    union.extend(right.orbitals.iter().map(|v| grid.roll(v, [kr, 0, 0])));
    let mut occupations = left.occupations.clone();
    occupations.extend_from_slice(&right.occupations);

    let nl = left.orbitals.len();
    let abs_l: Block = union[..nl].iter().map(|u| u.iter().map(|x| x.abs()).collect()).collect();
    let abs_r: Block = union[nl..].iter().map(|u| u.iter().map(|x| x.abs()).collect()).collect();
    let overlap = linalg::cross_gram(grid, &abs_l, &abs_r).max();

    let s = linalg::gram(grid, &union);
    let gram_condition = linalg::condition_number(&s);
    let c = linalg::inverse_sqrt(&s, GRAM_FLOOR)?;
    let frame = linalg::combine(&union, &c);
    let g = linalg::gram(grid, &frame);
    let frame_defect = (g - nalgebra::DMatrix::identity(frame.len(), frame.len())).abs().max();
    let energy = energy_raw(grid, &frame, &occupations, left.p);
    Ok(DimerTrial {
        separation: k as f64 * grid.spacing(),
        gram_condition,
        overlap,
        energy,
        interaction: energy - left.energy - right.energy,
        frame_defect,
        frame,
        occupations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub separation: f64,
    pub interaction: Option<f64>,
    pub gram_condition: Option<f64>,
    pub overlap: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionCurve {
    pub points: Vec<CurvePoint>,
    /// Decay rate of `|interaction|` fitted over the window, if enough
    /// points fall inside it.
    pub fitted_rate: Option<f64>,
    pub fit_window: Option<(f64, f64)>,
    pub fit_points: usize,
    /// `2p εε'/(ε+ε')`.
    pub theory_rate_attract: f64,
    /// `2ε'` with `ε' ≤ ε`.
    pub theory_rate_orth: f64,
    pub eps: f64,
    pub eps_prime: f64,
    /// Roundoff level of an energy difference.
    pub noise: f64,
    /// `p < 1 + ε'/ε`, the sufficient condition for attraction.
    pub attraction_condition: bool,
}

/// `(2pεε'/(ε+ε'), 2ε')` with `ε' = min`.
pub fn theory_rates(p: f64, eps_a: f64, eps_b: f64) -> (f64, f64) {
    let (e, ep) = (eps_a.max(eps_b), eps_a.min(eps_b));
    (2.0 * p * e * ep / (e + ep), 2.0 * ep)
}

/// Least-squares rate of `log|interaction|` against `R` for negative
/// points with `|interaction| ∈ [lo, hi]`.
pub fn fit_rate(points: &[(f64, f64)], lo: f64, hi: f64) -> Option<(f64, (f64, f64), usize)> {
    let sel: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(_, v)| v < 0.0 && v.abs() >= lo && v.abs() <= hi)
        .map(|&(r, v)| (r, v.abs().ln()))
        .collect();
    if sel.len() < 3 {
        return None;
    }
    let n = sel.len() as f64;
    let mx = sel.iter().map(|p| p.0).sum::<f64>() / n;
    let my = sel.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = sel.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = sel.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some((-sxy / sxx, (sel[0].0, sel[sel.len() - 1].0), sel.len()))
}

/// The fit keeps `|interaction|` above this multiple of the noise floor.
pub const FIT_NOISE_FACTOR: f64 = 1e3;
/// Upper end of the fit window as a fraction of `min(|J|, |J'|)`, where the
/// near-field corrections to the exponential have died out.
pub const FIT_UPPER: f64 = 1e-5;

pub fn interaction_curve(left: &Cluster, right: &Cluster, separations: &[f64]) -> Result<InteractionCurve> {
    check_pair(left, right)?;
    if separations.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("separations must be strictly ascending".into()));
    }
    let points: Vec<CurvePoint> = separations
        .par_iter()
        .map(|&r| match build_dimer(left, right, r) {
            Ok(t) => CurvePoint {
                separation: t.separation,
                interaction: Some(t.interaction),
                gram_condition: Some(t.gram_condition),
                overlap: Some(t.overlap),
                error: None,
            },
            Err(e) => CurvePoint { separation: r, interaction: None, gram_condition: None, overlap: None, error: Some(e.to_string()) },
        })
        .collect();
    let j_scale = left.energy.abs().min(right.energy.abs());
    let noise = 16.0 * f64::EPSILON * (left.energy.abs() + right.energy.abs());
    let samples: Vec<(f64, f64)> = points.iter().filter_map(|pt| pt.interaction.map(|v| (pt.separation, v))).collect();
    let fit = fit_rate(&samples, FIT_NOISE_FACTOR * noise, FIT_UPPER * j_scale);
    let (eps, eps_prime) = (left.decay().max(right.decay()), left.decay().min(right.decay()));
    let (attract, orth) = theory_rates(left.p, eps, eps_prime);
    Ok(InteractionCurve {
        points,
        fitted_rate: fit.map(|f| f.0),
        fit_window: fit.map(|f| f.1),
        fit_points: fit.map_or(0, |f| f.2),
        theory_rate_attract: attract,
        theory_rate_orth: orth,
        eps,
        eps_prime,
        noise,
        attraction_condition: left.p < 1.0 + eps_prime / eps,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub p: f64,
    pub j1: Option<f64>,
    pub j2: Option<f64>,
    /// `J(2) - 2J(1)` from solves on a common grid.
    pub gap: Option<f64>,
    pub error: Option<String>,
}

/// `J(2) - 2J(1)` for each exponent, both masses solved on one grid.
pub fn binding_gap_vs_p(dim: usize, ps: &[f64], cfg: &SolverConfig) -> Vec<GapPoint> {
    ps.iter()
        .map(|&p| {
            let run = sweep_mass(dim, p, &[1.0, 2.0], cfg, false).and_then(|pts| {
                let j1 = pts[0].result.as_ref().map_err(|e| Error::InvalidParameter(e.clone()))?.energy;
                let j2 = pts[1].result.as_ref().map_err(|e| Error::InvalidParameter(e.clone()))?.energy;
                Ok((j1, j2))
            });
            match run {
                Ok((j1, j2)) => GapPoint { p, j1: Some(j1), j2: Some(j2), gap: Some(j2 - 2.0 * j1), error: None },
                Err(e) => GapPoint { p, j1: None, j2: None, gap: None, error: Some(e.to_string()) },
            }
        })
        .collect()
}

/// Grid policy for a dimer run: the default box for the cluster plus room
/// for separations up to `r_max`.
pub fn dimer_policy(dim: usize, p: f64, mass: f64, r_max: f64, base: &GridPolicy) -> Result<GridPolicy> {
    let single = crate::solver::box_rule::grid_for(dim, p, mass, base)?;
    let length = single.length() + 2.0 * r_max;
    let n = crate::solver::box_rule::fft_friendly((length / single.spacing()).ceil() as usize);
    Ok(GridPolicy { box_length: Some(length), grid_n: Some(n), rule: base.rule.clone() })
}
