use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

/// Upper end `1 + 2/d` of the admissible exponent range.
pub fn exponent_upper(dim: usize) -> f64 {
    1.0 + 2.0 / dim as f64
}

/// Rejects `p` outside the open interval `(1, 1 + 2/d)`.
pub fn check_exponent(dim: usize, p: f64) -> Result<()> {
    let upper = exponent_upper(dim);
    if !(p > 1.0 && p < upper) {
        return Err(Error::ExponentOutOfRange { dim, p, upper });
    }
    Ok(())
}

/// Smallest integer `N ≥ λ` (and at least one).
pub fn orbital_count(mass: f64) -> usize {
    let n = (mass - 1e-12).ceil();
    if n < 1.0 {
        1
    } else {
        n as usize
    }
}

/// Occupations `1, …, 1, λ - N + 1` of the aufbau form.
pub fn aufbau_occupations(mass: f64) -> Vec<f64> {
    let n = orbital_count(mass);
    let mut occ = vec![1.0; n];
    occ[n - 1] = mass - (n - 1) as f64;
    occ
}

/// Problem instance: dimension, exponent, total mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub dim: usize,
    pub p: f64,
    pub mass: f64,
}

impl ModelParams {
    pub fn new(dim: usize, p: f64, mass: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        check_exponent(dim, p)?;
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
        }
        Ok(Self { dim, p, mass })
    }

    pub fn orbital_count(&self) -> usize {
        orbital_count(self.mass)
    }

    pub fn occupations(&self) -> Vec<f64> {
        aufbau_occupations(self.mass)
    }
}

/// `N` orthonormal orbitals with occupations `ν_i`; only the last one may
/// be fractional.
#[derive(Clone, Debug)]
pub struct OrbitalSet {
    orbitals: Vec<GridFunction>,
    occupations: Vec<f64>,
}

impl OrbitalSet {
    pub fn new(orbitals: Vec<GridFunction>, occupations: Vec<f64>) -> Result<Self> {
        if orbitals.len() != occupations.len() {
            return Err(Error::InvalidParameter(format!(
                "{} orbitals but {} occupations",
                orbitals.len(),
                occupations.len()
            )));
        }
        if let Some(first) = orbitals.first() {
            if orbitals.iter().any(|u| u.grid() != first.grid()) {
                return Err(Error::GridMismatch("orbitals live on different grids".into()));
            }
        }
        let n = occupations.len();
        for (i, &nu) in occupations.iter().enumerate() {
            let ok = if i + 1 < n { nu == 1.0 } else { nu > 0.0 && nu <= 1.0 };
            if !ok {
                return Err(Error::InvalidParameter(format!("occupation {i} = {nu} is not of aufbau form")));
            }
        }
        Ok(Self { orbitals, occupations })
    }

    /// Orbitals with the aufbau occupations of total `mass`.
    pub fn with_mass(orbitals: Vec<GridFunction>, mass: f64) -> Result<Self> {
        Self::new(orbitals, aufbau_occupations(mass))
    }

    pub fn empty() -> Self {
        Self { orbitals: Vec::new(), occupations: Vec::new() }
    }

    pub fn orbitals(&self) -> &[GridFunction] {
        &self.orbitals
    }

    pub fn occupations(&self) -> &[f64] {
        &self.occupations
    }

    pub fn len(&self) -> usize {
        self.orbitals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbitals.is_empty()
    }

    pub fn grid(&self) -> Option<&Grid> {
        self.orbitals.first().map(GridFunction::grid)
    }

    pub fn mass(&self) -> f64 {
        self.occupations.iter().sum()
    }

    pub fn raw(&self) -> Vec<Vec<f64>> {
        self.orbitals.iter().map(|u| u.values().to_vec()).collect()
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.orbitals.iter().enumerate() {
            for (j, b) in self.orbitals.iter().enumerate().skip(i) {
                let g = a.grid().dot(a.values(), b.values());
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }
}
