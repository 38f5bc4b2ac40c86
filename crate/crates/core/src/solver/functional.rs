use crate::grid::{Grid, GridFunction};

use super::model::OrbitalSet;

/// Pointwise `Σ ν_i u_i²` on raw arrays.
pub fn density_raw(orbitals: &[Vec<f64>], occupations: &[f64], len: usize) -> Vec<f64> {
    let mut rho = vec![0.0; len];
    for (u, &nu) in orbitals.iter().zip(occupations) {
        for (r, x) in rho.iter_mut().zip(u) {
            *r += nu * x * x;
        }
    }
    rho
}

/// Mean-field potential `-ρ^{p-1}`.
pub fn potential(rho: &[f64], p: f64) -> Vec<f64> {
    rho.iter().map(|&r| -r.max(0.0).powf(p - 1.0)).collect()
}

/// `(-Δ + V) u` for a precomputed potential.
pub fn apply_hamiltonian(grid: &Grid, v: &[f64], u: &[f64]) -> Vec<f64> {
    let mut out = grid.neg_laplacian(u);
    for ((o, &vi), &ui) in out.iter_mut().zip(v).zip(u) {
        *o += vi * ui;
    }
    out
}

/// `∫ρ^p`.
pub fn interaction_integral(grid: &Grid, rho: &[f64], p: f64) -> f64 {
    grid.cell_volume() * rho.iter().map(|&r| r.max(0.0).powf(p)).sum::<f64>()
}

/// Kinetic and interaction parts `(Σ ν_i ∫|∇u_i|², ∫ρ^p)`.
pub fn energy_parts(grid: &Grid, orbitals: &[Vec<f64>], occupations: &[f64], p: f64) -> (f64, f64) {
    let kinetic: f64 = orbitals
        .iter()
        .zip(occupations)
        .map(|(u, &nu)| nu * grid.kinetic(u))
        .sum();
    let rho = density_raw(orbitals, occupations, grid.len());
    (kinetic, interaction_integral(grid, &rho, p))
}

pub fn energy_raw(grid: &Grid, orbitals: &[Vec<f64>], occupations: &[f64], p: f64) -> f64 {
    let (t, w) = energy_parts(grid, orbitals, occupations, p);
    t - w / p
}

/// `Σ ν_i ∫|∇u_i|² - (1/p)∫ρ^p`.
pub fn energy(orbitals: &OrbitalSet, p: f64) -> f64 {
    match orbitals.grid() {
        None => 0.0,
        Some(grid) => energy_raw(grid, &orbitals.raw(), orbitals.occupations(), p),
    }
}

pub fn density(orbitals: &OrbitalSet) -> Option<GridFunction> {
    let grid = orbitals.grid()?;
    let rho = density_raw(&orbitals.raw(), orbitals.occupations(), grid.len());
    Some(GridFunction::from_raw(grid, rho))
}

/// `-Δu - ρ^{p-1} u`.
pub fn mean_field_apply(rho: &GridFunction, p: f64, u: &GridFunction) -> GridFunction {
    let v = potential(rho.values(), p);
    GridFunction::from_raw(u.grid(), apply_hamiltonian(u.grid(), &v, u.values()))
}

/// Free gradient `∂E/∂u_i = 2 ν_i H_γ u_i` for every orbital.
pub fn energy_gradient(grid: &Grid, orbitals: &[Vec<f64>], occupations: &[f64], p: f64) -> Vec<Vec<f64>> {
    let rho = density_raw(orbitals, occupations, grid.len());
    let v = potential(&rho, p);
    orbitals
        .iter()
        .zip(occupations)
        .map(|(u, &nu)| {
            let mut g = apply_hamiltonian(grid, &v, u);
            g.iter_mut().for_each(|x| *x *= 2.0 * nu);
            g
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_set_has_zero_energy() {
        assert_eq!(energy(&OrbitalSet::empty(), 1.5), 0.0);
    }

    #[test]
    fn constant_density_potential_is_diagonal_in_fourier() {
        let grid = Grid::new(1, 10.0, 64).unwrap();
        let c = 0.7;
        let rho = grid.sample(|_| c);
        let k = 2.0 * std::f64::consts::PI * 3.0 / 10.0;
        let u = grid.sample(|x| (k * x[0]).cos());
        let hu = mean_field_apply(&rho, 1.4, &u);
        let factor = k * k - c.powf(0.4);
        for (a, b) in hu.values().iter().zip(u.values()) {
            assert!((a - factor * b).abs() < 1e-10);
        }
    }

    #[test]
    fn fractional_density_integrates_to_mass() {
        let grid = Grid::new(1, 20.0, 128).unwrap();
        let mut block: Vec<Vec<f64>> = (0..2)
            .map(|k| grid.sample(|x| x[0].powi(k) * (-x[0] * x[0] / 2.0).exp()).into_values())
            .collect();
        crate::linalg::lowdin_orthonormalize(&grid, &mut block, 1e-12).unwrap();
        let rho = density_raw(&block, &[1.0, 0.5], grid.len());
        assert!((grid.integrate(&rho) - 1.5).abs() < 1e-12);
    }
}
