//! Starting frames: a harmonic-oscillator ladder and seeded random fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::Grid;
use crate::linalg::{self, Block};

use super::eigen::smooth_random;

/// Normalized Hermite functions `ψ_0..ψ_{n-1}` at `x`.
fn hermite_functions(x: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
    for k in 0..n {
        out.push(cur);
        let next = (2.0 / (k + 1) as f64).sqrt() * x * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    out
}

/// Multi-indices of total degree ascending, lexicographic within a degree.
fn ladder_indices(dim: usize, count: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(count);
    let mut degree = 0;
    while out.len() < count {
        let mut level = Vec::new();
        for a in 0..=degree {
            for b in 0..=(degree - a) {
                let c = degree - a - b;
                let idx = [a, b, c];
                if idx[dim..].iter().all(|&e| e == 0) {
                    level.push(idx);
                }
            }
        }
        level.sort();
        level.reverse();
        out.extend(level);
        degree += 1;
    }
    out.truncate(count);
    out
}

/// `count` products of Hermite functions of width `sigma`, Löwdin
/// orthonormalized on the grid.
pub fn oscillator_ladder(grid: &Grid, count: usize, sigma: f64) -> Block {
    let dim = grid.dim();
    let idx = ladder_indices(dim, count);
    let top = idx.iter().flat_map(|i| i.iter().copied()).max().unwrap_or(0) + 1;
    let axis: Vec<Vec<f64>> = (0..grid.n())
        .map(|j| hermite_functions(grid.coordinate(j) / sigma, top))
        .collect();
    let mut block: Block = idx
        .iter()
        .map(|e| {
            (0..grid.len())
                .map(|flat| {
                    let mi = grid.multi_index(flat);
                    (0..dim).map(|a| axis[mi[a]][e[a]]).product()
                })
                .collect()
        })
        .collect();
    let c = linalg::orthonormal_coefficients(&linalg::gram(grid, &block), 1e-12);
    block = linalg::combine(&block, &c);
    block
}

/// Random smooth fields under a Gaussian envelope of width `sigma` around a
/// random center, orthonormalized.
pub fn random_frame(grid: &Grid, count: usize, sigma: f64, seed: u64) -> Block {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim();
    let center: Vec<f64> = (0..dim).map(|_| (rng.random::<f64>() - 0.5) * 0.5 * sigma).collect();
    let fields = smooth_random(grid, count, &mut rng);
    let mut block: Block = fields
        .into_iter()
        .map(|f| {
            f.iter()
                .enumerate()
                .map(|(flat, v)| {
                    let x = grid.point(flat);
                    let r2: f64 = (0..dim).map(|a| (x[a] - center[a]).powi(2)).sum();
                    v * (-r2 / (2.0 * sigma * sigma)).exp()
                })
                .collect()
        })
        .collect();
    let c = linalg::orthonormal_coefficients(&linalg::gram(grid, &block), 1e-12);
    block = linalg::combine(&block, &c);
    block
}

/// Restart `index`: the ladder (slightly perturbed) for index 0, random
/// fields otherwise. Always returns `count` orthonormal columns.
pub fn initial_frame(grid: &Grid, count: usize, sigma: f64, seed: u64, index: usize) -> Block {
    let sub_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64);
    let mut block = if index == 0 {
        let mut ladder = oscillator_ladder(grid, count, sigma);
        let noise = random_frame(grid, count, sigma, sub_seed);
        for (u, n) in ladder.iter_mut().zip(&noise) {
            for (a, b) in u.iter_mut().zip(n) {
                *a += 1e-3 * b;
            }
        }
        ladder
    } else {
        random_frame(grid, count, sigma, sub_seed)
    };
    let mut k = 1;
    while block.len() < count {
        let extra = random_frame(grid, count - block.len(), sigma * 2.0, sub_seed ^ (k << 32));
        block.extend(extra);
        let c = linalg::orthonormal_coefficients(&linalg::gram(grid, &block), 1e-12);
        block = linalg::combine(&block, &c);
        k += 1;
    }
    let _ = linalg::lowdin_orthonormalize(grid, &mut block, 1e-14);
    block
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_order_two_dimensions() {
        let idx = ladder_indices(2, 6);
        assert_eq!(idx[0], [0, 0, 0]);
        assert_eq!(idx[1], [1, 0, 0]);
        assert_eq!(idx[2], [0, 1, 0]);
        assert_eq!(idx[3], [2, 0, 0]);
    }

    #[test]
    fn frames_are_orthonormal() {
        let grid = Grid::new(2, 20.0, 32).unwrap();
        for index in 0..3 {
            let block = initial_frame(&grid, 7, 2.0, 11, index);
            let g = linalg::gram(&grid, &block);
            let err = (g - nalgebra::DMatrix::identity(7, 7)).abs().max();
            assert!(err < 1e-10, "restart {index}: {err}");
        }
    }
}
