//! Small dense helpers on blocks of grid vectors: Gram matrices, symmetric
//! eigendecompositions, Löwdin orthonormalization and Rayleigh–Ritz.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::grid::Grid;

pub type Block = Vec<Vec<f64>>;

/// Eigenvalues in ascending order with matching eigenvector columns.
pub fn sym_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(a.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `G_ij = ⟨a_i, b_j⟩`.
pub fn cross_gram(grid: &Grid, a: &[Vec<f64>], b: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| grid.dot(&a[i], &b[j]))
}

pub fn gram(grid: &Grid, a: &[Vec<f64>]) -> DMatrix<f64> {
    let m = a.len();
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = grid.dot(&a[i], &a[j]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// `out_j = Σ_i coeffs[i, j] · vectors_i`.
pub fn combine(vectors: &[Vec<f64>], coeffs: &DMatrix<f64>) -> Block {
    debug_assert_eq!(vectors.len(), coeffs.nrows());
    let len = vectors.first().map_or(0, Vec::len);
    (0..coeffs.ncols())
        .map(|j| {
            let mut out = vec![0.0; len];
            for (i, v) in vectors.iter().enumerate() {
                let c = coeffs[(i, j)];
                if c != 0.0 {
                    for (o, x) in out.iter_mut().zip(v) {
                        *o += c * x;
                    }
                }
            }
            out
        })
        .collect()
}

/// `S^{-1/2}` of a symmetric positive definite matrix. Fails when the
/// smallest eigenvalue is below `floor`.
pub fn inverse_sqrt(s: &DMatrix<f64>, floor: f64) -> Result<DMatrix<f64>> {
    let (values, vectors) = sym_eigen(s);
    let smallest = values.first().copied().unwrap_or(1.0);
    if smallest < floor {
        return Err(Error::SingularGram(smallest));
    }
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values.iter().map(|v| 1.0 / v.sqrt()),
    ));
    Ok(&vectors * d * vectors.transpose())
}

/// Condition number of a symmetric positive definite matrix.
pub fn condition_number(s: &DMatrix<f64>) -> f64 {
    let (values, _) = sym_eigen(s);
    match (values.first(), values.last()) {
        (Some(&lo), Some(&hi)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Löwdin orthonormalization `(φ_i) ← Σ_j (S^{-1/2})_{ji} φ_j` in place.
pub fn lowdin_orthonormalize(grid: &Grid, vectors: &mut Block, floor: f64) -> Result<DMatrix<f64>> {
    let s = gram(grid, vectors);
    let x = inverse_sqrt(&s, floor)?;
    *vectors = combine(vectors, &x);
    Ok(x)
}

/// Coefficients `C` (m × r) such that `basis · C` is orthonormal, dropping
/// directions whose Gram eigenvalue falls below `rel_tol · max`.
pub fn orthonormal_coefficients(s: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (values, vectors) = sym_eigen(s);
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i] > rel_tol * top).collect();
    DMatrix::from_fn(s.nrows(), keep.len(), |r, c| vectors[(r, keep[c])] / values[keep[c]].sqrt())
}

/// Rayleigh–Ritz on the span of `basis` for the operator whose images are
/// `images`. Returns Ritz values (ascending) and coefficient columns
/// expressing the Ritz vectors in `basis`.
pub fn rayleigh_ritz(
    grid: &Grid,
    basis: &[Vec<f64>],
    images: &[Vec<f64>],
    rel_tol: f64,
) -> (Vec<f64>, DMatrix<f64>) {
    let s = gram(grid, basis);
    let c = orthonormal_coefficients(&s, rel_tol);
    let h = cross_gram(grid, basis, images);
    let h = (&h + h.transpose()) * 0.5;
    let reduced = c.transpose() * h * &c;
    let (values, w) = sym_eigen(&reduced);
    (values, c * w)
}

pub fn normalize(grid: &Grid, v: &mut [f64]) -> f64 {
    let norm = grid.dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_sqrt_squares_to_inverse() {
        let s = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.5, 0.2, 0.1, 0.2, 1.0]);
        let x = inverse_sqrt(&s, 1e-12).unwrap();
        let id = &x * &s * &x;
        assert!((id - DMatrix::identity(3, 3)).abs().max() < 1e-12);
    }

    #[test]
    fn inverse_sqrt_rejects_singular() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(inverse_sqrt(&s, 1e-12), Err(Error::SingularGram(_))));
    }

    #[test]
    fn lowdin_gives_orthonormal_block() {
        let grid = Grid::new(1, 10.0, 64).unwrap();
        let mut block: Block = (0..4)
            .map(|k| grid.sample(|x| (-(x[0] - k as f64).powi(2)).exp()).into_values())
            .collect();
        lowdin_orthonormalize(&grid, &mut block, 1e-12).unwrap();
        let g = gram(&grid, &block);
        assert!((g - DMatrix::identity(4, 4)).abs().max() < 1e-12);
    }

    #[test]
    fn eigen_sorted_ascending() {
        let a = DMatrix::from_row_slice(3, 3, &[3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0]);
        let (v, _) = sym_eigen(&a);
        assert_eq!(v, vec![-1.0, 2.0, 3.0]);
    }
}
