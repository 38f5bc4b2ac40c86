//! Periodic box discretization of ℝ^d with a Fourier-spectral Laplacian.
//!
//! A [`Grid`] is a cube of side `L` sampled by `n` points per axis at
//! `x_j = -L/2 + j h`, `h = L/n`, with periodic identification. Integrals
//! use the midpoint rule `h^d Σ f`, which on a periodic grid is consistent
//! with the discrete Fourier transform: the Laplacian multiplies the
//! coefficient of frequency `k` by `|k|²`, `k ∈ (2π/L){-n/2, …, n/2-1}^d`.
//!
//! Values are stored row-major with the last axis contiguous. FFT plans are
//! shared behind an `Arc`; scratch buffers are allocated per call, so every
//! operation here is safe to run from several threads at once.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

struct Plan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// |k|² for every grid point, in FFT ordering.
    k2: Vec<f64>,
}

/// Geometry of a grid without the transform plans; this is what gets
/// serialized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub length: f64,
    pub n: usize,
}

#[derive(Clone)]
pub struct Grid {
    spec: GridSpec,
    plan: Arc<Plan>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.spec.dim)
            .field("length", &self.spec.length)
            .field("n", &self.spec.n)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Grid {
    /// Builds a `dim`-dimensional periodic grid of side `length` with `n`
    /// points per axis.
    pub fn new(dim: usize, length: f64, n: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and at least 8, got {n}"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!("box length must be positive, got {length}")));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        let axis_k2: Vec<f64> = (0..n)
            .map(|j| {
                let k = Self::wavenumber_index(j, n) as f64 * 2.0 * PI / length;
                k * k
            })
            .collect();
        let total = n.pow(dim as u32);
        let mut k2 = vec![0.0; total];
        for (idx, slot) in k2.iter_mut().enumerate() {
            let mut rest = idx;
            let mut acc = 0.0;
            for _ in 0..dim {
                acc += axis_k2[rest % n];
                rest /= n;
            }
            *slot = acc;
        }

        Ok(Self {
            spec: GridSpec { dim, length, n },
            plan: Arc::new(Plan { forward, inverse, k2 }),
        })
    }

    pub fn from_spec(spec: GridSpec) -> Result<Self> {
        Self::new(spec.dim, spec.length, spec.n)
    }

    fn wavenumber_index(j: usize, n: usize) -> i64 {
        if j < n / 2 {
            j as i64
        } else {
            j as i64 - n as i64
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn length(&self) -> f64 {
        self.spec.length
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn spacing(&self) -> f64 {
        self.spec.length / self.spec.n as f64
    }

    /// Total number of points `n^d`.
    pub fn len(&self) -> usize {
        self.plan.k2.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^d` of a single point.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.spec.dim as i32)
    }

    /// Coordinate of index `j` along any axis.
    pub fn coordinate(&self, j: usize) -> f64 {
        -0.5 * self.spec.length + j as f64 * self.spacing()
    }

    /// Per-axis indices of a flat index (unused axes are zero).
    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let n = self.spec.n;
        let mut out = [0usize; 3];
        let mut rest = idx;
        for axis in (0..self.spec.dim).rev() {
            out[axis] = rest % n;
            rest /= n;
        }
        out
    }

    pub fn flat_index(&self, multi: [usize; 3]) -> usize {
        let n = self.spec.n;
        (0..self.spec.dim).fold(0, |acc, axis| acc * n + multi[axis] % n)
    }

    /// Cartesian position of a flat index (unused axes are zero).
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        let mut x = [0.0; 3];
        for axis in 0..self.spec.dim {
            x[axis] = self.coordinate(m[axis]);
        }
        x
    }

    /// Angular frequencies along one axis in FFT order.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.spec.n;
        (0..n)
            .map(|j| Self::wavenumber_index(j, n) as f64 * 2.0 * PI / self.spec.length)
            .collect()
    }

    /// `|k|²` for every point, in FFT order.
    pub fn k2(&self) -> &[f64] {
        &self.plan.k2
    }

    /// Samples `f` at every grid point.
    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> GridFunction {
        let d = self.spec.dim;
        let values = (0..self.len())
            .map(|idx| {
                let x = self.point(idx);
                f(&x[..d])
            })
            .collect();
        GridFunction { grid: self.clone(), values }
    }

    pub fn zeros(&self) -> GridFunction {
        GridFunction { grid: self.clone(), values: vec![0.0; self.len()] }
    }

    fn transform(&self, buf: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.spec.n;
        let total = buf.len();
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        for axis in 0..self.spec.dim {
            let stride = n.pow((self.spec.dim - 1 - axis) as u32);
            if stride == 1 {
                fft.process_with_scratch(buf, &mut scratch);
                continue;
            }
            let block = n * stride;
            let mut lines = vec![Complex64::default(); total];
            let mut line = 0;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for j in 0..n {
                        lines[line * n + j] = buf[base + j * stride];
                    }
                    line += 1;
                }
            }
            fft.process_with_scratch(&mut lines, &mut scratch);
            line = 0;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for j in 0..n {
                        buf[base + j * stride] = lines[line * n + j];
                    }
                    line += 1;
                }
            }
        }
    }

    /// Unnormalized forward DFT of real samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.len());
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.plan.forward);
        buf
    }

    /// Inverse DFT (normalized by `1/M`), keeping the real part.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spectrum, &self.plan.inverse);
        let scale = 1.0 / self.len() as f64;
        spectrum.iter().map(|c| c.re * scale).collect()
    }

    /// `h^d Σ f g`.
    pub fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), g.len());
        f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() * self.cell_volume()
    }

    /// `h^d Σ f`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.cell_volume()
    }

    /// `-Δ f` through the spectral multiplier `|k|²`.
    pub fn neg_laplacian(&self, f: &[f64]) -> Vec<f64> {
        let mut spec = self.forward(f);
        for (c, &k2) in spec.iter_mut().zip(self.k2()) {
            *c *= k2;
        }
        self.inverse_real(spec)
    }

    /// `∫|∇f|²` computed on the Fourier side.
    pub fn kinetic(&self, f: &[f64]) -> f64 {
        let spec = self.forward(f);
        let sum: f64 = spec.iter().zip(self.k2()).map(|(c, &k2)| k2 * c.norm_sqr()).sum();
        sum * self.cell_volume() / self.len() as f64
    }

    /// Applies the Fourier multiplier `m(|k|²)` to `f`.
    pub fn apply_multiplier<M: Fn(f64) -> f64>(&self, f: &[f64], m: M) -> Vec<f64> {
        let mut spec = self.forward(f);
        for (c, &k2) in spec.iter_mut().zip(self.k2()) {
            *c *= m(k2);
        }
        self.inverse_real(spec)
    }

    /// Exact cyclic shift by whole grid steps: `out[j] = f[j - steps]`.
    pub fn roll(&self, f: &[f64], steps: [isize; 3]) -> Vec<f64> {
        let n = self.spec.n as isize;
        let mut out = vec![0.0; f.len()];
        for (idx, &v) in f.iter().enumerate() {
            let mut m = self.multi_index(idx);
            for (a, s) in steps.iter().enumerate().take(self.spec.dim) {
                m[a] = (m[a] as isize + s).rem_euclid(n) as usize;
            }
            out[self.flat_index(m)] = v;
        }
        out
    }

    /// Rotation by a quarter turn in the plane of the first two axes,
    /// `out(x1, x2) = f(-x2, x1)`, exact on the grid. Identity in 1D.
    pub fn quarter_turn(&self, f: &[f64]) -> Vec<f64> {
        if self.spec.dim < 2 {
            return f.to_vec();
        }
        let n = self.spec.n;
        let mut out = vec![0.0; f.len()];
        for (idx, o) in out.iter_mut().enumerate() {
            let m = self.multi_index(idx);
            let mut src = m;
            src[0] = (n - m[1]) % n;
            src[1] = m[0];
            *o = f[self.flat_index(src)];
        }
        out
    }

    /// Spectral translation `f(x - shift)`.
    pub fn translate(&self, f: &[f64], shift: &[f64]) -> Vec<f64> {
        let d = self.spec.dim;
        let freqs = self.frequencies();
        let mut spec = self.forward(f);
        for (idx, c) in spec.iter_mut().enumerate() {
            let m = self.multi_index(idx);
            let phase: f64 = (0..d).map(|a| freqs[m[a]] * shift.get(a).copied().unwrap_or(0.0)).sum();
            *c *= Complex64::from_polar(1.0, -phase);
        }
        self.inverse_real(spec)
    }
}

/// A real field sampled on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("grid function has non-finite values".into()));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub(crate) fn from_raw(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    /// `⟨f, g⟩ = h^d Σ f g`.
    pub fn inner_product(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self.grid.dot(&self.values, &other.values))
    }

    pub fn norm_squared(&self) -> f64 {
        self.grid.dot(&self.values, &self.values)
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// `-Δ f`.
    pub fn laplacian_apply(&self) -> GridFunction {
        Self::from_raw(&self.grid, self.grid.neg_laplacian(&self.values))
    }

    /// `∫|∇f|²`.
    pub fn kinetic_energy(&self) -> f64 {
        self.grid.kinetic(&self.values)
    }

    /// `f(x - shift)`.
    pub fn translate(&self, shift: &[f64]) -> GridFunction {
        Self::from_raw(&self.grid, self.grid.translate(&self.values, shift))
    }

    pub fn scaled(&self, factor: f64) -> GridFunction {
        Self::from_raw(&self.grid, self.values.iter().map(|v| v * factor).collect())
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
