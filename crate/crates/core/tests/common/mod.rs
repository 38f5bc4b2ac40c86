//! Independent oracles used only by the tests. None of them calls into the
//! solver code paths they check.

#![allow(dead_code)]

/// Composite Simpson rule on `[a, b]` with `n` (even) intervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Minimizer of a unimodal `f` on `[a, b]` by golden-section search.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// The 1D soliton `Q = p^{1/(2p-2)} sech((p-1)x)^{1/(p-1)}` solving
/// `-Q'' + Q - Q^{2p-1} = 0`, rescaled to unit mass.
#[derive(Clone, Copy, Debug)]
pub struct Soliton {
    /// `∫|u'|²` and `∫|u|^{2p}` of the unit-mass profile.
    pub kinetic: f64,
    pub power: f64,
    pub i1: f64,
    pub mu1: f64,
}

pub fn soliton(p: f64) -> Soliton {
    let amp = p.powf(1.0 / (2.0 * p - 2.0));
    let q = |x: f64| amp * (1.0 / ((p - 1.0) * x).cosh()).powf(1.0 / (p - 1.0));
    let dq = |x: f64| -q(x) * ((p - 1.0) * x).tanh();
    let x_max = 80.0 / (p - 1.0).min(1.0);
    let n = 400_000;
    let m = 2.0 * simpson(|x| q(x).powi(2), 0.0, x_max, n);
    let t = 2.0 * simpson(|x| dq(x).powi(2), 0.0, x_max, n);
    let w = 2.0 * simpson(|x| q(x).powf(2.0 * p), 0.0, x_max, n);
    // u(x) = a Q(bx) with a^{2p-2} = b² keeps the equation; unit mass fixes b.
    let b = m.powf(-(p - 1.0) / (3.0 - p));
    let a = b.powf(1.0 / (p - 1.0));
    let kinetic = a * a * b * t;
    let power = a.powf(2.0 * p) * w / b;
    Soliton { kinetic, power, i1: kinetic - power / p, mu1: -b * b }
}

/// `I(λ)` as the minimum over dilations `√λ s^{d/2} φ(s x)` of the unit
/// minimizer, found by golden-section search in `log s`.
pub fn dilation_energy(dim: usize, p: f64, kinetic: f64, power: f64, lambda: f64) -> f64 {
    let d = dim as f64;
    let e = |ls: f64| {
        let s = ls.exp();
        lambda * s * s * kinetic - lambda.powf(p) * s.powf(d * (p - 1.0)) * power / p
    };
    golden_min(e, -100.0, 100.0, 1e-12).1
}

/// `min_ρ C ρ^{2/d} - ρ^{p-1}/p`: the per-particle minimum of the local
/// functional, attained by a density that is either zero or one level.
pub fn bang_bang_per_particle(dim: usize, p: f64, c: f64) -> f64 {
    let d = dim as f64;
    let f = |lr: f64| {
        let r = lr.exp();
        c * r.powf(2.0 / d) - r.powf(p - 1.0) / p
    };
    golden_min(f, -200.0, 200.0, 1e-13).1
}

/// Bound states of `-d²/dx² - l(l+1) sech² x`: `-(l-j)²`, `j < l`.
pub fn poschl_teller(l: usize) -> Vec<f64> {
    (0..l).map(|j| -(((l - j) as f64).powi(2))).collect()
}

/// Dense symmetric eigenvalues via nalgebra, used as a brute-force check
/// of the iterative eigensolver.
pub fn dense_eigenvalues(m: nalgebra::DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Fourier spectral second-derivative matrix on `n` (even) periodic points
/// of a box of side `l`, from the closed-form cardinal-function entries.
pub fn spectral_neg_laplacian(n: usize, l: f64) -> nalgebra::DMatrix<f64> {
    use std::f64::consts::PI;
    let h = 2.0 * PI / n as f64;
    let scale = (2.0 * PI / l).powi(2);
    nalgebra::DMatrix::from_fn(n, n, |i, j| {
        let v = if i == j {
            PI * PI / (3.0 * h * h) + 1.0 / 6.0
        } else {
            let k = i as f64 - j as f64;
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * 0.5 / (0.5 * k * h).sin().powi(2)
        };
        v * scale
    })
}
