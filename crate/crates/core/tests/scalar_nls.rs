mod common;

use fnls::scalar::{energy_exponent, mu_lambda, radial_ground_state, solve_scalar, I_lambda, ScalarOptions};
use fnls::solver::GridPolicy;
use fnls::Error;
use proptest::prelude::*;

/// `I(1, p, 1)` from the soliton oracle, frozen.
const I1_1D: [(f64, f64); 3] = [
    (1.3, -3.539468289403896e-1),
    (1.6, -1.270210486929800e-1),
    (1.9, -3.550414704329791e-2),
];

#[test]
fn frozen_values_match_the_soliton_oracle() {
    for (p, frozen) in I1_1D {
        let s = common::soliton(p);
        assert!((s.i1 - frozen).abs() < 1e-13, "p = {p}: {} vs {frozen}", s.i1);
        // Virial: ∫|u'|² = (p-1)/(2p) ∫|u|^{2p} in one dimension.
        assert!((s.kinetic - (p - 1.0) / (2.0 * p) * s.power).abs() < 1e-12);
    }
}

#[test]
fn radial_shooting_matches_the_soliton() {
    for (p, frozen) in I1_1D {
        let r = radial_ground_state(1, p).unwrap();
        let s = common::soliton(p);
        assert!((r.i1 - frozen).abs() < 1e-10 * frozen.abs(), "p = {p}");
        assert!((r.mu1 - s.mu1).abs() < 1e-10 * s.mu1.abs(), "p = {p}");
    }
}

#[test]
fn grid_solver_matches_the_soliton() {
    for (p, frozen) in I1_1D {
        let g = solve_scalar(1, p, &ScalarOptions::default()).unwrap();
        assert!(g.converged, "p = {p}");
        assert!((g.i1 - frozen).abs() < 1e-6 * frozen.abs(), "p = {p}: {} vs {frozen}", g.i1);
        assert!(g.min_value > -1e-8, "profile should not change sign");
        assert!(g.virial_residual < 1e-6);
    }
}

#[test]
fn grid_solver_matches_radial_shooting_in_two_and_three_dimensions() {
    // The automatic box is sized for clusters; a single 3D profile is
    // checked on a fixed 64³ grid to keep the test fast.
    for (d, policy) in [(2, GridPolicy::default()), (3, GridPolicy::fixed(56.0, 64))] {
        let r = radial_ground_state(d, 1.2).unwrap();
        let g = solve_scalar(d, 1.2, &ScalarOptions { policy, ..ScalarOptions::default() }).unwrap();
        assert!(g.converged, "d = {d}");
        assert!((g.i1 - r.i1).abs() < 1e-5 * r.i1.abs(), "d = {d}: grid {} radial {}", g.i1, r.i1);
    }
}

#[test]
fn endpoint_exponents_are_rejected() {
    for (d, p) in [(1, 3.0), (2, 2.0), (3, 5.0 / 3.0), (1, 1.0)] {
        let err = solve_scalar(d, p, &ScalarOptions::default()).unwrap_err();
        assert!(matches!(err, Error::ExponentOutOfRange { .. }), "d = {d}, p = {p}: {err}");
        assert!(radial_ground_state(d, p).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaling_law_matches_dilation_oracle(p in 1.05f64..2.9, lambda in 0.05f64..8.0) {
        let s = common::soliton(p);
        let oracle = common::dilation_energy(1, p, s.kinetic, s.power, lambda);
        let formula = I_lambda(1, p, s.i1, lambda).unwrap();
        prop_assert!((oracle - formula).abs() <= 1e-9 * formula.abs());
    }

    #[test]
    fn multiplier_and_energy_exponents_agree(p in 1.05f64..2.9, lambda in 0.1f64..8.0) {
        // μ(λ)/μ(1) and (I(λ)/λ)/I(1) both scale like λ^{a-1}.
        let a = energy_exponent(1, p).unwrap();
        let ratio_mu = mu_lambda(1, p, -1.0, lambda).unwrap() / -1.0;
        let ratio_e = I_lambda(1, p, -1.0, lambda).unwrap() / -lambda;
        prop_assert!((ratio_mu - ratio_e).abs() <= 1e-12 * ratio_e.abs());
        prop_assert!(a > 1.0);
    }
}
