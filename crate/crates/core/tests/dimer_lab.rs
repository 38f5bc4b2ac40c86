use fnls::dimer::{build_dimer, interaction_curve, max_separation, theory_rates, Cluster};
use fnls::ledger::BindingLedger;
use fnls::scalar::{solve_scalar, ScalarOptions};
use fnls::solver::{solve_ground_state, GridPolicy, ModelParams, SolverConfig};
use fnls::{Error, Grid};
use proptest::prelude::*;

fn soliton_cluster() -> Cluster {
    let s = solve_scalar(1, 1.3, &ScalarOptions { policy: GridPolicy::fixed(120.0, 768), ..ScalarOptions::default() }).unwrap();
    Cluster::from_scalar(&s).unwrap()
}

#[test]
fn two_solitons_attract_at_the_predicted_rate() {
    let c = soliton_cluster();
    let seps: Vec<f64> = (4..=30).map(f64::from).collect();
    let curve = interaction_curve(&c, &c, &seps).unwrap();
    let (lo, hi) = curve.fit_window.unwrap();
    for pt in &curve.points {
        let (r, v) = (pt.separation, pt.interaction.unwrap());
        if r >= lo && r <= hi {
            assert!(v < 0.0, "R = {r}: {v}");
        }
    }
    let rate = curve.fitted_rate.unwrap();
    let (attract, orth) = theory_rates(1.3, c.decay(), c.decay());
    assert!((attract - 1.3 * c.decay()).abs() < 1e-14);
    assert!((orth - 2.0 * c.decay()).abs() < 1e-14);
    assert!((rate - attract).abs() < 0.05 * attract, "fitted {rate} vs {attract}");
}

#[test]
fn dimer_frame_is_orthonormal_and_symmetric() {
    let c = soliton_cluster();
    let t = build_dimer(&c, &c, 6.0).unwrap();
    assert!(t.frame_defect < 1e-12);
    assert!(t.gram_condition >= 1.0);
    assert!((t.separation - 6.0).abs() <= 0.5 * c.grid().spacing());
    assert_eq!(t.occupations, vec![1.0, 1.0]);
    // Whole-step placement: the same separation in a mirrored setup gives
    // the same energy to round-off.
    let u = build_dimer(&c, &c.rotated(2), 6.0).unwrap();
    assert!((t.energy - u.energy).abs() < 1e-13);
}

#[test]
fn far_apart_clusters_do_not_interact() {
    let c = soliton_cluster();
    let r = max_separation(&c, &c);
    let t = build_dimer(&c, &c, r).unwrap();
    assert!(t.interaction.abs() < 1e-9, "{}", t.interaction);
    assert!(matches!(build_dimer(&c, &c, r + 1.0), Err(Error::InvalidParameter(_))));
}

#[test]
fn mismatched_grids_are_rejected() {
    let a = soliton_cluster();
    let g = Grid::new(1, 60.0, 128).unwrap();
    let u = g.sample(|x| (-x[0] * x[0]).exp()).into_values();
    let norm = g.dot(&u, &u).sqrt();
    let b = Cluster::new(&g, 1.3, vec![u.iter().map(|x| x / norm).collect()], vec![1.0], -1.0).unwrap();
    assert!(matches!(build_dimer(&a, &b, 5.0), Err(Error::GridMismatch(_))));
}

#[test]
fn quarter_turned_cluster_forms_a_valid_dimer() {
    let cfg = SolverConfig { grid: GridPolicy::fixed(40.0, 48), ..SolverConfig::default() };
    let gs = solve_ground_state(&ModelParams::new(2, 1.4, 2.0).unwrap(), &cfg).unwrap();
    let c = Cluster::from_ground_state(&gs).unwrap();
    let r = c.rotated(1);
    let t = build_dimer(&c, &r, 12.0).unwrap();
    let t0 = build_dimer(&c, &c, 12.0).unwrap();
    assert!(t.frame_defect < 1e-11);
    // Both placements are legitimate trial states of mass 4.
    assert!((t.occupations.iter().sum::<f64>() - 4.0).abs() < 1e-14);
    assert!(t.interaction.is_finite() && t0.interaction.is_finite());
    assert!((c.energy() - gs.energy).abs() < 1e-10 * gs.energy.abs());
}

#[test]
fn ledger_round_trips_through_json() {
    let mut l = BindingLedger::new(1, 1.3, 1.0).unwrap();
    l.insert_at(1, -0.35, "a", 1).unwrap();
    l.insert_at(2, -0.72, "b", 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ledger.json");
    l.save(&path).unwrap();
    assert_eq!(BindingLedger::load(&path).unwrap(), l);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strictly_superlinear_energies_bind_everywhere(a in 1.05f64..1.9, n in 2u32..12) {
        let mut l = BindingLedger::new(1, 1.3, 1e-3).unwrap();
        for k in 1..=n {
            l.insert_at(k, -0.01 * (k as f64).powf(a), "model", 0).unwrap();
        }
        prop_assert_eq!(l.binding_set(n).unwrap(), (1..=n).collect::<Vec<_>>());
        let d = l.binding_set_decompose(n).unwrap();
        prop_assert_eq!(d.parts.len(), 1);
    }

    #[test]
    fn linear_energies_split_into_singletons(n in 2u32..12) {
        let mut l = BindingLedger::new(1, 1.3, 1e-3).unwrap();
        for k in 1..=n {
            l.insert_at(k, -0.3 * k as f64, "model", 0).unwrap();
        }
        prop_assert_eq!(l.binding_set(n).unwrap(), vec![1]);
        let d = l.binding_set_decompose(n).unwrap();
        prop_assert_eq!(d.parts.get(&1).copied(), Some(n));
        prop_assert!(d.repeated_part);
        let total: u32 = d.parts.iter().map(|(m, k)| m * k).sum();
        prop_assert_eq!(total, n);
    }
}
