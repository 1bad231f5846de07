mod common;

use common::{perturbed_by, rel_diff};
use linkstat::io::paramfile::{exact_degrees, parse_file, serialize_parameters};
use linkstat::modeswitch::GraspMode;
use linkstat::statics::{solve_with_sign, Sign};
use linkstat::{
    full_equilibrium, joint_layout, perturbed_joint_forces, predict_opening, select_mode,
    solve_balance, validate_parameters, ParamName, Verdict,
};
use proptest::prelude::*;

fn factors() -> impl Strategy<Value = [f64; 15]> {
    proptest::array::uniform15(0.9f64..=1.1)
}

fn zeta() -> impl Strategy<Value = f64> {
    (-30.0f64..=90.0).prop_map(f64::to_radians)
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 256,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn layout_invariants(f in factors()) {
        let p = perturbed_by(&f);
        prop_assume!(validate_parameters(&p).is_empty());
        let lay = joint_layout(&p).unwrap();
        prop_assert!((lay.o.distance(lay.r) - p.l1).abs() < 1e-9);
        prop_assert!((lay.o.distance(lay.s) - p.l1).abs() < 1e-9);
        prop_assert!((lay.o.distance(lay.v) - p.l0).abs() < 1e-9);
        prop_assert!((lay.o.distance(lay.u) - p.l0).abs() < 1e-9);
        prop_assert_eq!(lay.t.x, 0.0);
    }

    #[test]
    fn serialize_parse_identity(f in factors()) {
        let p = perturbed_by(&f);
        prop_assume!(validate_parameters(&p).is_empty());
        let q = parse_file(&serialize_parameters(&p)).unwrap().params;
        for name in ParamName::ALL {
            prop_assert!(rel_diff(p.get(name), q.get(name)) <= 1e-12, "{name}");
        }
    }

    #[test]
    fn closed_form_matches_full_equilibrium(f in factors(), z in zeta()) {
        let p = perturbed_by(&f);
        prop_assume!(validate_parameters(&p).is_empty());
        let Ok(sol) = solve_balance(&p, z) else { return Ok(()) };
        prop_assume!(sol.sign_consistent);
        let eq = full_equilibrium(&p, z, sol.system.sign_beta3).unwrap();
        prop_assert!(rel_diff(sol.xi_b, eq.xi) <= 1e-9, "{} vs {}", sol.xi_b, eq.xi);
        prop_assert!(rel_diff(sol.beta_3b, eq.beta3) <= 1e-9, "{} vs {}", sol.beta_3b, eq.beta3);
    }

    #[test]
    fn stiffness_scales_forces_linearly(f in factors(), z in zeta(), c in 0.25f64..=4.0) {
        let p = perturbed_by(&f);
        prop_assume!(validate_parameters(&p).is_empty());
        let q = p.with(ParamName::SpringK, p.spring_k * c);
        let (Ok(a), Ok(b)) = (solve_balance(&p, z), solve_balance(&q, z)) else {
            return Ok(());
        };
        prop_assert!(rel_diff(a.xi_b * c, b.xi_b) <= 1e-12);
        prop_assert!(rel_diff(a.beta_3b * c, b.beta_3b) <= 1e-12);
        prop_assert_eq!(predict_opening(&p, z).verdict(), predict_opening(&q, z).verdict());
    }

    #[test]
    fn frictionless_branches_coincide(f in factors(), z in zeta()) {
        let p = perturbed_by(&f).with(ParamName::Mu, 0.0);
        prop_assume!(validate_parameters(&p).is_empty());
        match (solve_with_sign(&p, z, Sign::Pos), solve_with_sign(&p, z, Sign::Neg)) {
            (Ok(a), Ok(b)) => {
                prop_assert!(rel_diff(a.xi_b, b.xi_b) <= 1e-12);
                prop_assert!(rel_diff(a.beta_3b, b.beta_3b) <= 1e-12);
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "one branch singular: {a:?} / {b:?}"),
        }
    }

    #[test]
    fn mode_selection_is_monotone(threshold in 0.0f64..50.0, lo in 0.0f64..100.0, d in 0.0f64..100.0) {
        let a = select_mode(lo, threshold).mode;
        let b = select_mode(lo + d, threshold).mode;
        if a == GraspMode::TurnOver {
            prop_assert_eq!(b, GraspMode::TurnOver);
        }
        prop_assert_eq!(select_mode(threshold, threshold).mode, GraspMode::TurnOver);
    }

    #[test]
    fn degree_round_trip(d in -360.0f64..360.0) {
        let rad = d.to_radians();
        prop_assert_eq!(exact_degrees(rad).to_radians().to_bits(), rad.to_bits());
    }

    #[test]
    fn perturbation_vanishes_without_increment(f in factors(), z in zeta()) {
        let p = perturbed_by(&f);
        prop_assume!(validate_parameters(&p).is_empty());
        let Ok(sol) = solve_balance(&p, z) else { return Ok(()) };
        let forces = perturbed_joint_forces(&p.with(ParamName::Epsilon, 0.0), &sol);
        prop_assert_eq!(forces.f_rx, 0.0);
        prop_assert_eq!(forces.f_sx, 0.0);
    }
}

#[test]
fn verdict_labels_cover_default_sweep() {
    let p = linkstat::default_parameters();
    let curve = linkstat::sweep(&p, linkstat::SweepSettings::default());
    let v = curve.verdicts();
    assert!(v.contains(&Verdict::Opens));
    assert!(v.contains(&Verdict::Blocked));
}
