//! Acceptance suite. Every test prints one `ACCEPTANCE <n> PASS|FAIL` line
//! before asserting, so `cargo test --test acceptance -- --nocapture` gives a
//! readable scorecard.

mod common;

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use common::{perturbed, rel_diff};
use linkstat::design::{verify_design, Bound};
use linkstat::io::paramfile::{parse_file, serialize_parameters, DEFAULT_PARAMETER_FILE};
use linkstat::statics::{gamma, solve_with_sign, Sign};
use linkstat::{
    default_parameters, full_equilibrium, opening_interval, optimize_design,
    perturbed_joint_forces, predict_opening, solve_balance, spring_force, sweep,
    switching_threshold, DesignSpec, LinkageParameters, ParamName, SweepSettings, Verdict,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PRESS_DEG: f64 = -15.0;

fn deg(d: f64) -> f64 {
    d.to_radians()
}

fn report(n: u32, ok: bool, detail: &str) {
    println!(
        "ACCEPTANCE {n} {}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
}

fn default_sweep() -> SweepSettings {
    SweepSettings::from_degrees(-30.0, 90.0, 0.5).unwrap()
}

// 1. Envelope of the reference finger.
#[test]
fn criterion_1_reference_envelope() {
    let p = default_parameters();
    let start = Instant::now();
    let curve = sweep(&p, default_sweep());
    let threshold = switching_threshold(&p, deg(PRESS_DEG));
    let elapsed = start.elapsed().as_secs_f64();

    let intervals = &curve.intervals;
    let single = intervals.len() == 1;
    let (lo, hi) = intervals
        .first()
        .map(|iv| (iv.lo.to_degrees(), iv.hi.to_degrees()))
        .unwrap_or((f64::NAN, f64::NAN));
    let lo_ok = (lo - -15.0).abs() <= 3.0;
    let hi_ok = (hi - 23.0).abs() <= 3.0;
    let thr_ok = threshold.as_ref().is_ok_and(|f| (4.5..=7.0).contains(f));
    let time_ok = elapsed <= 1.0;
    let ok = single && lo_ok && hi_ok && thr_ok && time_ok;
    let thr_text = match &threshold {
        Ok(f) => format!("{f:.4} N"),
        Err(e) => format!("none ({e})"),
    };
    report(
        1,
        ok,
        &format!(
            "{} interval(s), [{lo:.3}, {hi:.3}] deg (want -15 +/- 3, 23 +/- 3); \
             threshold at -15 deg = {thr_text} (want 4.5..7); {elapsed:.3} s",
            intervals.len()
        ),
    );
    assert!(ok);
}

// 2. Closed form against the unreduced equilibrium of every link.
#[test]
fn criterion_2_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let zetas: Vec<f64> = (0..25).map(|i| deg(-30.0 + 5.0 * i as f64)).collect();
    let (mut compared, mut skipped, mut worst) = (0usize, 0usize, 0.0f64);
    let mut failures = Vec::new();
    for set in 0..1000 {
        let p = perturbed(&mut rng);
        for &z in &zetas {
            let sol = match solve_balance(&p, z) {
                Ok(s) if s.sign_consistent => s,
                _ => {
                    skipped += 1;
                    continue;
                }
            };
            let eq = match full_equilibrium(&p, z, sol.system.sign_beta3) {
                Ok(eq) => eq,
                Err(e) => {
                    failures.push(format!("set {set} zeta {:.1}: oracle {e}", z.to_degrees()));
                    continue;
                }
            };
            let d = rel_diff(sol.xi_b, eq.xi).max(rel_diff(sol.beta_3b, eq.beta3));
            worst = worst.max(d);
            if d > 1e-9 {
                failures.push(format!("set {set} zeta {:.1}: rel {d:e}", z.to_degrees()));
            }
            compared += 1;
        }
    }
    let ok = failures.is_empty() && compared > 0;
    report(
        2,
        ok,
        &format!(
            "{compared} samples compared, {skipped} singular or sign-inconsistent skipped, \
             worst relative difference {worst:.2e} (limit 1e-9)"
        ),
    );
    assert!(ok, "{:?}", &failures[..failures.len().min(10)]);
}

// 3. Spring force, increment identity, zero increment.
#[test]
fn criterion_3_analytic_identities() {
    let p = default_parameters();
    // k (l0 (sin 39 + sin 40.54) - l_n) by hand: 0.862 * (13.98274 - 9.7)
    let hand = 0.862 * (10.93 * (deg(39.0).sin() + deg(40.54).sin()) - 9.7);
    let fk = spring_force(&p);
    let fk_ok = (fk - hand).abs() <= 0.01 && (fk - 3.69).abs() <= 0.01;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mut identity_ok = true;
    let mut zero_ok = true;
    let mut worst = 0.0f64;
    let mut instances = 0;
    while instances < 100 {
        let q = perturbed(&mut rng);
        let z = deg(rand::Rng::gen_range(&mut rng, -30.0..=90.0));
        let Ok(sol) = solve_balance(&q, z) else {
            continue;
        };
        instances += 1;
        // A11 and A21 rebuilt from the trigonometric definitions.
        let g = gamma(&q, z).unwrap();
        let a11 = g * (q.theta1 - q.theta3).sin() + (q.theta1 - z).sin();
        let a21 = g * (q.theta3 + q.theta4).sin();
        let want_r = -q.epsilon * a11 / q.theta1.cos();
        let want_s = -q.epsilon * a21 / q.theta4.cos();
        let got = perturbed_joint_forces(&q, &sol);
        let d = (got.f_rx - want_r).abs().max((got.f_sx - want_s).abs());
        worst = worst.max(d);
        let scale = q.epsilon * (a11.abs() + a21.abs() + 1.0);
        if d > 8.0 * f64::EPSILON * scale {
            identity_ok = false;
        }
        let zero = perturbed_joint_forces(&q.with(ParamName::Epsilon, 0.0), &sol);
        if zero.f_rx != 0.0 || zero.f_sx != 0.0 {
            zero_ok = false;
        }
    }
    let ok = fk_ok && identity_ok && zero_ok;
    report(
        3,
        ok,
        &format!(
            "spring force {fk:.6} N (hand {hand:.6}, ~3.69); identity worst |diff| {worst:.1e} N \
             over {instances} instances; epsilon = 0 exact zeros: {zero_ok}"
        ),
    );
    assert!(ok);
}

// 4. Spring stiffness only scales forces.
#[test]
fn criterion_4_stiffness_scaling() {
    let p = default_parameters();
    let settings = default_sweep();
    let base = sweep(&p, settings);
    let base_thr = switching_threshold(&p, deg(PRESS_DEG)).ok();
    let mut problems = Vec::new();
    for c in [0.5, 2.0, 4.0] {
        let q = p.with(ParamName::SpringK, p.spring_k * c);
        let scaled = sweep(&q, settings);
        for (a, b) in base.samples.iter().zip(&scaled.samples) {
            let (va, vb) = (a.decision.verdict(), b.decision.verdict());
            if va != vb {
                problems.push(format!(
                    "c={c}: verdict changed at {:.1} deg",
                    a.zeta.to_degrees()
                ));
            }
            if let (Some(oa), Some(ob)) = (a.decision.outcome(), b.decision.outcome()) {
                if rel_diff(oa.xi_b * c, ob.xi_b) > 1e-12 {
                    problems.push(format!(
                        "c={c}: xi_b not scaled at {:.1} deg",
                        a.zeta.to_degrees()
                    ));
                }
            }
        }
        let iv_a = opening_interval(&base, &p);
        let iv_b = opening_interval(&scaled, &q);
        let tol = 0.01f64.to_radians() + 1e-12;
        if iv_a.len() != iv_b.len()
            || iv_a
                .iter()
                .zip(&iv_b)
                .any(|(x, y)| (x.lo - y.lo).abs() > tol || (x.hi - y.hi).abs() > tol)
        {
            problems.push(format!("c={c}: opening interval moved"));
        }
        let thr = switching_threshold(&q, deg(PRESS_DEG)).ok();
        match (base_thr, thr) {
            (Some(a), Some(b)) if rel_diff(a * c, b) <= 1e-12 => {}
            (None, None) => {}
            other => problems.push(format!("c={c}: threshold {other:?}")),
        }
        // The press direction is blocked for the reference finger, so the
        // threshold scaling is also checked at a direction that opens.
        let a = switching_threshold(&p, 0.0).unwrap();
        let b = switching_threshold(&q, 0.0).unwrap();
        if rel_diff(a * c, b) > 1e-12 {
            problems.push(format!("c={c}: threshold at 0 deg not scaled"));
        }
    }
    let press_note = if base_thr.is_some() {
        "threshold scales"
    } else {
        "threshold at -15 deg does not exist for any c (press direction blocked); threshold at 0 deg scales"
    };
    let ok = problems.is_empty();
    report(
        4,
        ok,
        &format!(
            "c in {{0.5, 2, 4}}: {} problem(s); {press_note}",
            problems.len()
        ),
    );
    assert!(ok, "{problems:?}");
}

// 5. Without friction the sign branches coincide.
#[test]
fn criterion_5_frictionless_collapse() {
    let p = default_parameters().with(ParamName::Mu, 0.0);
    let mut worst = 0.0f64;
    let mut mismatched = Vec::new();
    for z in default_sweep().grid() {
        match (
            solve_with_sign(&p, z, Sign::Pos),
            solve_with_sign(&p, z, Sign::Neg),
        ) {
            (Ok(a), Ok(b)) => {
                let d = rel_diff(a.xi_b, b.xi_b).max(rel_diff(a.beta_3b, b.beta_3b));
                worst = worst.max(d);
                if d > 1e-12 {
                    mismatched.push(z.to_degrees());
                }
            }
            (Err(_), Err(_)) => {}
            _ => mismatched.push(z.to_degrees()),
        }
    }
    let ok = mismatched.is_empty();
    report(
        5,
        ok,
        &format!("mu = 0: worst branch difference {worst:.1e} over 241 directions (limit 1e-12)"),
    );
    assert!(ok, "{mismatched:?}");
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_linkstat"))
}

fn path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

// 6. File and command-line contract.
#[test]
fn criterion_6_cli_contract() {
    let a = parse_file(DEFAULT_PARAMETER_FILE).unwrap().params;
    let b = parse_file(&serialize_parameters(&a)).unwrap().params;
    let bits = |p: &LinkageParameters| -> Vec<u64> {
        ParamName::ALL.iter().map(|n| p.get(*n).to_bits()).collect()
    };
    let round_trip = bits(&a) == bits(&b) && a.opening_rule == b.opening_rule;

    let dir = tempfile::tempdir().unwrap();
    let defaults = path("data/default.params");
    let mut csvs = Vec::new();
    for name in ["first.csv", "second.csv"] {
        let out = dir.path().join(name);
        let o = bin()
            .args([
                "sweep",
                defaults.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        csvs.push(std::fs::read(out).unwrap());
    }
    let deterministic = csvs[0] == csvs[1] && !csvs[0].is_empty();

    let code = |args: &[&str]| bin().args(args).output().unwrap().status.code();
    let fx = |name: &str| {
        path(&format!("tests/fixtures/{name}"))
            .to_str()
            .unwrap()
            .to_string()
    };
    let cases = [
        (0, code(&["validate", defaults.to_str().unwrap()])),
        (2, code(&["validate", &fx("invalid.params")])),
        (
            3,
            code(&["analyze", &fx("singular.params"), "--zeta", "15"]),
        ),
        (4, code(&["optimize", &fx("infeasible.params")])),
        (5, code(&["validate", &fx("missing.params")])),
    ];
    let codes_ok = cases.iter().all(|(want, got)| Some(*want) == *got);
    let ok = round_trip && deterministic && codes_ok;
    report(
        6,
        ok,
        &format!(
            "bit-exact round trip: {round_trip}; sweep CSV byte-identical: {deterministic}; \
             exit codes (want, got): {:?}",
            cases
                .iter()
                .map(|(w, g)| (*w, g.unwrap_or(-1)))
                .collect::<Vec<_>>()
        ),
    );
    assert!(ok);
}

/// Opening at every 0.1 deg of the target and threshold inside the band,
/// checked with direct evaluations rather than the optimizer's own sweep.
fn independently_feasible(spec: &DesignSpec, p: &LinkageParameters) -> bool {
    let (t0, t1) = spec.target_interval;
    let n = ((t1 - t0).to_degrees() / 0.1).round() as usize;
    let opens = (0..=n).all(|i| {
        let z = t0 + (t1 - t0) * i as f64 / n as f64;
        predict_opening(p, z).verdict() == Verdict::Opens
    });
    let (f0, f1) = spec.threshold_band;
    let thr = switching_threshold(p, spec.press_angle);
    opens && thr.is_ok_and(|f| f0 <= f && f <= f1)
}

// 7. Optimizer soundness.
#[test]
fn criterion_7_optimizer_soundness() {
    let p = default_parameters();
    let bound = |name: ParamName, lo: f64, hi: f64| Bound { name, lo, hi };

    let free = vec![
        bound(ParamName::Theta2, deg(10.0), deg(30.0)),
        bound(ParamName::L4, 0.5, 5.0),
    ];
    let spec = DesignSpec::new((deg(-10.0), deg(15.0)), (3.0, 8.0), free);
    let precheck = verify_design(&spec, &p).passed() && independently_feasible(&spec, &p);

    let budget = if precheck { 1 } else { 2000 };
    let result = optimize_design(&spec, &p, budget).unwrap();
    let feasible = result.is_feasible();
    let reverified = feasible
        && verify_design(&spec, result.params()).passed()
        && independently_feasible(&spec, result.params());

    let unreachable = DesignSpec::new(
        (deg(-10.0), deg(15.0)),
        (1000.0, 1.0e9),
        vec![bound(ParamName::SpringK, 0.1, 1.0)],
    );
    let hopeless = optimize_design(&unreachable, &p, 2000).unwrap();
    let infeasible_ok = !hopeless.is_feasible();

    // A wider search must also only ever report verified designs.
    let wide = DesignSpec::new(
        (deg(-10.0), deg(15.0)),
        (3.0, 8.0),
        vec![
            bound(ParamName::Theta2, deg(10.0), deg(30.0)),
            bound(ParamName::Theta3, deg(5.0), deg(25.0)),
            bound(ParamName::L4, 0.5, 5.0),
            bound(ParamName::SpringK, 0.4, 1.5),
        ],
    );
    let wide_result = optimize_design(&wide, &p, 2000).unwrap();
    let wide_ok = !wide_result.is_feasible() || independently_feasible(&wide, wide_result.params());

    let ok = feasible && reverified && infeasible_ok && wide_ok;
    report(
        7,
        ok,
        &format!(
            "direct-sweep precheck of defaults feasible: {precheck}; from defaults \
             (budget {budget}, free theta2, l4): {} after {} evaluations, re-verified: {reverified}; \
             unreachable spec infeasible: {infeasible_ok}; wide search sound: {wide_ok}",
            if feasible { "Feasible" } else { "Infeasible" },
            result.evaluations
        ),
    );
    assert!(ok);
}
