//! Parameter sensitivities and a pattern-search design loop.
//!
//! A design asks for a window of directions that must all open the links and
//! for the switching threshold at the press direction to fall in a band.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{validate_parameters, LinkageParameters, ParamKind, ParamName};
use crate::modeswitch::{
    opening_interval, sweep, switching_threshold, OpeningInterval, SweepCurve, SweepSettings,
    TABLE_PRESS_ANGLE,
};
use crate::statics::predict_opening;

/// Central finite difference of the required opening force with respect to
/// one parameter, in newtons per internal unit (radians for angles).
pub fn sensitivity(
    p: &LinkageParameters,
    name: ParamName,
    zeta: f64,
    rel_step: f64,
) -> Result<f64> {
    let value = p.get(name);
    let h = rel_step * value.abs().max(1.0);
    let eval = |v: f64| -> Result<f64> {
        let q = p.with(name, v).validated()?;
        let decision = predict_opening(&q, zeta);
        decision.required_force().ok_or_else(|| Error::NotOpening {
            zeta_deg: zeta.to_degrees(),
            reason: format!("{} at {name} = {v}", crate::modeswitch::describe(&decision)),
        })
    };
    eval(value)?;
    let up = eval(value + h)?;
    let down = eval(value - h)?;
    Ok((up - down) / (2.0 * h))
}

/// Box bound on one free parameter, internal units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub name: ParamName,
    pub lo: f64,
    pub hi: f64,
}

/// Weights that turn constraint violations into one penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyWeights {
    /// Per degree of missing interval coverage.
    pub interval: f64,
    /// Per newton outside the threshold band.
    pub band: f64,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        Self {
            interval: 1.0,
            band: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    /// Directions (radians) that must all lie in one opening interval.
    pub target_interval: (f64, f64),
    /// Allowed switching threshold, newtons.
    pub threshold_band: (f64, f64),
    pub press_angle: f64,
    pub free: Vec<Bound>,
    pub sweep: SweepSettings,
    pub weights: PenaltyWeights,
}

impl DesignSpec {
    pub fn new(target_interval: (f64, f64), threshold_band: (f64, f64), free: Vec<Bound>) -> Self {
        Self {
            target_interval,
            threshold_band,
            press_angle: TABLE_PRESS_ANGLE,
            free,
            sweep: SweepSettings::default(),
            weights: PenaltyWeights::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        let (t0, t1) = self.target_interval;
        if !(t0.is_finite() && t1.is_finite()) || t0 > t1 {
            return bad(format!(
                "target interval [{}, {}] deg is not ordered",
                t0.to_degrees(),
                t1.to_degrees()
            ));
        }
        let (f0, f1) = self.threshold_band;
        if !(f0.is_finite() && f1.is_finite()) || f0 > f1 {
            return bad(format!("threshold band [{f0}, {f1}] N is not ordered"));
        }
        if !self.press_angle.is_finite() {
            return bad("press angle must be finite".into());
        }
        for (i, b) in self.free.iter().enumerate() {
            if !(b.lo.is_finite() && b.hi.is_finite()) || b.lo > b.hi {
                return bad(format!("bounds for {} are not ordered", b.name));
            }
            if self.free[..i].iter().any(|o| o.name == b.name) {
                return bad(format!("{} listed twice", b.name));
            }
        }
        if !(self.weights.interval > 0.0 && self.weights.band > 0.0) {
            return bad("penalty weights must be positive".into());
        }
        Ok(())
    }
}

/// One violated design constraint with its size.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintViolation {
    pub constraint: &'static str,
    pub amount: f64,
    pub unit: &'static str,
}

/// How far one parameter set is from meeting a design spec.
#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub penalty: f64,
    /// Degrees of the target window not covered by an opening interval.
    pub interval_shortfall_deg: f64,
    /// Degrees between the press direction and the nearest opening direction.
    pub press_gap_deg: f64,
    /// Newtons outside the threshold band.
    pub band_violation: f64,
    pub intervals: Vec<OpeningInterval>,
    pub threshold: Option<f64>,
}

impl Assessment {
    pub fn violations(&self) -> Vec<ConstraintViolation> {
        let mut v = Vec::new();
        if self.interval_shortfall_deg > 0.0 {
            v.push(ConstraintViolation {
                constraint: "target_interval",
                amount: self.interval_shortfall_deg,
                unit: "deg",
            });
        }
        if self.press_gap_deg > 0.0 {
            v.push(ConstraintViolation {
                constraint: "press_angle_opens",
                amount: self.press_gap_deg,
                unit: "deg",
            });
        }
        if self.band_violation > 0.0 {
            v.push(ConstraintViolation {
                constraint: "threshold_band",
                amount: self.band_violation,
                unit: "N",
            });
        }
        v
    }

    fn infeasible_params() -> Self {
        Self {
            penalty: f64::INFINITY,
            interval_shortfall_deg: f64::INFINITY,
            press_gap_deg: 0.0,
            band_violation: 0.0,
            intervals: Vec::new(),
            threshold: None,
        }
    }
}

/// Sweeps `p` and measures every design constraint.
pub fn assess(spec: &DesignSpec, p: &LinkageParameters) -> Assessment {
    if !validate_parameters(p).is_empty() {
        return Assessment::infeasible_params();
    }
    let curve = sweep(p, spec.sweep);
    let intervals = curve.intervals;
    let (t0, t1) = spec.target_interval;
    let range_deg = (spec.sweep.zeta_hi - spec.sweep.zeta_lo).to_degrees();

    let interval_shortfall_deg = intervals
        .iter()
        .map(|iv| ((iv.lo - t0).max(0.0) + (t1 - iv.hi).max(0.0)).to_degrees())
        .fold(None, |acc: Option<f64>, s| {
            Some(acc.map_or(s, |a| a.min(s)))
        })
        .unwrap_or((t1 - t0).to_degrees() + range_deg);

    let press = spec.press_angle;
    let threshold = switching_threshold(p, press).ok();
    let press_gap_deg = if threshold.is_some() {
        0.0
    } else {
        let gap = intervals
            .iter()
            .map(|iv| (iv.lo - press).max(press - iv.hi).max(0.0).to_degrees())
            .fold(range_deg, f64::min);
        gap.max(crate::modeswitch::BISECTION_WIDTH.to_degrees())
    };

    let (f0, f1) = spec.threshold_band;
    let band_violation = threshold.map_or(0.0, |f| (f0 - f).max(0.0) + (f - f1).max(0.0));

    let penalty = spec.weights.interval * (interval_shortfall_deg + press_gap_deg)
        + spec.weights.band * band_violation;
    Assessment {
        penalty,
        interval_shortfall_deg,
        press_gap_deg,
        band_violation,
        intervals,
        threshold,
    }
}

/// Outcome of an independent check of a design.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub intervals: Vec<OpeningInterval>,
    pub threshold: Option<f64>,
    pub interval_ok: bool,
    pub threshold_ok: bool,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.interval_ok && self.threshold_ok
    }
}

/// Checks a design from scratch: fresh sweep, interval extraction, threshold.
pub fn verify_design(spec: &DesignSpec, p: &LinkageParameters) -> Verification {
    let curve: SweepCurve = sweep(p, spec.sweep);
    let intervals = opening_interval(&curve, p);
    let (t0, t1) = spec.target_interval;
    let threshold = switching_threshold(p, spec.press_angle).ok();
    let (f0, f1) = spec.threshold_band;
    Verification {
        interval_ok: validate_parameters(p).is_empty()
            && intervals.iter().any(|iv| iv.contains(t0, t1)),
        threshold_ok: threshold.is_some_and(|f| f0 <= f && f <= f1),
        intervals,
        threshold,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DesignStatus {
    Feasible(LinkageParameters),
    Infeasible {
        best_found: LinkageParameters,
        violations: Vec<ConstraintViolation>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub status: DesignStatus,
    pub evaluations: usize,
    pub best_penalty: f64,
    pub verification: Verification,
}

impl DesignResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self.status, DesignStatus::Feasible(_))
    }

    pub fn params(&self) -> &LinkageParameters {
        match &self.status {
            DesignStatus::Feasible(p) => p,
            DesignStatus::Infeasible { best_found, .. } => best_found,
        }
    }
}

/// Initial pattern step in search units (degrees for angles).
fn initial_step(kind: ParamKind) -> f64 {
    match kind {
        ParamKind::Angle => 1.0,
        ParamKind::Length => 0.5,
        ParamKind::Stiffness => 0.05,
        ParamKind::Friction => 0.05,
        ParamKind::Force => 0.01,
    }
}

fn to_search(kind: ParamKind, v: f64) -> f64 {
    if kind == ParamKind::Angle {
        v.to_degrees()
    } else {
        v
    }
}

fn from_search(kind: ParamKind, v: f64) -> f64 {
    if kind == ParamKind::Angle {
        v.to_radians()
    } else {
        v
    }
}

/// Steps stop shrinking below this fraction of their initial size.
const MIN_STEP_FRACTION: f64 = 1.0 / 64.0;

/// Coordinate pattern search over the free parameters.
///
/// Each round polls `+step` and `-step` along every free coordinate (clamped
/// to the box), evaluates the poll points concurrently and moves to the best
/// strict improvement. A round without improvement halves every step. The
/// search ends at zero penalty, when all steps fall below 1/64 of their
/// initial size, or when `budget` evaluations are used.
pub fn optimize_design(
    spec: &DesignSpec,
    start: &LinkageParameters,
    budget: usize,
) -> Result<DesignResult> {
    spec.validate()?;
    if budget == 0 {
        return Err(Error::InvalidSpec("budget must be at least 1".into()));
    }
    let start = start.validated()?;
    for b in &spec.free {
        let v = start.get(b.name);
        if v < b.lo || v > b.hi {
            return Err(Error::InvalidSpec(format!(
                "start value of {} lies outside its bounds",
                b.name
            )));
        }
    }

    let kinds: Vec<ParamKind> = spec.free.iter().map(|b| b.name.kind()).collect();
    let lo: Vec<f64> = spec
        .free
        .iter()
        .zip(&kinds)
        .map(|(b, k)| to_search(*k, b.lo))
        .collect();
    let hi: Vec<f64> = spec
        .free
        .iter()
        .zip(&kinds)
        .map(|(b, k)| to_search(*k, b.hi))
        .collect();
    let initial: Vec<f64> = kinds.iter().map(|k| initial_step(*k)).collect();
    let mut steps = initial.clone();

    let build = |x: &[f64]| -> LinkageParameters {
        let mut p = start;
        for ((b, k), v) in spec.free.iter().zip(&kinds).zip(x) {
            p.set(b.name, from_search(*k, *v));
        }
        p
    };

    let mut x: Vec<f64> = spec
        .free
        .iter()
        .zip(&kinds)
        .map(|(b, k)| to_search(*k, start.get(b.name)))
        .collect();
    let mut best_params = start;
    let mut best = assess(spec, &start);
    let mut evaluations = 1;

    while best.penalty > 0.0 && evaluations < budget {
        let mut polls: Vec<Vec<f64>> = Vec::new();
        for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                let v = (x[i] + dir * steps[i]).clamp(lo[i], hi[i]);
                if v != x[i] {
                    let mut cand = x.clone();
                    cand[i] = v;
                    polls.push(cand);
                }
            }
        }
        polls.truncate(budget - evaluations);

        if !polls.is_empty() {
            let scored: Vec<(LinkageParameters, Assessment)> = polls
                .par_iter()
                .map(|c| {
                    let p = build(c);
                    let a = assess(spec, &p);
                    (p, a)
                })
                .collect();
            evaluations += scored.len();
            let winner = scored
                .iter()
                .enumerate()
                .min_by(|(i, a), (j, b)| a.1.penalty.total_cmp(&b.1.penalty).then(i.cmp(j)))
                .map(|(i, _)| i);
            if let Some(i) = winner {
                if scored[i].1.penalty < best.penalty {
                    x = polls[i].clone();
                    best_params = scored[i].0;
                    best = scored[i].1.clone();
                    continue;
                }
            }
        }

        for s in steps.iter_mut() {
            *s *= 0.5;
        }
        if steps
            .iter()
            .zip(&initial)
            .all(|(s, i)| *s < i * MIN_STEP_FRACTION)
        {
            break;
        }
    }

    let verification = verify_design(spec, &best_params);
    let status = if best.penalty == 0.0 && verification.passed() {
        DesignStatus::Feasible(best_params)
    } else {
        let mut violations = best.violations();
        if violations.is_empty() {
            violations.push(ConstraintViolation {
                constraint: "verification",
                amount: 1.0,
                unit: "",
            });
        }
        DesignStatus::Infeasible {
            best_found: best_params,
            violations,
        }
    };
    Ok(DesignResult {
        status,
        evaluations,
        best_penalty: best.penalty,
        verification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_parameters;
    use crate::statics::{full_equilibrium, solve_balance, spring_force};

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    #[test]
    fn stiffness_sensitivity_is_force_over_k() {
        let p = default_parameters();
        let xi = predict_opening(&p, 0.0).required_force().unwrap();
        let d = sensitivity(&p, ParamName::SpringK, 0.0, 1e-6).unwrap();
        assert!((d * p.spring_k - xi).abs() <= 1e-6 * xi, "{d}");
    }

    #[test]
    fn epsilon_does_not_move_the_force() {
        let p = default_parameters();
        assert_eq!(sensitivity(&p, ParamName::Epsilon, 0.0, 1e-6).unwrap(), 0.0);
    }

    #[test]
    fn natural_length_sensitivity_against_oracle() {
        let p = default_parameters();
        let zeta = deg(5.0);
        let d = sensitivity(&p, ParamName::NaturalLength, zeta, 1e-6).unwrap();
        // xi_b is linear in f_k and df_k/dl_n = -k
        let xi = predict_opening(&p, zeta).required_force().unwrap();
        let analytic = -p.spring_k * xi / spring_force(&p);
        assert!(
            (d - analytic).abs() <= 1e-6 * analytic.abs(),
            "{d} {analytic}"
        );
        // finite difference of the unaggregated solve at the same points
        let h = 1e-6 * p.natural_length;
        let sign = solve_balance(&p, zeta).unwrap().system.sign_beta3;
        let up = full_equilibrium(
            &p.with(ParamName::NaturalLength, p.natural_length + h),
            zeta,
            sign,
        )
        .unwrap()
        .xi;
        let down = full_equilibrium(
            &p.with(ParamName::NaturalLength, p.natural_length - h),
            zeta,
            sign,
        )
        .unwrap()
        .xi;
        let oracle = (up - down) / (2.0 * h);
        assert!((d - oracle).abs() <= 1e-5 * analytic.abs(), "{d} {oracle}");
    }

    #[test]
    fn sensitivity_needs_opening() {
        let p = default_parameters();
        assert!(matches!(
            sensitivity(&p, ParamName::SpringK, deg(60.0), 1e-6),
            Err(Error::NotOpening { .. })
        ));
    }

    fn bound(name: ParamName, lo: f64, hi: f64) -> Bound {
        Bound { name, lo, hi }
    }

    #[test]
    fn spec_validation() {
        let ok = DesignSpec::new((deg(-10.0), deg(15.0)), (3.0, 8.0), vec![]);
        assert!(ok.validate().is_ok());
        let mut s = ok.clone();
        s.threshold_band = (8.0, 3.0);
        assert!(s.validate().is_err());
        let mut s = ok.clone();
        s.target_interval = (deg(15.0), deg(-10.0));
        assert!(s.validate().is_err());
        let mut s = ok.clone();
        s.free = vec![bound(ParamName::L4, 3.0, 1.0)];
        assert!(s.validate().is_err());
        let mut s = ok;
        s.free = vec![
            bound(ParamName::L4, 1.0, 3.0),
            bound(ParamName::L4, 1.0, 3.0),
        ];
        assert!(s.validate().is_err());
    }

    #[test]
    fn satisfied_start_needs_one_evaluation() {
        let p = default_parameters();
        // press at 0 deg opens for the defaults with 5.17 N
        let mut spec = DesignSpec::new((deg(-10.0), deg(15.0)), (3.0, 8.0), vec![]);
        spec.press_angle = 0.0;
        let r = optimize_design(&spec, &p, 1).unwrap();
        assert!(r.is_feasible());
        assert_eq!(r.evaluations, 1);
        assert_eq!(r.params(), &p);
    }

    #[test]
    fn unreachable_band_is_infeasible() {
        let p = default_parameters();
        let spec = DesignSpec::new(
            (deg(-10.0), deg(15.0)),
            (1000.0, 1001.0),
            vec![bound(ParamName::SpringK, 0.0, 1.0)],
        );
        let r = optimize_design(&spec, &p, 200).unwrap();
        match &r.status {
            DesignStatus::Infeasible { violations, .. } => {
                assert!(violations.iter().any(
                    |v| v.constraint == "threshold_band" || v.constraint == "press_angle_opens"
                ));
            }
            other => panic!("{other:?}"),
        }
        assert!(r.evaluations <= 200);
    }

    #[test]
    fn deterministic_runs() {
        let p = default_parameters();
        let spec = DesignSpec::new(
            (deg(-10.0), deg(15.0)),
            (3.0, 8.0),
            vec![
                bound(ParamName::Theta2, deg(10.0), deg(30.0)),
                bound(ParamName::L4, 0.5, 5.0),
            ],
        );
        let a = optimize_design(&spec, &p, 300).unwrap();
        let b = optimize_design(&spec, &p, 300).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn start_outside_box_rejected() {
        let p = default_parameters();
        let spec = DesignSpec::new(
            (deg(-10.0), deg(15.0)),
            (3.0, 8.0),
            vec![bound(ParamName::L4, 3.0, 5.0)],
        );
        assert!(matches!(
            optimize_design(&spec, &p, 10),
            Err(Error::InvalidSpec(_))
        ));
        assert!(optimize_design(&spec, &p, 0).is_err());
    }
}
