#![allow(dead_code)]

use linkstat::{default_parameters, validate_parameters, LinkageParameters, ParamName};
use rand::Rng;

/// Parameters that receive the ±10% perturbation; the opening rule and
/// posture angles stay at their defaults.
pub const PERTURBED: [ParamName; 15] = [
    ParamName::L0,
    ParamName::L1,
    ParamName::L2,
    ParamName::L3,
    ParamName::L4,
    ParamName::Theta0,
    ParamName::Theta1,
    ParamName::Theta2,
    ParamName::Theta3,
    ParamName::Theta4,
    ParamName::Theta5,
    ParamName::SpringK,
    ParamName::NaturalLength,
    ParamName::Mu,
    ParamName::Epsilon,
];

/// Reference parameters with every perturbed entry scaled by a factor drawn
/// uniformly from [0.9, 1.1]. Retries until the set validates.
pub fn perturbed<R: Rng>(rng: &mut R) -> LinkageParameters {
    loop {
        let mut p = default_parameters();
        for name in &PERTURBED {
            let f: f64 = rng.gen_range(0.9..=1.1);
            p.set(*name, p.get(*name) * f);
        }
        if validate_parameters(&p).is_empty() {
            return p;
        }
    }
}

/// Same as [`perturbed`] but driven by explicit factors (for proptest).
pub fn perturbed_by(factors: &[f64; 15]) -> LinkageParameters {
    let mut p = default_parameters();
    for (name, f) in PERTURBED.iter().zip(factors) {
        p.set(*name, p.get(*name) * f);
    }
    p
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}
