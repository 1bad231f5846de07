//! Static balance of the finger linkage.
//!
//! The two-unknown balance `A (xi, beta3)^T = b` is assembled in closed form,
//! solved with one friction-sign recompute, and probed with a small force
//! increment to decide whether the links open. [`full_equilibrium`] solves the
//! unaggregated joint/link balance set as a generic linear system and serves as
//! an independent check of the closed form.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::model::LinkageParameters;

const DEGENERATE: f64 = 1e-12;

/// Singularity threshold for the 2x2 balance matrix, relative to the squared
/// largest row norm.
pub const DET_TOL: f64 = 1e-12;

/// Assumed sign of `beta3`, which fixes the direction of slot friction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Pos,
    Neg,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Pos => 1.0,
            Sign::Neg => -1.0,
        }
    }

    /// `beta == 0` agrees with either sign.
    pub fn agrees_with(self, beta: f64) -> bool {
        match self {
            Sign::Pos => beta >= 0.0,
            Sign::Neg => beta <= 0.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Pos => 1,
            Sign::Neg => -1,
        }
    }
}

/// Spring force at the anchors; negative when the spring is compressed.
pub fn spring_force(p: &LinkageParameters) -> f64 {
    p.spring_k * (p.spring_span() - p.natural_length)
}

/// Load-transfer ratio of the fingertip force onto link 2/5.
pub fn gamma(p: &LinkageParameters, zeta: f64) -> Result<f64> {
    let den = p.l2 * (p.theta2 + p.theta3).sin();
    if den.abs() < DEGENERATE * p.l2.abs().max(1.0) {
        return Err(Error::Singular("gamma: sin(theta2 + theta3) = 0".into()));
    }
    Ok((p.l4 * zeta.cos() - p.l3 * (p.theta2 + zeta).sin()) / den)
}

/// Friction-coupled ratio `beta6 / beta3` for the assumed sign.
pub fn lambda(p: &LinkageParameters, sign: Sign) -> Result<f64> {
    let s = sign.value();
    let den = -s * p.mu * p.theta2.sin() + p.theta2.cos();
    if den.abs() < DEGENERATE {
        return Err(Error::Singular(format!(
            "lambda({}): cos(theta2) - sign*mu*sin(theta2) = 0",
            sign.as_i8()
        )));
    }
    Ok((s * p.mu * p.theta3.sin() + p.theta3.cos()) / den)
}

/// Aggregated 2x2 balance system at one direction and friction sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceSystem {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
    pub gamma: f64,
    pub lambda: f64,
    pub sign_beta3: Sign,
    pub f_k: f64,
    pub zeta: f64,
}

impl BalanceSystem {
    pub fn det(&self) -> f64 {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }

    fn max_row_norm(&self) -> f64 {
        self.a.iter().map(|r| r[0].hypot(r[1])).fold(0.0, f64::max)
    }

    pub fn is_singular(&self) -> bool {
        let scale = self.max_row_norm();
        !self.det().is_finite() || self.det().abs() < DET_TOL * scale * scale
    }

    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        [
            self.a[0][0] * x[0] + self.a[0][1] * x[1],
            self.a[1][0] * x[0] + self.a[1][1] * x[1],
        ]
    }

    /// `A^-1 b` by Cramer's rule.
    pub fn solve(&self) -> Result<[f64; 2]> {
        if self.is_singular() {
            return Err(Error::Singular(format!(
                "balance matrix det = {:e} at zeta = {:.4} deg",
                self.det(),
                self.zeta.to_degrees()
            )));
        }
        let det = self.det();
        let [[a11, a12], [a21, a22]] = self.a;
        let [b1, b2] = self.b;
        Ok([(b1 * a22 - a12 * b2) / det, (a11 * b2 - a21 * b1) / det])
    }
}

pub fn assemble_system(p: &LinkageParameters, zeta: f64, sign: Sign) -> Result<BalanceSystem> {
    let g = gamma(p, zeta)?;
    let lam = lambda(p, sign)?;
    let f_k = spring_force(p);
    let a = [
        [
            g * (p.theta1 - p.theta3).sin() + (p.theta1 - zeta).sin(),
            (p.theta1 - p.theta3).sin(),
        ],
        [
            g * (p.theta3 + p.theta4).sin(),
            lam * (p.theta4 - p.theta2).sin(),
        ],
    ];
    let ratio = p.l0 / p.l1;
    let b = [
        ratio * (p.theta0 + p.theta1).cos() * f_k,
        -ratio * (p.theta4 + p.theta5).cos() * f_k,
    ];
    Ok(BalanceSystem {
        a,
        b,
        gamma: g,
        lambda: lam,
        sign_beta3: sign,
        f_k,
        zeta,
    })
}

/// Balanced external force and link-3 force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceSolution {
    pub xi_b: f64,
    pub beta_3b: f64,
    pub system: BalanceSystem,
    pub sign_consistent: bool,
}

/// Solves the balance with `sign(beta3) = +1`, recomputing once with `-1`
/// if the first pass gives `beta3 < 0`.
pub fn solve_balance(p: &LinkageParameters, zeta: f64) -> Result<BalanceSolution> {
    let first = solve_with_sign(p, zeta, Sign::Pos)?;
    if first.beta_3b >= 0.0 {
        return Ok(first);
    }
    solve_with_sign(p, zeta, Sign::Neg)
}

/// Single pass of the balance solve at a fixed friction sign.
pub fn solve_with_sign(p: &LinkageParameters, zeta: f64, sign: Sign) -> Result<BalanceSolution> {
    let system = assemble_system(p, zeta, sign)?;
    let [xi_b, beta_3b] = system.solve()?;
    Ok(BalanceSolution {
        xi_b,
        beta_3b,
        system,
        sign_consistent: sign.agrees_with(beta_3b),
    })
}

/// x components of the driving forces at R and S after a force increment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDrivingForces {
    pub f_rx: f64,
    pub f_sx: f64,
}

/// Driving forces after raising the external force from `xi_b` to `xi_b + epsilon`.
///
/// At balance `A (xi_b, beta_3b) = b`, so only the increment column survives:
/// `f_Rx = -eps A11 / cos th1`, `f_Sx = -eps A21 / cos th4`.
pub fn perturbed_joint_forces(p: &LinkageParameters, sol: &BalanceSolution) -> JointDrivingForces {
    let a = &sol.system.a;
    JointDrivingForces {
        f_rx: -p.epsilon * a[0][0] / p.theta1.cos(),
        f_sx: -p.epsilon * a[1][0] / p.theta4.cos(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockReason {
    /// No nonnegative external force balances the linkage.
    NegativeXi,
    /// The increment pushes the joints into their contacts.
    ContactMaintained,
}

impl BlockReason {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockReason::NegativeXi => "negative_xi",
            BlockReason::ContactMaintained => "contact_maintained",
        }
    }
}

/// Everything the verdict was derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceOutcome {
    pub xi_b: f64,
    pub beta_3b: f64,
    pub forces: JointDrivingForces,
    pub sign_beta3: Sign,
    pub sign_consistent: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OpeningDecision {
    Opens(BalanceOutcome),
    Blocked(BlockReason, BalanceOutcome),
    Singular(String),
}

/// Coarse classification used by sweeps and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Opens,
    Blocked,
    Singular,
    /// Both friction-sign passes contradict their assumption.
    Indeterminate,
}

impl OpeningDecision {
    pub fn verdict(&self) -> Verdict {
        match self {
            OpeningDecision::Singular(_) => Verdict::Singular,
            OpeningDecision::Opens(o) | OpeningDecision::Blocked(_, o) if !o.sign_consistent => {
                Verdict::Indeterminate
            }
            OpeningDecision::Opens(_) => Verdict::Opens,
            OpeningDecision::Blocked(..) => Verdict::Blocked,
        }
    }

    pub fn opens(&self) -> bool {
        self.verdict() == Verdict::Opens
    }

    pub fn outcome(&self) -> Option<&BalanceOutcome> {
        match self {
            OpeningDecision::Opens(o) | OpeningDecision::Blocked(_, o) => Some(o),
            OpeningDecision::Singular(_) => None,
        }
    }

    /// Force needed to open; `None` unless the verdict is `Opens`.
    pub fn required_force(&self) -> Option<f64> {
        match self {
            OpeningDecision::Opens(o) if o.sign_consistent => Some(o.xi_b),
            _ => None,
        }
    }

    /// Value drawn on the envelope: the required force, or 0 when the links stay closed.
    pub fn plotted_force(&self) -> f64 {
        self.required_force().unwrap_or(0.0)
    }
}

pub fn predict_opening(p: &LinkageParameters, zeta: f64) -> OpeningDecision {
    let sol = match solve_balance(p, zeta) {
        Ok(sol) => sol,
        Err(e) => return OpeningDecision::Singular(e.to_string()),
    };
    let forces = perturbed_joint_forces(p, &sol);
    let outcome = BalanceOutcome {
        xi_b: sol.xi_b,
        beta_3b: sol.beta_3b,
        forces,
        sign_beta3: sol.system.sign_beta3,
        sign_consistent: sol.sign_consistent,
    };
    if sol.xi_b < 0.0 {
        OpeningDecision::Blocked(BlockReason::NegativeXi, outcome)
    } else if !p.opening_rule.opens(forces.f_rx, forces.f_sx) {
        OpeningDecision::Blocked(BlockReason::ContactMaintained, outcome)
    } else {
        OpeningDecision::Opens(outcome)
    }
}

pub type Vec2 = [f64; 2];

/// Every internal force of the unaggregated balance set, newtons.
///
/// `f_ij` is the force on `j` exerted by `i`; the opposite members
/// (`f_S5 = -f_25`, `f_T3 = -f_R3`, ...) follow by negation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullEquilibrium {
    pub xi: f64,
    pub beta3: f64,
    pub beta6: f64,
    pub f_e: Vec2,
    pub f_25: Vec2,
    pub f_r2: Vec2,
    pub f_r3: Vec2,
    pub f_s6: Vec2,
    pub f_r1: Vec2,
    pub f_s4: Vec2,
    pub f_gt: Vec2,
    /// Reaction of the base on link 1 at O.
    pub f_g1: Vec2,
    /// Reaction of the base on link 4 at O.
    pub f_g4: Vec2,
    pub sign_beta3: Sign,
    /// The slot-friction branch agrees with the sign of the solved `f_GTx`.
    pub branch_consistent: bool,
    /// Largest absolute equation residual.
    pub residual: f64,
}

impl FullEquilibrium {
    pub fn f_s5(&self) -> Vec2 {
        neg(self.f_25)
    }

    pub fn f_52(&self) -> Vec2 {
        neg(self.f_25)
    }

    pub fn f_t3(&self) -> Vec2 {
        neg(self.f_r3)
    }

    pub fn f_t6(&self) -> Vec2 {
        neg(self.f_s6)
    }
}

fn neg(v: Vec2) -> Vec2 {
    [-v[0], -v[1]]
}

// unknown indices of the stacked system
const XI: usize = 0;
const B3: usize = 1;
const B6: usize = 2;
const F25: usize = 3;
const FR2: usize = 5;
const FR3: usize = 7;
const FS6: usize = 9;
const FR1: usize = 11;
const FS4: usize = 13;
const FGT: usize = 15;
const N_UNKNOWNS: usize = 17;

/// Solves the joint and link balance equations directly for one slot-friction
/// branch, with zero driving forces at R and S.
///
/// The branch for `sign` sets `f_GTy = -sign * mu * f_GTx`, i.e. it assumes
/// `|f_GTx| = -sign * f_GTx`.
pub fn full_equilibrium(p: &LinkageParameters, zeta: f64, sign: Sign) -> Result<FullEquilibrium> {
    let (s2, c2) = p.theta2.sin_cos();
    let (s3, c3) = p.theta3.sin_cos();
    let (s1, c1) = p.theta1.sin_cos();
    let (s4, c4) = p.theta4.sin_cos();
    let (sz, cz) = zeta.sin_cos();
    let den = p.l2 * (p.theta2 + p.theta3).sin();
    if den.abs() < DEGENERATE * p.l2.abs().max(1.0) {
        return Err(Error::Singular("link 2 moment arm vanishes".into()));
    }
    let g = (p.l4 * cz - p.l3 * (p.theta2 + zeta).sin()) / den;
    let f_k = p.spring_k * (p.spring_span() - p.natural_length);

    let mut m = DenseMatrix::zeros(N_UNKNOWNS);
    let mut rhs = vec![0.0; N_UNKNOWNS];
    let mut row = 0;
    let mut eq = |terms: &[(usize, f64)], value: f64| {
        for &(col, coef) in terms {
            m.set(row, col, m.get(row, col) + coef);
        }
        rhs[row] = value;
        row += 1;
    };

    // f_25 = xi gamma (sin th3, cos th3)
    eq(&[(F25, 1.0), (XI, -g * s3)], 0.0);
    eq(&[(F25 + 1, 1.0), (XI, -g * c3)], 0.0);
    // f_R2 = xi (gamma sin th3 + sin z, gamma cos th3 + cos z)
    eq(&[(FR2, 1.0), (XI, -(g * s3 + sz))], 0.0);
    eq(&[(FR2 + 1, 1.0), (XI, -(g * c3 + cz))], 0.0);
    // f_R3 = beta3 (sin th3, cos th3)
    eq(&[(FR3, 1.0), (B3, -s3)], 0.0);
    eq(&[(FR3 + 1, 1.0), (B3, -c3)], 0.0);
    // f_S6 = beta6 (sin th2, -cos th2)
    eq(&[(FS6, 1.0), (B6, -s2)], 0.0);
    eq(&[(FS6 + 1, 1.0), (B6, c2)], 0.0);
    // moment of link 1 about O
    eq(
        &[(FR1 + 1, p.l1 * s1), (FR1, -p.l1 * c1)],
        -p.l0 * (p.theta0 + p.theta1).cos() * f_k,
    );
    // moment of link 4 about O
    eq(
        &[(FS4 + 1, -p.l1 * s4), (FS4, -p.l1 * c4)],
        p.l0 * (p.theta4 + p.theta5).cos() * f_k,
    );
    // joint R: f_1R + f_2R + f_3R = 0, f_iR = -f_Ri
    for k in 0..2 {
        eq(&[(FR1 + k, -1.0), (FR2 + k, -1.0), (FR3 + k, -1.0)], 0.0);
    }
    // joint S: f_4S + f_5S + f_6S = 0, f_5S = f_25, f_6S = -f_S6
    for k in 0..2 {
        eq(&[(FS4 + k, -1.0), (F25 + k, 1.0), (FS6 + k, -1.0)], 0.0);
    }
    // joint T: f_3T + f_6T + f_GT = 0, f_3T = f_R3, f_6T = f_S6
    for k in 0..2 {
        eq(&[(FR3 + k, 1.0), (FS6 + k, 1.0), (FGT + k, 1.0)], 0.0);
    }
    // slot friction
    eq(&[(FGT + 1, 1.0), (FGT, sign.value() * p.mu)], 0.0);
    debug_assert_eq!(row, N_UNKNOWNS);

    let x = m.solve(&rhs).map_err(|e| {
        Error::Singular(format!(
            "equilibrium system rank deficient at column {} (zeta = {:.4} deg)",
            e.pivot_col,
            zeta.to_degrees()
        ))
    })?;
    let ax = m.mul_vec(&x);
    let residual = ax
        .iter()
        .zip(&rhs)
        .map(|(l, r)| (l - r).abs())
        .fold(0.0, f64::max);

    let pair = |i: usize| [x[i], x[i + 1]];
    let f_r1 = pair(FR1);
    let f_s4 = pair(FS4);
    let f_gt = pair(FGT);
    Ok(FullEquilibrium {
        xi: x[XI],
        beta3: x[B3],
        beta6: x[B6],
        f_e: [-x[XI] * sz, -x[XI] * cz],
        f_25: pair(F25),
        f_r2: pair(FR2),
        f_r3: pair(FR3),
        f_s6: pair(FS6),
        f_r1,
        f_s4,
        f_gt,
        // spring pulls V (link 1) toward -x and U (link 4) toward +x
        f_g1: [f_k - f_r1[0], -f_r1[1]],
        f_g4: [-f_k - f_s4[0], -f_s4[1]],
        sign_beta3: sign,
        branch_consistent: -sign.value() * f_gt[0] >= 0.0,
        residual,
    })
}

/// Both friction branches of [`full_equilibrium`], reconciled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedEquilibrium {
    pub equilibrium: FullEquilibrium,
    /// Both branches were self-consistent.
    pub ambiguous: bool,
    /// Neither branch was self-consistent; `equilibrium` is the `+1` branch.
    pub inconsistent: bool,
}

/// Solves both slot-friction branches and keeps the self-consistent one,
/// preferring the `+1` branch (the closed form's first assumption) on ties.
pub fn resolve_equilibrium(p: &LinkageParameters, zeta: f64) -> Result<ResolvedEquilibrium> {
    let pos = full_equilibrium(p, zeta, Sign::Pos);
    let neg = full_equilibrium(p, zeta, Sign::Neg);
    match (pos, neg) {
        (Ok(a), Ok(b)) => Ok(match (a.branch_consistent, b.branch_consistent) {
            (true, true) => ResolvedEquilibrium {
                equilibrium: a,
                ambiguous: true,
                inconsistent: false,
            },
            (false, true) => ResolvedEquilibrium {
                equilibrium: b,
                ambiguous: false,
                inconsistent: false,
            },
            (c, false) => ResolvedEquilibrium {
                equilibrium: a,
                ambiguous: false,
                inconsistent: !c,
            },
        }),
        (Ok(a), Err(_)) => Ok(ResolvedEquilibrium {
            equilibrium: a,
            ambiguous: false,
            inconsistent: !a.branch_consistent,
        }),
        (Err(_), Ok(b)) => Ok(ResolvedEquilibrium {
            equilibrium: b,
            ambiguous: false,
            inconsistent: !b.branch_consistent,
        }),
        (Err(e), Err(_)) => Err(e),
    }
}
