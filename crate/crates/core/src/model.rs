//! Parameter set of the finger linkage, its validation, and a planar joint layout.
//!
//! All angles are stored in radians. Files and the command line speak degrees;
//! conversion happens at those boundaries only.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Which sign pattern of the perturbed driving forces counts as "opening".
///
/// `AsPublished` opens when `f_Rx >= 0 && f_Sx <= 0`. With the reference
/// geometry that pattern never occurs, while the reversed pattern
/// (`f_Rx <= 0 && f_Sx >= 0`) yields the expected single opening window, so
/// `Reversed` is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OpeningRule {
    #[default]
    Reversed,
    AsPublished,
}

impl OpeningRule {
    pub fn as_str(self) -> &'static str {
        match self {
            OpeningRule::Reversed => "reversed",
            OpeningRule::AsPublished => "as_published",
        }
    }

    /// Applies the rule to the x components of the driving forces at R and S.
    pub fn opens(self, f_rx: f64, f_sx: f64) -> bool {
        match self {
            OpeningRule::Reversed => f_rx <= 0.0 && f_sx >= 0.0,
            OpeningRule::AsPublished => f_rx >= 0.0 && f_sx <= 0.0,
        }
    }
}

impl FromStr for OpeningRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "reversed" => Ok(OpeningRule::Reversed),
            "as_published" => Ok(OpeningRule::AsPublished),
            other => Err(format!(
                "unknown opening rule `{other}` (expected `reversed` or `as_published`)"
            )),
        }
    }
}

/// Full numeric description of the finger mechanism.
///
/// Lengths in millimetres, angles in radians, `spring_k` in N/mm,
/// `epsilon` in newtons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkageParameters {
    pub l0: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub theta0: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub theta4: f64,
    pub theta5: f64,
    pub spring_k: f64,
    pub natural_length: f64,
    pub mu: f64,
    pub epsilon: f64,
    pub surface_angle_closed: f64,
    pub surface_angle_open: f64,
    pub opening_rule: OpeningRule,
}

impl Default for LinkageParameters {
    fn default() -> Self {
        default_parameters()
    }
}

/// Reference parameter set with the derived length expressions evaluated.
pub fn default_parameters() -> LinkageParameters {
    let tilt = 15f64.to_radians();
    let l2 = 12.0;
    let l4 = 2.5 * tilt.cos();
    let l3 = 22.0 + l4 * tilt.sin();
    LinkageParameters {
        l0: 10.93,
        l1: 2.0 * l2,
        l2,
        l3,
        l4,
        theta0: 30f64.to_radians(),
        theta1: 9f64.to_radians(),
        theta2: 18.5f64.to_radians(),
        theta3: 15f64.to_radians(),
        theta4: 7.44f64.to_radians(),
        theta5: 33.1f64.to_radians(),
        spring_k: 0.862,
        natural_length: 9.7,
        mu: 0.6,
        epsilon: 0.1,
        surface_angle_closed: FRAC_PI_2,
        surface_angle_open: FRAC_PI_6,
        opening_rule: OpeningRule::Reversed,
    }
}

/// Unit family of a parameter; drives file units and search step sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Length,
    Angle,
    Stiffness,
    Friction,
    Force,
}

/// Names of the scalar fields of [`LinkageParameters`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamName {
    L0,
    L1,
    L2,
    L3,
    L4,
    Theta0,
    Theta1,
    Theta2,
    Theta3,
    Theta4,
    Theta5,
    SpringK,
    NaturalLength,
    Mu,
    Epsilon,
    SurfaceAngleClosed,
    SurfaceAngleOpen,
}

impl ParamName {
    pub const ALL: [ParamName; 17] = [
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
        ParamName::SurfaceAngleClosed,
        ParamName::SurfaceAngleOpen,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::L0 => "l0",
            ParamName::L1 => "l1",
            ParamName::L2 => "l2",
            ParamName::L3 => "l3",
            ParamName::L4 => "l4",
            ParamName::Theta0 => "theta0",
            ParamName::Theta1 => "theta1",
            ParamName::Theta2 => "theta2",
            ParamName::Theta3 => "theta3",
            ParamName::Theta4 => "theta4",
            ParamName::Theta5 => "theta5",
            ParamName::SpringK => "k",
            ParamName::NaturalLength => "l_n",
            ParamName::Mu => "mu",
            ParamName::Epsilon => "epsilon",
            ParamName::SurfaceAngleClosed => "surface_angle_closed",
            ParamName::SurfaceAngleOpen => "surface_angle_open",
        }
    }

    pub fn kind(self) -> ParamKind {
        use ParamName::*;
        match self {
            L0 | L1 | L2 | L3 | L4 | NaturalLength => ParamKind::Length,
            Theta0 | Theta1 | Theta2 | Theta3 | Theta4 | Theta5 | SurfaceAngleClosed
            | SurfaceAngleOpen => ParamKind::Angle,
            SpringK => ParamKind::Stiffness,
            Mu => ParamKind::Friction,
            Epsilon => ParamKind::Force,
        }
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParamName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let alias = match s {
            "k_n_per_mm" | "spring_k" => Some(ParamName::SpringK),
            "natural_length_mm" | "natural_length" | "ln" => Some(ParamName::NaturalLength),
            "epsilon_n" => Some(ParamName::Epsilon),
            _ => None,
        };
        alias
            .or_else(|| ParamName::ALL.iter().copied().find(|n| n.as_str() == s))
            .ok_or_else(|| format!("unknown parameter `{s}`"))
    }
}

impl LinkageParameters {
    /// Value in internal units (radians for angles).
    pub fn get(&self, name: ParamName) -> f64 {
        use ParamName::*;
        match name {
            L0 => self.l0,
            L1 => self.l1,
            L2 => self.l2,
            L3 => self.l3,
            L4 => self.l4,
            Theta0 => self.theta0,
            Theta1 => self.theta1,
            Theta2 => self.theta2,
            Theta3 => self.theta3,
            Theta4 => self.theta4,
            Theta5 => self.theta5,
            SpringK => self.spring_k,
            NaturalLength => self.natural_length,
            Mu => self.mu,
            Epsilon => self.epsilon,
            SurfaceAngleClosed => self.surface_angle_closed,
            SurfaceAngleOpen => self.surface_angle_open,
        }
    }

    pub fn set(&mut self, name: ParamName, value: f64) {
        use ParamName::*;
        let slot = match name {
            L0 => &mut self.l0,
            L1 => &mut self.l1,
            L2 => &mut self.l2,
            L3 => &mut self.l3,
            L4 => &mut self.l4,
            Theta0 => &mut self.theta0,
            Theta1 => &mut self.theta1,
            Theta2 => &mut self.theta2,
            Theta3 => &mut self.theta3,
            Theta4 => &mut self.theta4,
            Theta5 => &mut self.theta5,
            SpringK => &mut self.spring_k,
            NaturalLength => &mut self.natural_length,
            Mu => &mut self.mu,
            Epsilon => &mut self.epsilon,
            SurfaceAngleClosed => &mut self.surface_angle_closed,
            SurfaceAngleOpen => &mut self.surface_angle_open,
        };
        *slot = value;
    }

    pub fn with(mut self, name: ParamName, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn thetas(&self) -> [f64; 6] {
        [
            self.theta0,
            self.theta1,
            self.theta2,
            self.theta3,
            self.theta4,
            self.theta5,
        ]
    }

    /// Horizontal distance between the spring anchors U and V.
    pub fn spring_span(&self) -> f64 {
        self.l0 * ((self.theta0 + self.theta1).sin() + (self.theta4 + self.theta5).sin())
    }

    pub fn validated(self) -> Result<Self> {
        let report = validate_parameters(&self);
        if report.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidParameters(report))
        }
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

/// All invariant violations of a parameter set; empty when valid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn mentions(&self, field: &str) -> bool {
        self.violations.iter().any(|v| v.field == field)
    }

    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            field: field.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", v.field, v.message)?;
        }
        Ok(())
    }
}

// Below this a trig factor used as a divisor is treated as zero.
const DEGENERATE: f64 = 1e-12;

/// Checks every invariant and reports all violations.
pub fn validate_parameters(p: &LinkageParameters) -> ValidationReport {
    let mut report = ValidationReport::default();

    for name in ParamName::ALL {
        let v = p.get(name);
        if !v.is_finite() {
            report.push(name.as_str(), format!("must be finite, got {v}"));
        }
    }

    for name in [
        ParamName::L0,
        ParamName::L1,
        ParamName::L2,
        ParamName::L3,
        ParamName::L4,
    ] {
        let v = p.get(name);
        if v.is_finite() && v <= 0.0 {
            report.push(name.as_str(), format!("length must be > 0, got {v}"));
        }
    }
    if p.natural_length < 0.0 {
        report.push("l_n", "natural length must be >= 0");
    }
    if p.spring_k < 0.0 {
        report.push("k", "spring constant must be >= 0");
    }
    if p.mu < 0.0 {
        report.push("mu", "friction coefficient must be >= 0");
    }
    if p.epsilon <= 0.0 {
        report.push("epsilon", "perturbation force must be > 0");
    }

    let names = [
        ParamName::Theta0,
        ParamName::Theta1,
        ParamName::Theta2,
        ParamName::Theta3,
        ParamName::Theta4,
        ParamName::Theta5,
    ];
    for (name, theta) in names.iter().zip(p.thetas()) {
        if theta.is_finite() && !(theta > -FRAC_PI_2 && theta < FRAC_PI_2) {
            report.push(
                name.as_str(),
                format!(
                    "angle must lie strictly inside (-90, 90) deg, got {}",
                    theta.to_degrees()
                ),
            );
        }
    }
    if p.theta1.cos().abs() < DEGENERATE {
        report.push("theta1", "cos(theta1) must be nonzero");
    }
    if p.theta4.cos().abs() < DEGENERATE {
        report.push("theta4", "cos(theta4) must be nonzero");
    }
    if (p.theta2 + p.theta3).sin().abs() < DEGENERATE {
        report.push("theta2+theta3", "sin(theta2+theta3) must be nonzero");
    }
    for (name, v) in [
        ("surface_angle_closed", p.surface_angle_closed),
        ("surface_angle_open", p.surface_angle_open),
    ] {
        if v.is_finite() && !(0.0..=std::f64::consts::PI).contains(&v) {
            report.push(name, "surface angle must lie in [0, 180] deg");
        }
    }
    report
}

/// Planar point in millimetres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Joint coordinates in the closed configuration.
///
/// Frame: O at the origin, y-axis along the O-T-Q line. R and S are the tips
/// of links 1 and 4 (both length `l1`), V and U the spring anchors at
/// distance `l0` along links 1 and 4. T is where the line of link 3 through R
/// meets the y-axis; Q marks the top of the O-T-Q line at height `l1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLayout {
    pub o: Point,
    pub r: Point,
    pub s: Point,
    pub t: Point,
    pub q: Point,
    pub u: Point,
    pub v: Point,
}

const CLOSURE_TOL: f64 = 1e-6;

pub fn joint_layout(p: &LinkageParameters) -> Result<JointLayout> {
    let o = Point::new(0.0, 0.0);
    let r = Point::new(p.l1 * p.theta1.sin(), p.l1 * p.theta1.cos());
    let s = Point::new(-p.l1 * p.theta4.sin(), p.l1 * p.theta4.cos());
    let v = Point::new(
        p.l0 * (p.theta0 + p.theta1).sin(),
        p.l0 * (p.theta0 + p.theta1).cos(),
    );
    let u = Point::new(
        -p.l0 * (p.theta4 + p.theta5).sin(),
        p.l0 * (p.theta4 + p.theta5).cos(),
    );

    // link 3 runs from R along (sin th3, cos th3)
    let t = if r.x == 0.0 {
        Point::new(0.0, r.y)
    } else {
        let dir_x = p.theta3.sin();
        if dir_x.abs() < DEGENERATE {
            return Err(Error::Layout(
                "link 3 is parallel to the y-axis and never reaches joint T".into(),
            ));
        }
        let along = r.x / dir_x;
        Point::new(0.0, r.y - along * p.theta3.cos())
    };
    let q = Point::new(0.0, p.l1);

    let layout = JointLayout {
        o,
        r,
        s,
        t,
        q,
        u,
        v,
    };
    let residuals = [
        ("|OR| - l1", layout.o.distance(layout.r) - p.l1),
        ("|OS| - l1", layout.o.distance(layout.s) - p.l1),
        ("x(T) - x(O)", layout.t.x - layout.o.x),
        ("U-V span", (layout.v.x - layout.u.x) - p.spring_span()),
    ];
    for (what, res) in residuals {
        if !res.is_finite() || res.abs() > CLOSURE_TOL {
            return Err(Error::Layout(format!("{what} residual {res:e} mm")));
        }
    }
    Ok(layout)
}

/// Grasp-surface angle to the table as the links open, `fraction` in [0, 1].
///
/// Linear between the closed and fully-open postures.
pub fn surface_angle(p: &LinkageParameters, fraction: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::OutOfRange {
            what: "opening fraction",
            value: fraction,
        });
    }
    Ok(p.surface_angle_closed + fraction * (p.surface_angle_open - p.surface_angle_closed))
}
