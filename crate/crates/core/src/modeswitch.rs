//! Direction sweeps, opening-interval extraction and grasp-mode selection.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::LinkageParameters;
use crate::statics::{predict_opening, OpeningDecision, Verdict};

/// Direction of the table reaction when the finger is pressed down, radians.
pub const TABLE_PRESS_ANGLE: f64 = -15.0 * std::f64::consts::PI / 180.0;

/// Width to which verdict transitions are bisected, radians (0.01 deg).
pub const BISECTION_WIDTH: f64 = 0.01 * std::f64::consts::PI / 180.0;

/// Fraction of the switching threshold offered as the parallel-grip force budget.
pub const PARALLEL_GRIP_MARGIN: f64 = 0.8;

/// Closed sweep grid, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub zeta_lo: f64,
    pub zeta_hi: f64,
    pub step: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            zeta_lo: (-30f64).to_radians(),
            zeta_hi: 90f64.to_radians(),
            step: 0.5f64.to_radians(),
        }
    }
}

impl SweepSettings {
    pub fn new(zeta_lo: f64, zeta_hi: f64, step: f64) -> Result<Self> {
        if !(zeta_lo.is_finite() && zeta_hi.is_finite()) || zeta_lo >= zeta_hi {
            return Err(Error::OutOfRange {
                what: "sweep range (lo must be < hi)",
                value: zeta_hi - zeta_lo,
            });
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::OutOfRange {
                what: "sweep step",
                value: step,
            });
        }
        Ok(Self {
            zeta_lo,
            zeta_hi,
            step,
        })
    }

    pub fn from_degrees(lo: f64, hi: f64, step: f64) -> Result<Self> {
        Self::new(lo.to_radians(), hi.to_radians(), step.to_radians())
    }

    /// Grid points `lo + i*step` up to `hi`, with `hi` always included.
    pub fn grid(&self) -> Vec<f64> {
        let span = self.zeta_hi - self.zeta_lo;
        let n = (span / self.step + 1e-9).floor() as usize;
        let mut zs: Vec<f64> = (0..=n)
            .map(|i| self.zeta_lo + i as f64 * self.step)
            .filter(|z| *z < self.zeta_hi)
            .collect();
        // drop a point that would sit within rounding of the endpoint
        if let Some(&last) = zs.last() {
            if self.zeta_hi - last < 1e-9 * self.step {
                zs.pop();
            }
        }
        zs.push(self.zeta_hi);
        zs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSample {
    pub zeta: f64,
    pub decision: OpeningDecision,
}

/// Closed interval of opening directions, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpeningInterval {
    pub lo: f64,
    pub hi: f64,
}

impl OpeningInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, lo: f64, hi: f64) -> bool {
        self.lo <= lo && hi <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdQuery {
    pub zeta: f64,
    /// `None` when the direction does not open.
    pub force: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    pub settings: SweepSettings,
    pub samples: Vec<SweepSample>,
    /// Opening intervals, widest first.
    pub intervals: Vec<OpeningInterval>,
    pub thresholds: Vec<ThresholdQuery>,
}

impl SweepCurve {
    /// Indices of samples that are singular or indeterminate.
    pub fn flagged(&self) -> Vec<usize> {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, s)| {
                matches!(
                    s.decision.verdict(),
                    Verdict::Singular | Verdict::Indeterminate
                )
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub fn verdicts(&self) -> Vec<Verdict> {
        self.samples.iter().map(|s| s.decision.verdict()).collect()
    }

    pub fn threshold_at(&self, zeta: f64) -> Option<f64> {
        self.thresholds
            .iter()
            .find(|q| q.zeta == zeta)
            .and_then(|q| q.force)
    }
}

/// Evaluates the opening decision on every grid direction.
///
/// Samples are computed in parallel and returned in grid order. The curve
/// also carries the refined opening intervals and the threshold at the
/// table-press direction.
pub fn sweep(p: &LinkageParameters, settings: SweepSettings) -> SweepCurve {
    let samples: Vec<SweepSample> = settings
        .grid()
        .into_par_iter()
        .map(|zeta| SweepSample {
            zeta,
            decision: predict_opening(p, zeta),
        })
        .collect();
    let mut curve = SweepCurve {
        settings,
        samples,
        intervals: Vec::new(),
        thresholds: Vec::new(),
    };
    curve.intervals = opening_interval(&curve, p);
    curve.thresholds.push(ThresholdQuery {
        zeta: TABLE_PRESS_ANGLE,
        force: switching_threshold(p, TABLE_PRESS_ANGLE).ok(),
    });
    curve
}

/// Narrows a verdict change between `inside` (opens) and `outside` to
/// [`BISECTION_WIDTH`] and returns the last direction known to open.
fn refine_edge(p: &LinkageParameters, mut inside: f64, mut outside: f64) -> f64 {
    for _ in 0..64 {
        if (outside - inside).abs() <= BISECTION_WIDTH {
            break;
        }
        let mid = 0.5 * (inside + outside);
        if predict_opening(p, mid).opens() {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// Maximal runs of opening directions, edges refined by bisection, widest first.
pub fn opening_interval(curve: &SweepCurve, p: &LinkageParameters) -> Vec<OpeningInterval> {
    let opens: Vec<bool> = curve.samples.iter().map(|s| s.decision.opens()).collect();
    let zs: Vec<f64> = curve.samples.iter().map(|s| s.zeta).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < opens.len() {
        if !opens[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < opens.len() && opens[i + 1] {
            i += 1;
        }
        let end = i;
        let lo = if start == 0 {
            zs[0]
        } else {
            refine_edge(p, zs[start], zs[start - 1])
        };
        let hi = if end + 1 == opens.len() {
            zs[end]
        } else {
            refine_edge(p, zs[end], zs[end + 1])
        };
        out.push(OpeningInterval { lo, hi });
        i += 1;
    }
    out.sort_by(|a, b| b.width().total_cmp(&a.width()).then(a.lo.total_cmp(&b.lo)));
    out
}

/// Required opening force at the press direction.
pub fn switching_threshold(p: &LinkageParameters, press_angle: f64) -> Result<f64> {
    let decision = predict_opening(p, press_angle);
    decision.required_force().ok_or_else(|| Error::NotOpening {
        zeta_deg: press_angle.to_degrees(),
        reason: describe(&decision),
    })
}

pub(crate) fn describe(decision: &OpeningDecision) -> String {
    match decision {
        OpeningDecision::Opens(o) if !o.sign_consistent => "friction sign indeterminate".into(),
        OpeningDecision::Opens(_) => "opens".into(),
        OpeningDecision::Blocked(r, o) if !o.sign_consistent => {
            format!("{}, friction sign indeterminate", r.as_str())
        }
        OpeningDecision::Blocked(r, _) => r.as_str().into(),
        OpeningDecision::Singular(detail) => format!("singular: {detail}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraspMode {
    ParallelGrip,
    TurnOver,
}

impl GraspMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GraspMode::ParallelGrip => "parallel-grip",
            GraspMode::TurnOver => "turn-over",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeVerdict {
    pub mode: GraspMode,
    pub applied_force: f64,
    pub threshold: f64,
}

/// Turn-over once the applied force reaches the threshold (inclusive).
pub fn select_mode(applied_force: f64, threshold: f64) -> ModeVerdict {
    let mode = if applied_force >= threshold {
        GraspMode::TurnOver
    } else {
        GraspMode::ParallelGrip
    };
    ModeVerdict {
        mode,
        applied_force,
        threshold,
    }
}

/// Table-press force an operator may apply while staying in parallel grip.
pub fn parallel_grip_budget(threshold: f64) -> f64 {
    PARALLEL_GRIP_MARGIN * threshold
}
