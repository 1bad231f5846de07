//! Statics of a spring-loaded six-bar gripper finger.
//!
//! Given the linkage geometry, spring preload and slot friction, the crate
//! predicts for which fingertip force directions the links open (switching
//! the gripper from parallel grip to turn-over), how much force that takes,
//! and searches the parameter space for designs with a prescribed opening
//! window and threshold.
//!
//! ```
//! use linkstat::{default_parameters, predict_opening};
//!
//! let p = default_parameters();
//! let decision = predict_opening(&p, 0.0);
//! assert!(decision.opens());
//! ```

pub mod cli;
pub mod design;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod modeswitch;
pub mod statics;

pub use design::{optimize_design, sensitivity, DesignResult, DesignSpec, DesignStatus};
pub use error::{Error, Result};
pub use model::{
    default_parameters, joint_layout, surface_angle, validate_parameters, LinkageParameters,
    OpeningRule, ParamName,
};
pub use modeswitch::{
    opening_interval, select_mode, sweep, switching_threshold, SweepCurve, SweepSettings,
};
pub use statics::{
    full_equilibrium, perturbed_joint_forces, predict_opening, solve_balance, spring_force,
    OpeningDecision, Verdict,
};
