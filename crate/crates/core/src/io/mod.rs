//! File formats and text outputs.

pub mod compare;
pub mod expr;
pub mod paramfile;
pub mod report;
