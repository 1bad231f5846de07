//! Predicted-versus-measured opening forces from press tests.

use std::fmt::Write as _;

use thiserror::Error;

use super::report::fmt_sig;
use crate::model::LinkageParameters;
use crate::modeswitch::describe;
use crate::statics::predict_opening;

pub const MEASUREMENT_HEADER: [&str; 2] = ["zeta_deg", "measured_force_n"];

#[derive(Debug, Error)]
pub enum MeasurementError {
    #[error("measurement file: {0}")]
    Csv(#[from] csv::Error),
    #[error("measurement file: header must be `zeta_deg,measured_force_n`, got `{0}`")]
    Header(String),
    #[error("measurement file line {line}: {message}")]
    Row { line: u64, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub zeta_deg: f64,
    pub measured_force: f64,
}

/// Reads `zeta_deg,measured_force_n` rows; `#` starts a comment line.
pub fn parse_measurements(text: &str) -> Result<Vec<Measurement>, MeasurementError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != MEASUREMENT_HEADER {
        return Err(MeasurementError::Header(
            header.iter().collect::<Vec<_>>().join(","),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize, name: &str| -> Result<f64, MeasurementError> {
            record
                .get(i)
                .ok_or_else(|| MeasurementError::Row {
                    line,
                    message: format!("missing {name}"),
                })?
                .parse::<f64>()
                .map_err(|e| MeasurementError::Row {
                    line,
                    message: format!("{name}: {e}"),
                })
        };
        let zeta_deg = field(0, "zeta_deg")?;
        let measured_force = field(1, "measured_force_n")?;
        if !zeta_deg.is_finite() {
            return Err(MeasurementError::Row {
                line,
                message: "angle must be finite".into(),
            });
        }
        if !(measured_force.is_finite() && measured_force >= 0.0) {
            return Err(MeasurementError::Row {
                line,
                message: "force must be finite and >= 0".into(),
            });
        }
        rows.push(Measurement {
            zeta_deg,
            measured_force,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok {
        predicted: f64,
        abs_deviation: f64,
        /// `None` when the prediction is zero.
        rel_deviation: Option<f64>,
    },
    NotOpening(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub measurement: Measurement,
    pub status: RowStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// Mean absolute deviation over rows at opening directions.
    pub mean_abs_deviation: Option<f64>,
}

pub fn compare_measurements(p: &LinkageParameters, measurements: &[Measurement]) -> Comparison {
    let rows: Vec<ComparisonRow> = measurements
        .iter()
        .map(|m| {
            let decision = predict_opening(p, m.zeta_deg.to_radians());
            let status = match decision.required_force() {
                Some(predicted) => {
                    let abs_deviation = (m.measured_force - predicted).abs();
                    RowStatus::Ok {
                        predicted,
                        abs_deviation,
                        rel_deviation: (predicted != 0.0).then(|| abs_deviation / predicted.abs()),
                    }
                }
                None => RowStatus::NotOpening(describe(&decision)),
            };
            ComparisonRow {
                measurement: *m,
                status,
            }
        })
        .collect();
    let devs: Vec<f64> = rows
        .iter()
        .filter_map(|r| match r.status {
            RowStatus::Ok { abs_deviation, .. } => Some(abs_deviation),
            RowStatus::NotOpening(_) => None,
        })
        .collect();
    let mean_abs_deviation =
        (!devs.is_empty()).then(|| devs.iter().sum::<f64>() / devs.len() as f64);
    Comparison {
        rows,
        mean_abs_deviation,
    }
}

pub const COMPARISON_HEADER: &str =
    "zeta_deg,measured_force_n,predicted_force_n,abs_deviation_n,rel_deviation,status";

pub fn comparison_csv(c: &Comparison) -> String {
    let mut s = String::new();
    s.push_str(COMPARISON_HEADER);
    s.push('\n');
    for r in &c.rows {
        let m = &r.measurement;
        match &r.status {
            RowStatus::Ok {
                predicted,
                abs_deviation,
                rel_deviation,
            } => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},ok",
                    fmt_sig(m.zeta_deg),
                    fmt_sig(m.measured_force),
                    fmt_sig(*predicted),
                    fmt_sig(*abs_deviation),
                    rel_deviation.map(fmt_sig).unwrap_or_default()
                );
            }
            RowStatus::NotOpening(_) => {
                let _ = writeln!(
                    s,
                    "{},{},,,,not_opening",
                    fmt_sig(m.zeta_deg),
                    fmt_sig(m.measured_force)
                );
            }
        }
    }
    s
}
