//! Sectioned `key = value` parameter files.
//!
//! ```text
//! [lengths_mm]
//! l0 = 10.93
//! l1 = 2*l2
//! l2 = 12
//! l3 = 22 + l4*sin(15)
//! l4 = 2.5*cos(15)
//! ```
//!
//! Values are expressions (see [`super::expr`]); identifiers refer to other
//! keys of the same section in any order. Angles are written in degrees.
//! Unknown sections and keys are rejected.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use super::expr;
use crate::design::{Bound, DesignSpec, PenaltyWeights};
use crate::model::{
    validate_parameters, LinkageParameters, OpeningRule, ParamKind, ParamName, ValidationReport,
};
use crate::modeswitch::{SweepSettings, TABLE_PRESS_ANGLE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { section: String, line: usize },
    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey {
        section: String,
        key: String,
        line: usize,
    },
    #[error("line {line}: duplicate {what}")]
    Duplicate { what: String, line: usize },
    #[error("missing section [{0}]")]
    MissingSection(String),
    #[error("missing key `{key}` in [{section}]")]
    MissingKey { section: String, key: String },
    #[error("line {line}: [{section}] {key}: {message}")]
    Value {
        section: String,
        key: String,
        line: usize,
        message: String,
    },
    #[error("parameters fail validation: {0}")]
    Invalid(ValidationReport),
    #[error("invalid [design] section: {0}")]
    Design(String),
}

impl ParseError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { line, .. }
            | ParseError::UnknownSection { line, .. }
            | ParseError::UnknownKey { line, .. }
            | ParseError::Duplicate { line, .. }
            | ParseError::Value { line, .. } => Some(*line),
            _ => None,
        }
    }
}

#[derive(Debug)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug)]
struct Section {
    line: usize,
    entries: HashMap<String, Entry>,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("lengths_mm", &["l0", "l1", "l2", "l3", "l4"]),
    (
        "angles_deg",
        &["theta0", "theta1", "theta2", "theta3", "theta4", "theta5"],
    ),
    ("spring", &["k_n_per_mm", "natural_length_mm"]),
    ("contact", &["mu"]),
    ("solver", &["epsilon_n", "opening_rule"]),
    ("posture", &["closed_deg", "open_deg"]),
    ("sweep", &["from_deg", "to_deg", "step_deg", "press_deg"]),
    (
        "design",
        &[
            "interval_deg",
            "threshold_n",
            "press_deg",
            "free",
            "budget",
            "interval_weight",
            "band_weight",
        ],
    ),
    ("bounds", &[]),
];

fn split_sections(text: &str) -> Result<HashMap<String, Section>, ParseError> {
    let mut sections: HashMap<String, Section> = HashMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ParseError::Syntax {
                    line,
                    message: format!("unterminated section header `{content}`"),
                })?
                .trim()
                .to_string();
            let Some((_, keys)) = SECTIONS.iter().find(|(n, _)| *n == name) else {
                return Err(ParseError::UnknownSection {
                    section: name,
                    line,
                });
            };
            let _ = keys;
            if sections.contains_key(&name) {
                return Err(ParseError::Duplicate {
                    what: format!("section [{name}]"),
                    line,
                });
            }
            sections.insert(
                name.clone(),
                Section {
                    line,
                    entries: HashMap::new(),
                },
            );
            current = Some(name);
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ParseError::Syntax {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let Some(section) = current.as_ref() else {
            return Err(ParseError::Syntax {
                line,
                message: "key outside of any section".into(),
            });
        };
        if key.is_empty() || value.is_empty() {
            return Err(ParseError::Syntax {
                line,
                message: "empty key or value".into(),
            });
        }
        let allowed = SECTIONS.iter().find(|(n, _)| n == section).unwrap().1;
        let known = if section == "bounds" {
            key.parse::<ParamName>().is_ok()
        } else {
            allowed.contains(&key.as_str())
        };
        if !known {
            return Err(ParseError::UnknownKey {
                section: section.clone(),
                key,
                line,
            });
        }
        let sec = sections.get_mut(section).unwrap();
        if sec.entries.contains_key(&key) {
            return Err(ParseError::Duplicate {
                what: format!("key `{key}` in [{section}]"),
                line,
            });
        }
        sec.entries.insert(key, Entry { value, line });
    }
    Ok(sections)
}

struct Resolver<'a> {
    name: &'a str,
    section: &'a Section,
    cache: HashMap<String, f64>,
}

impl<'a> Resolver<'a> {
    fn new(name: &'a str, section: &'a Section) -> Self {
        Self {
            name,
            section,
            cache: HashMap::new(),
        }
    }

    fn value_error(&self, key: &str, line: usize, message: String) -> ParseError {
        ParseError::Value {
            section: self.name.to_string(),
            key: key.to_string(),
            line,
            message,
        }
    }

    fn get(&mut self, key: &str) -> Result<f64, ParseError> {
        let mut visiting = HashSet::new();
        self.resolve(key, &mut visiting)
            .map_err(|(line, m)| self.value_error(key, line, m))
    }

    fn resolve(
        &mut self,
        key: &str,
        visiting: &mut HashSet<String>,
    ) -> Result<f64, (usize, String)> {
        if let Some(v) = self.cache.get(key) {
            return Ok(*v);
        }
        let entry = self
            .section
            .entries
            .get(key)
            .ok_or_else(|| (self.section.line, format!("unknown name `{key}`")))?;
        if !visiting.insert(key.to_string()) {
            return Err((entry.line, format!("circular reference through `{key}`")));
        }
        let line = entry.line;
        let src = entry.value.clone();
        let mut nested: Option<(usize, String)> = None;
        let result = expr::evaluate(&src, &mut |name: &str| {
            self.resolve(name, visiting).map_err(|e| {
                let msg = e.1.clone();
                nested.get_or_insert(e);
                msg
            })
        });
        visiting.remove(key);
        match result {
            Ok(v) => {
                self.cache.insert(key.to_string(), v);
                Ok(v)
            }
            Err(m) => Err(nested.unwrap_or((line, m))),
        }
    }
}

fn required<'a>(
    sections: &'a HashMap<String, Section>,
    name: &str,
) -> Result<&'a Section, ParseError> {
    sections
        .get(name)
        .ok_or_else(|| ParseError::MissingSection(name.to_string()))
}

fn number(res: &mut Resolver<'_>, key: &str) -> Result<f64, ParseError> {
    if !res.section.entries.contains_key(key) {
        return Err(ParseError::MissingKey {
            section: res.name.to_string(),
            key: key.to_string(),
        });
    }
    res.get(key)
}

fn optional_number(res: &mut Resolver<'_>, key: &str) -> Result<Option<f64>, ParseError> {
    if res.section.entries.contains_key(key) {
        res.get(key).map(Some)
    } else {
        Ok(None)
    }
}

/// Splits a comma list at top level (commas inside parentheses are kept).
fn split_list(value: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in value.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    parts.push(cur.trim().to_string());
    parts
}

fn pair(section: &str, key: &str, entry: &Entry) -> Result<(f64, f64), ParseError> {
    let err = |message: String| ParseError::Value {
        section: section.to_string(),
        key: key.to_string(),
        line: entry.line,
        message,
    };
    let parts = split_list(&entry.value);
    if parts.len() != 2 {
        return Err(err(format!("expected two values, got {}", parts.len())));
    }
    let a = expr::evaluate_closed(&parts[0]).map_err(&err)?;
    let b = expr::evaluate_closed(&parts[1]).map_err(&err)?;
    Ok((a, b))
}

/// Sweep settings given in a file, with defaults filled in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSection {
    pub settings: SweepSettings,
    pub press_angle: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            settings: SweepSettings::default(),
            press_angle: TABLE_PRESS_ANGLE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignSection {
    pub spec: DesignSpec,
    pub budget: Option<usize>,
}

/// Everything a parameter file may carry.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterFile {
    pub params: LinkageParameters,
    pub sweep: SweepSection,
    pub design: Option<DesignSection>,
}

/// Parses and validates a parameter file, ignoring optional sections.
pub fn parse_parameter_file(text: &str) -> Result<LinkageParameters, ParseError> {
    parse_file(text).map(|f| f.params)
}

pub fn parse_file(text: &str) -> Result<ParameterFile, ParseError> {
    let sections = split_sections(text)?;

    let lengths = required(&sections, "lengths_mm")?;
    let angles = required(&sections, "angles_deg")?;
    let spring = required(&sections, "spring")?;
    let contact = required(&sections, "contact")?;
    let solver = required(&sections, "solver")?;

    let mut r = Resolver::new("lengths_mm", lengths);
    let l0 = number(&mut r, "l0")?;
    let l1 = number(&mut r, "l1")?;
    let l2 = number(&mut r, "l2")?;
    let l3 = number(&mut r, "l3")?;
    let l4 = number(&mut r, "l4")?;

    let mut r = Resolver::new("angles_deg", angles);
    let mut th = [0.0; 6];
    for (i, t) in th.iter_mut().enumerate() {
        *t = number(&mut r, &format!("theta{i}"))?.to_radians();
    }

    let mut r = Resolver::new("spring", spring);
    let spring_k = number(&mut r, "k_n_per_mm")?;
    let natural_length = number(&mut r, "natural_length_mm")?;

    let mut r = Resolver::new("contact", contact);
    let mu = number(&mut r, "mu")?;

    let mut r = Resolver::new("solver", solver);
    let epsilon = number(&mut r, "epsilon_n")?;
    let opening_rule = match solver.entries.get("opening_rule") {
        Some(e) => e
            .value
            .parse::<OpeningRule>()
            .map_err(|message| ParseError::Value {
                section: "solver".into(),
                key: "opening_rule".into(),
                line: e.line,
                message,
            })?,
        None => OpeningRule::default(),
    };

    let defaults = LinkageParameters::default();
    let (mut closed, mut open) = (defaults.surface_angle_closed, defaults.surface_angle_open);
    if let Some(posture) = sections.get("posture") {
        let mut r = Resolver::new("posture", posture);
        if let Some(v) = optional_number(&mut r, "closed_deg")? {
            closed = v.to_radians();
        }
        if let Some(v) = optional_number(&mut r, "open_deg")? {
            open = v.to_radians();
        }
    }

    let params = LinkageParameters {
        l0,
        l1,
        l2,
        l3,
        l4,
        theta0: th[0],
        theta1: th[1],
        theta2: th[2],
        theta3: th[3],
        theta4: th[4],
        theta5: th[5],
        spring_k,
        natural_length,
        mu,
        epsilon,
        surface_angle_closed: closed,
        surface_angle_open: open,
        opening_rule,
    };
    let report = validate_parameters(&params);
    if !report.is_empty() {
        return Err(ParseError::Invalid(report));
    }

    let mut sweep = SweepSection::default();
    if let Some(sec) = sections.get("sweep") {
        let mut r = Resolver::new("sweep", sec);
        let d = SweepSettings::default();
        let lo = optional_number(&mut r, "from_deg")?.unwrap_or(d.zeta_lo.to_degrees());
        let hi = optional_number(&mut r, "to_deg")?.unwrap_or(d.zeta_hi.to_degrees());
        let step = optional_number(&mut r, "step_deg")?.unwrap_or(d.step.to_degrees());
        sweep.settings =
            SweepSettings::from_degrees(lo, hi, step).map_err(|e| ParseError::Value {
                section: "sweep".into(),
                key: "from_deg/to_deg/step_deg".into(),
                line: sec.line,
                message: e.to_string(),
            })?;
        if let Some(p) = optional_number(&mut r, "press_deg")? {
            sweep.press_angle = p.to_radians();
        }
    }

    let design = match sections.get("design") {
        Some(sec) => Some(parse_design(sec, sections.get("bounds"), &params, &sweep)?),
        None => {
            if let Some(b) = sections.get("bounds") {
                return Err(ParseError::Syntax {
                    line: b.line,
                    message: "[bounds] requires a [design] section".into(),
                });
            }
            None
        }
    };

    Ok(ParameterFile {
        params,
        sweep,
        design,
    })
}

fn to_internal(kind: ParamKind, v: f64) -> f64 {
    if kind == ParamKind::Angle {
        v.to_radians()
    } else {
        v
    }
}

fn parse_design(
    sec: &Section,
    bounds: Option<&Section>,
    params: &LinkageParameters,
    sweep: &SweepSection,
) -> Result<DesignSection, ParseError> {
    let get = |key: &str| -> Result<&Entry, ParseError> {
        sec.entries.get(key).ok_or_else(|| ParseError::MissingKey {
            section: "design".into(),
            key: key.into(),
        })
    };
    let (t0, t1) = pair("design", "interval_deg", get("interval_deg")?)?;
    let band = pair("design", "threshold_n", get("threshold_n")?)?;

    let mut r = Resolver::new("design", sec);
    let press = optional_number(&mut r, "press_deg")?
        .map(f64::to_radians)
        .unwrap_or(sweep.press_angle);
    let budget = match optional_number(&mut r, "budget")? {
        Some(b) if b >= 1.0 && b.fract() == 0.0 => Some(b as usize),
        Some(b) => {
            return Err(ParseError::Design(format!(
                "budget must be a positive integer, got {b}"
            )))
        }
        None => None,
    };
    let mut weights = PenaltyWeights::default();
    if let Some(w) = optional_number(&mut r, "interval_weight")? {
        weights.interval = w;
    }
    if let Some(w) = optional_number(&mut r, "band_weight")? {
        weights.band = w;
    }

    let mut free = Vec::new();
    if let Some(entry) = sec.entries.get("free") {
        for name in split_list(&entry.value).iter().filter(|s| !s.is_empty()) {
            let pname = name
                .parse::<ParamName>()
                .map_err(|message| ParseError::Value {
                    section: "design".into(),
                    key: "free".into(),
                    line: entry.line,
                    message,
                })?;
            let bound_entry = bounds
                .and_then(|b| {
                    b.entries
                        .iter()
                        .find(|(k, _)| k.parse::<ParamName>().ok() == Some(pname))
                })
                .map(|(_, e)| e);
            let (lo, hi) = match bound_entry {
                Some(e) => {
                    let (a, b) = pair("bounds", name, e)?;
                    (to_internal(pname.kind(), a), to_internal(pname.kind(), b))
                }
                None => {
                    return Err(ParseError::Design(format!(
                        "free parameter `{name}` has no entry in [bounds]"
                    )))
                }
            };
            free.push(Bound {
                name: pname,
                lo,
                hi,
            });
        }
    }

    let spec = DesignSpec {
        target_interval: (t0.to_radians(), t1.to_radians()),
        threshold_band: band,
        press_angle: press,
        free,
        sweep: sweep.settings,
        weights,
    };
    spec.validate()
        .map_err(|e| ParseError::Design(e.to_string()))?;
    for b in &spec.free {
        let v = params.get(b.name);
        if v < b.lo || v > b.hi {
            return Err(ParseError::Design(format!(
                "{} = {} lies outside its bounds",
                b.name, v
            )));
        }
    }
    Ok(DesignSection { spec, budget })
}

/// Degree value whose conversion back to radians reproduces `rad` exactly,
/// when one exists near `rad.to_degrees()`.
pub fn exact_degrees(rad: f64) -> f64 {
    let guess = rad.to_degrees();
    if guess.to_radians() == rad || !guess.is_finite() || guess == 0.0 {
        return guess;
    }
    let bits = guess.to_bits();
    for k in 1..=64u64 {
        for cand in [bits.wrapping_add(k), bits.wrapping_sub(k)] {
            let d = f64::from_bits(cand);
            if d.to_radians() == rad {
                return d;
            }
        }
    }
    guess
}

/// Writes a parameter file that parses back to exactly `p`.
pub fn serialize_parameters(p: &LinkageParameters) -> String {
    let mut s = String::new();
    let deg = |v: f64| exact_degrees(v);
    let _ = writeln!(s, "[lengths_mm]");
    for (k, v) in [
        ("l0", p.l0),
        ("l1", p.l1),
        ("l2", p.l2),
        ("l3", p.l3),
        ("l4", p.l4),
    ] {
        let _ = writeln!(s, "{k} = {v}");
    }
    let _ = writeln!(s, "\n[angles_deg]");
    for (i, v) in p.thetas().iter().enumerate() {
        let _ = writeln!(s, "theta{i} = {}", deg(*v));
    }
    let _ = writeln!(s, "\n[spring]");
    let _ = writeln!(s, "k_n_per_mm = {}", p.spring_k);
    let _ = writeln!(s, "natural_length_mm = {}", p.natural_length);
    let _ = writeln!(s, "\n[contact]");
    let _ = writeln!(s, "mu = {}", p.mu);
    let _ = writeln!(s, "\n[solver]");
    let _ = writeln!(s, "epsilon_n = {}", p.epsilon);
    let _ = writeln!(s, "opening_rule = {}", p.opening_rule.as_str());
    let _ = writeln!(s, "\n[posture]");
    let _ = writeln!(s, "closed_deg = {}", deg(p.surface_angle_closed));
    let _ = writeln!(s, "open_deg = {}", deg(p.surface_angle_open));
    s
}

/// The reference parameter file shipped with the crate.
pub const DEFAULT_PARAMETER_FILE: &str = include_str!("../../data/default.params");
