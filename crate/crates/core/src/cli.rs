//! Command-line driver.
//!
//! Exit codes: 0 success, 2 parse/validation failure, 3 singular or
//! indeterminate analysis at the requested direction, 4 infeasible design,
//! 5 I/O failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::design::{optimize_design, DesignStatus};
use crate::io::compare::{compare_measurements, comparison_csv, parse_measurements};
use crate::io::paramfile::{
    parse_file, serialize_parameters, ParameterFile, DEFAULT_PARAMETER_FILE,
};
use crate::io::report::{fmt_sig, sweep_csv, sweep_summary, sweep_svg};
use crate::model::validate_parameters;
use crate::modeswitch::{
    select_mode, sweep, switching_threshold, SweepCurve, SweepSettings, ThresholdQuery,
};
use crate::statics::{predict_opening, solve_balance, OpeningDecision, Verdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_ANALYSIS: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;
pub const EXIT_IO: i32 = 5;

/// Environment variable capping the number of sweep worker threads.
pub const THREADS_ENV: &str = "LINKSTAT_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "linkstat",
    version,
    about = "Opening-force analysis of a six-bar gripper finger"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a parameter file and list every violated constraint.
    Validate { params: PathBuf },
    /// Decide whether a single force direction opens the links.
    Analyze {
        params: PathBuf,
        /// Force direction in degrees.
        #[arg(long, allow_hyphen_values = true)]
        zeta: f64,
        /// Table-press force to classify against the switching threshold, N.
        #[arg(long)]
        applied: Option<f64>,
    },
    /// Sweep force directions and write the envelope as CSV.
    Sweep {
        params: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        from: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        to: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        /// CSV output; a `.summary` sidecar is written next to it.
        #[arg(long)]
        out: PathBuf,
        /// Also write an SVG plot of the envelope.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Search the free parameters of the [design] section.
    Optimize {
        params: PathBuf,
        #[arg(long)]
        budget: Option<usize>,
        /// Write the best parameter set found to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare measured opening forces with predictions.
    Compare {
        params: PathBuf,
        measurements: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the reference parameter file.
    Defaults,
}

#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Analysis(String),
    Infeasible(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Analysis(_) => EXIT_ANALYSIS,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Io(_) => EXIT_IO,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Parse(m)
            | CliError::Analysis(m)
            | CliError::Infeasible(m)
            | CliError::Io(m) => m,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<ParameterFile, CliError> {
    let text = read(path)?;
    parse_file(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Path of the key=value summary written beside a sweep CSV.
pub fn summary_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".summary");
    PathBuf::from(s)
}

/// Runs one command; the returned text goes to stdout.
pub fn execute(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Defaults => Ok(DEFAULT_PARAMETER_FILE.to_string()),
        Command::Validate { params } => {
            let text = read(&params)?;
            match parse_file(&text) {
                Ok(f) => {
                    debug_assert!(validate_parameters(&f.params).is_empty());
                    Ok(format!("{}: ok\n", params.display()))
                }
                Err(e) => Err(CliError::Parse(format!("{}: {e}", params.display()))),
            }
        }
        Command::Analyze {
            params,
            zeta,
            applied,
        } => {
            let file = load(&params)?;
            analyze(&file, zeta, applied)
        }
        Command::Sweep {
            params,
            from,
            to,
            step,
            out,
            svg,
        } => {
            let file = load(&params)?;
            let base = file.sweep.settings;
            let settings = SweepSettings::from_degrees(
                from.unwrap_or(base.zeta_lo.to_degrees()),
                to.unwrap_or(base.zeta_hi.to_degrees()),
                step.unwrap_or(base.step.to_degrees()),
            )
            .map_err(|e| CliError::Parse(e.to_string()))?;
            let curve = run_sweep(&file, settings);
            write(&out, &sweep_csv(&curve))?;
            let summary = sweep_summary(&curve);
            write(&summary_path(&out), &summary)?;
            if let Some(svg) = svg {
                write(&svg, &sweep_svg(&curve))?;
            }
            Ok(summary)
        }
        Command::Optimize {
            params,
            budget,
            out,
        } => {
            let file = load(&params)?;
            let design = file.design.ok_or_else(|| {
                CliError::Parse(format!("{}: no [design] section", params.display()))
            })?;
            let budget = budget.or(design.budget).unwrap_or(2000);
            let result = optimize_design(&design.spec, &file.params, budget)
                .map_err(|e| CliError::Parse(e.to_string()))?;
            let mut report = String::new();
            let _ = writeln!(report, "evaluations={}", result.evaluations);
            let _ = writeln!(report, "penalty={}", fmt_sig(result.best_penalty));
            for iv in &result.verification.intervals {
                let _ = writeln!(
                    report,
                    "interval_deg={},{}",
                    fmt_sig(iv.lo.to_degrees()),
                    fmt_sig(iv.hi.to_degrees())
                );
            }
            match result.verification.threshold {
                Some(f) => {
                    let _ = writeln!(report, "threshold_n={}", fmt_sig(f));
                }
                None => {
                    let _ = writeln!(report, "threshold_n=not_opening");
                }
            }
            if let Some(path) = out {
                write(&path, &serialize_parameters(result.params()))?;
            }
            match &result.status {
                DesignStatus::Feasible(p) => {
                    let _ = writeln!(report, "status=feasible");
                    for b in &design.spec.free {
                        let _ = writeln!(
                            report,
                            "{}={}",
                            b.name,
                            fmt_sig(file_units(b.name, p.get(b.name)))
                        );
                    }
                    Ok(report)
                }
                DesignStatus::Infeasible { violations, .. } => {
                    let _ = writeln!(report, "status=infeasible");
                    for v in violations {
                        let _ = writeln!(
                            report,
                            "violation.{}={} {}",
                            v.constraint,
                            fmt_sig(v.amount),
                            v.unit
                        );
                    }
                    Err(CliError::Infeasible(report))
                }
            }
        }
        Command::Compare {
            params,
            measurements,
            out,
        } => {
            let file = load(&params)?;
            let text = read(&measurements)?;
            let rows = parse_measurements(&text)
                .map_err(|e| CliError::Parse(format!("{}: {e}", measurements.display())))?;
            let comparison = compare_measurements(&file.params, &rows);
            let csv = comparison_csv(&comparison);
            let mut report = csv.clone();
            match comparison.mean_abs_deviation {
                Some(m) => {
                    let _ = writeln!(report, "# mean_abs_deviation_n={}", fmt_sig(m));
                }
                None => {
                    let _ = writeln!(report, "# mean_abs_deviation_n=none");
                }
            }
            if let Some(path) = out {
                write(&path, &csv)?;
            }
            Ok(report)
        }
    }
}

fn file_units(name: crate::model::ParamName, v: f64) -> f64 {
    if name.kind() == crate::model::ParamKind::Angle {
        v.to_degrees()
    } else {
        v
    }
}

fn run_sweep(file: &ParameterFile, settings: SweepSettings) -> SweepCurve {
    let mut curve = sweep(&file.params, settings);
    let press = file.sweep.press_angle;
    if curve.thresholds.iter().all(|q| q.zeta != press) {
        curve.thresholds = vec![ThresholdQuery {
            zeta: press,
            force: switching_threshold(&file.params, press).ok(),
        }];
    }
    curve
}

fn analyze(file: &ParameterFile, zeta_deg: f64, applied: Option<f64>) -> Result<String, CliError> {
    let p = &file.params;
    let zeta = zeta_deg.to_radians();
    let decision = predict_opening(p, zeta);
    let mut s = String::new();
    let _ = writeln!(s, "zeta_deg={}", fmt_sig(zeta_deg));
    let verdict = decision.verdict();
    let _ = writeln!(
        s,
        "verdict={}",
        match verdict {
            Verdict::Opens => "opens",
            Verdict::Blocked => "blocked",
            Verdict::Singular => "singular",
            Verdict::Indeterminate => "indeterminate",
        }
    );
    match &decision {
        OpeningDecision::Singular(detail) => {
            let _ = writeln!(s, "detail={detail}");
            return Err(CliError::Analysis(s));
        }
        OpeningDecision::Blocked(reason, _) => {
            let _ = writeln!(s, "blocked_reason={}", reason.as_str());
        }
        OpeningDecision::Opens(_) => {}
    }
    if let Some(o) = decision.outcome() {
        let _ = writeln!(s, "xi_b_n={}", fmt_sig(o.xi_b));
        let _ = writeln!(s, "beta3_b_n={}", fmt_sig(o.beta_3b));
        let _ = writeln!(s, "f_rx_n={}", fmt_sig(o.forces.f_rx));
        let _ = writeln!(s, "f_sx_n={}", fmt_sig(o.forces.f_sx));
        let _ = writeln!(s, "sign_beta3={}", o.sign_beta3.as_i8());
        let _ = writeln!(s, "sign_consistent={}", o.sign_consistent);
    }
    if let Ok(sol) = solve_balance(p, zeta) {
        let _ = writeln!(s, "gamma={}", fmt_sig(sol.system.gamma));
        let _ = writeln!(s, "lambda={}", fmt_sig(sol.system.lambda));
        let _ = writeln!(s, "spring_force_n={}", fmt_sig(sol.system.f_k));
    }
    let _ = writeln!(s, "opening_rule={}", p.opening_rule.as_str());
    if verdict == Verdict::Indeterminate {
        return Err(CliError::Analysis(s));
    }
    if let Some(force) = applied {
        let press = file.sweep.press_angle;
        match switching_threshold(p, press) {
            Ok(threshold) => {
                let v = select_mode(force, threshold);
                let _ = writeln!(s, "press_deg={}", fmt_sig(press.to_degrees()));
                let _ = writeln!(s, "threshold_n={}", fmt_sig(threshold));
                let _ = writeln!(s, "mode={}", v.mode.as_str());
            }
            Err(e) => {
                let _ = writeln!(s, "mode=unknown ({e})");
                return Err(CliError::Analysis(s));
            }
        }
    }
    Ok(s)
}

fn thread_pool() -> Result<Option<rayon::ThreadPool>, CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n >= 1).ok_or_else(|| {
        CliError::Parse(format!(
            "{THREADS_ENV} must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map(Some)
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))
}

/// Parses arguments, runs, prints, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match thread_pool() {
        Ok(Some(pool)) => pool.install(|| execute(cli)),
        Ok(None) => execute(cli),
        Err(e) => Err(e),
    };
    match outcome {
        Ok(out) => {
            print!("{out}");
            EXIT_OK
        }
        Err(e) => {
            match e {
                CliError::Infeasible(_) | CliError::Analysis(_) => print!("{}", e.message()),
                _ => eprintln!("error: {}", e.message()),
            }
            e.exit_code()
        }
    }
}
