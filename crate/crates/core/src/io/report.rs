//! Text outputs: sweep CSV, the key=value summary, and an SVG of the envelope.

use std::fmt::Write as _;

use crate::modeswitch::SweepCurve;
use crate::statics::{OpeningDecision, Verdict};

pub const SWEEP_HEADER: &str =
    "zeta_deg,xi_b_n,opens,blocked_reason,f_rx_n,f_sx_n,sign_beta3,sign_consistent";

/// `%.9g`-style formatting, independent of locale.
pub fn fmt_sig(x: f64) -> String {
    fmt_sig_n(x, 9)
}

pub fn fmt_sig_n(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn row_fields(decision: &OpeningDecision) -> [String; 7] {
    let verdict = decision.verdict();
    let reason = match (verdict, decision) {
        (Verdict::Opens, _) => String::new(),
        (Verdict::Singular, _) => "singular".into(),
        (Verdict::Indeterminate, _) => "indeterminate".into(),
        (Verdict::Blocked, OpeningDecision::Blocked(r, _)) => r.as_str().into(),
        (Verdict::Blocked, _) => unreachable!("blocked verdict without blocked decision"),
    };
    let xi = fmt_sig(decision.plotted_force());
    let opens = (verdict == Verdict::Opens).to_string();
    match decision.outcome() {
        Some(o) => [
            xi,
            opens,
            reason,
            fmt_sig(o.forces.f_rx),
            fmt_sig(o.forces.f_sx),
            o.sign_beta3.as_i8().to_string(),
            o.sign_consistent.to_string(),
        ],
        None => [
            xi,
            opens,
            reason,
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ],
    }
}

/// One header line plus one row per sample, `\n`-terminated.
pub fn sweep_csv(curve: &SweepCurve) -> String {
    let mut out = String::with_capacity(64 * (curve.samples.len() + 1));
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for s in &curve.samples {
        out.push_str(&fmt_sig(s.zeta.to_degrees()));
        for field in row_fields(&s.decision) {
            out.push(',');
            out.push_str(&field);
        }
        out.push('\n');
    }
    out
}

/// Plain `key=value` summary of a sweep.
pub fn sweep_summary(curve: &SweepCurve) -> String {
    let mut s = String::new();
    let st = &curve.settings;
    let _ = writeln!(s, "from_deg={}", fmt_sig(st.zeta_lo.to_degrees()));
    let _ = writeln!(s, "to_deg={}", fmt_sig(st.zeta_hi.to_degrees()));
    let _ = writeln!(s, "step_deg={}", fmt_sig(st.step.to_degrees()));
    let _ = writeln!(s, "samples={}", curve.samples.len());
    let _ = writeln!(s, "flagged_samples={}", curve.flagged().len());
    let _ = writeln!(s, "interval_count={}", curve.intervals.len());
    for (i, iv) in curve.intervals.iter().enumerate() {
        let _ = writeln!(s, "interval{i}_lo_deg={}", fmt_sig(iv.lo.to_degrees()));
        let _ = writeln!(s, "interval{i}_hi_deg={}", fmt_sig(iv.hi.to_degrees()));
    }
    for q in &curve.thresholds {
        let _ = writeln!(s, "press_deg={}", fmt_sig(q.zeta.to_degrees()));
        match q.force {
            Some(f) => {
                let _ = writeln!(s, "threshold_n={}", fmt_sig(f));
                let _ = writeln!(
                    s,
                    "parallel_grip_budget_n={}",
                    fmt_sig(crate::modeswitch::parallel_grip_budget(f))
                );
            }
            None => {
                let _ = writeln!(s, "threshold_n=not_opening");
            }
        }
    }
    s
}

/// Minimal SVG plot of required force against direction.
pub fn sweep_svg(curve: &SweepCurve) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let lo = curve.settings.zeta_lo.to_degrees();
    let hi = curve.settings.zeta_hi.to_degrees();
    let fmax = curve
        .samples
        .iter()
        .map(|s| s.decision.plotted_force())
        .fold(1.0f64, f64::max)
        * 1.1;
    let px = |z: f64| pad + (z - lo) / (hi - lo) * (w - 2.0 * pad);
    let py = |f: f64| h - pad - f / fmax * (h - 2.0 * pad);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<path d="M{} {} H{} M{} {} V{}" stroke="black" fill="none"/>"#,
        pad,
        h - pad,
        w - pad,
        pad,
        h - pad,
        pad
    );
    let mut d = String::new();
    for (i, smp) in curve.samples.iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(
            d,
            "{cmd}{} {} ",
            fmt_sig_n(px(smp.zeta.to_degrees()), 6),
            fmt_sig_n(py(smp.decision.plotted_force()), 6)
        );
    }
    let _ = writeln!(
        s,
        r#"<path d="{}" stroke="steelblue" stroke-width="1.5" fill="none"/>"#,
        d.trim_end()
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">zeta [deg] ({} .. {})</text>"#,
        w / 2.0,
        h - 15.0,
        fmt_sig(lo),
        fmt_sig(hi)
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" font-size="12" transform="rotate(-90 15 {})">xi_b [N] (max {})</text>"#,
        h / 2.0,
        h / 2.0,
        fmt_sig_n(fmax, 4)
    );
    s.push_str("</svg>\n");
    s
}
