//! CSV tables and a minimal SVG renderer.
//!
//! Floats are written with 17 significant digits so every value round-trips
//! exactly; lines end in `\n`. Each table starts with `#` comment lines
//! carrying the configuration fingerprint, seed and dimensionless constants.

use crate::error::{Error, Result};
use crate::harness::{Curve, DeviationTable, TrendCheck};
use crate::physchem::DimensionlessConstants;
use std::fmt::Write as _;
use std::path::Path;

pub const TIME_SERIES_COLUMNS: &str =
    "t_star,t_seconds,mean_count_star,std_err_star,analytic_no_enzyme_star,analytic_lower_bound_star,n_trials";

/// Full-precision float.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn constants_line(g: &DimensionlessConstants) -> String {
    DimensionlessConstants::NAMES
        .iter()
        .zip(g.as_array())
        .map(|(n, v)| format!("{n}={}", fmt_f64(v)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn header(out: &mut String, label: &str, hash: &str, seed: Option<u64>, constants: &str) {
    let seed = seed.map_or("none".to_string(), |s| s.to_string());
    let _ = writeln!(out, "# label={label}");
    let _ = writeln!(out, "# config_hash={hash}");
    let _ = writeln!(out, "# seed={seed}");
    let _ = writeln!(out, "# constants {constants}");
}

/// Simulated mean curve with its analytic companions, all in molecules per
/// N_A.
pub fn time_series_csv(curve: &Curve) -> String {
    let mut out = String::new();
    header(
        &mut out,
        &curve.label,
        &curve.config_hash,
        Some(curve.seed),
        &constants_line(&curve.constants),
    );
    out.push_str(TIME_SERIES_COLUMNS);
    out.push('\n');
    let s = &curve.series;
    let (mean, se) = (s.mean_star(), s.std_err_star());
    for i in 0..s.t_star.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f64(s.t_star[i]),
            fmt_f64(s.t_seconds[i]),
            fmt_f64(mean[i]),
            fmt_f64(se[i]),
            fmt_f64(curve.analytic_no_enzyme[i]),
            fmt_f64(curve.lower_bound[i]),
            s.n_trials
        );
    }
    out
}

/// Closed-form curves only.
pub fn analytic_csv(
    label: &str,
    hash: &str,
    constants: &DimensionlessConstants,
    t_star: &[f64],
    t_seconds: &[f64],
    (no_enzyme, exact, lower): (&[f64], &[f64], &[f64]),
) -> String {
    let mut out = String::new();
    header(&mut out, label, hash, None, &constants_line(constants));
    out.push_str("t_star,t_seconds,analytic_no_enzyme_star,exact_no_enzyme_star,analytic_lower_bound_star\n");
    for i in 0..t_star.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(t_star[i]),
            fmt_f64(t_seconds[i]),
            fmt_f64(no_enzyme[i]),
            fmt_f64(exact[i]),
            fmt_f64(lower[i])
        );
    }
    out
}

/// Deviation of the uniform approximation; one column per receiver size.
/// Indeterminate entries are written as `nan`.
pub fn deviation_csv(table: &DeviationTable, cube: bool) -> String {
    let cols = if cube { &table.cube } else { &table.sphere };
    let desc = format!(
        "r_star={:?} t_star=[{}..{}]x{} shape={}",
        table.r_obs,
        fmt_f64(table.t_star[0]),
        fmt_f64(*table.t_star.last().unwrap_or(&0.0)),
        table.t_star.len(),
        if cube { "cube" } else { "sphere" }
    );
    let mut out = String::new();
    header(
        &mut out,
        "uniform-test",
        &crate::harness::fingerprint(&desc),
        None,
        "distance_star=1",
    );
    out.push_str("t_star");
    for r in &table.r_obs {
        let _ = write!(out, ",r_star_{r:.2}");
    }
    out.push('\n');
    for (i, t) in table.t_star.iter().enumerate() {
        out.push_str(&fmt_f64(*t));
        for c in cols {
            out.push(',');
            out.push_str(&fmt_f64(c[i].unwrap_or(f64::NAN)));
        }
        out.push('\n');
    }
    out
}

pub fn trends_csv(base: &Curve, checks: &[TrendCheck]) -> String {
    let mut out = String::new();
    header(
        &mut out,
        &format!("{} trends", base.label),
        &base.config_hash,
        Some(base.seed),
        &constants_line(&base.constants),
    );
    out.push_str("variant,expected_sign,base_gap,variant_gap,gap_change,paired_std_err,combined_std_err\n");
    for c in checks {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.label,
            c.expected_sign,
            fmt_f64(c.base_gap),
            fmt_f64(c.variant_gap),
            fmt_f64(c.diff),
            fmt_f64(c.paired_se),
            fmt_f64(c.combined_se)
        );
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

/// One polyline of a plot.
pub struct Line<'a> {
    pub name: &'a str,
    pub y: &'a [f64],
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Static log-x line plot. Non-finite points are skipped.
pub fn svg_plot(title: &str, x: &[f64], lines: &[Line]) -> String {
    let (w, h, m) = (640.0, 420.0, 50.0);
    let xs: Vec<f64> = x.iter().map(|v| v.log10()).collect();
    let finite = |v: &&f64| v.is_finite();
    let (x0, x1) = bounds(xs.iter().filter(finite));
    let (y0, y1) = bounds(lines.iter().flat_map(|l| l.y.iter()).filter(finite));
    let px = |v: f64| m + (v - x0) / (x1 - x0).max(1e-300) * (w - 2.0 * m);
    let py = |v: f64| h - m - (v - y0) / (y1 - y0).max(1e-300) * (h - 2.0 * m);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{m} {m} V{} H{}" fill="none" stroke="black"/>"#,
        h - m,
        w - m
    );
    for d in (x0.floor() as i32)..=(x1.ceil() as i32) {
        let d = d as f64;
        if d < x0 - 1e-9 || d > x1 + 1e-9 {
            continue;
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">1e{}</text>"#,
            px(d),
            h - m + 15.0,
            d
        );
    }
    for (v, anchor) in [(y0, "end"), (y1, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="{anchor}">{v:.3e}</text>"#,
            m - 4.0,
            py(v) + 4.0
        );
    }
    for (k, l) in lines.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = xs
            .iter()
            .zip(l.y)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(a, b)| format!("{:.2},{:.2}", px(*a), py(*b)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            w - m - 150.0,
            m + 14.0 * k as f64,
            escape(l.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn bounds<'a>(it: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
