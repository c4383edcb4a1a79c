//! Serialization of sweep results: CSV curves, JSON resonance reports, SVG
//! plots.
//!
//! Every file starts with comment/metadata lines embedding the config hash
//! and the solver provenance, so an output can always be traced back to the
//! exact model that produced it.  CSV floats use Rust's shortest
//! round-tripping decimal form: reading a curve back reproduces the samples
//! bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::json;

use crate::coupled::ResonanceReport;
use crate::error::{FeshError, Result};
use crate::scan::{EffCurve, PoleAnnotation, SampleFlag, ScanSample};

fn io_err(path: &Path, e: std::io::Error) -> FeshError {
    FeshError::Io {
        path: path.display().to_string(),
        source: e,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Render a curve as CSV text with `#` metadata comments.
pub fn curve_to_csv(curve: &EffCurve) -> String {
    let mut s = String::new();
    writeln!(s, "# feshscan effective-curve v1").unwrap();
    writeln!(s, "# config_hash = {}", curve.config_hash).unwrap();
    writeln!(s, "# provenance = {}", curve.provenance).unwrap();
    for p in &curve.poles {
        writeln!(s, "# pole lambda_j = {} c_j = {}", p.lambda_j, p.c_j).unwrap();
    }
    let has_b = curve.samples.iter().any(|x| x.b.is_some());
    if has_b {
        writeln!(s, "lambda,B,a_eff,mu_max,cond,flag").unwrap();
    } else {
        writeln!(s, "lambda,a_eff,mu_max,cond,flag").unwrap();
    }
    for x in &curve.samples {
        if has_b {
            writeln!(
                s,
                "{},{},{},{},{},{}",
                x.lambda,
                opt(x.b),
                opt(x.a_eff),
                opt(x.mu_max),
                opt(x.cond),
                x.flag.as_str()
            )
            .unwrap();
        } else {
            writeln!(
                s,
                "{},{},{},{},{}",
                x.lambda,
                opt(x.a_eff),
                opt(x.mu_max),
                opt(x.cond),
                x.flag.as_str()
            )
            .unwrap();
        }
    }
    s
}

/// Write [`curve_to_csv`] output to `path`.
pub fn write_csv(path: &Path, curve: &EffCurve) -> Result<()> {
    fs::write(path, curve_to_csv(curve)).map_err(|e| io_err(path, e))
}

fn bad_csv(path: &Path, line: usize, why: &str) -> FeshError {
    FeshError::Domain(format!(
        "malformed curve CSV {} (line {line}): {why}",
        path.display()
    ))
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| bad_csv(path, line, &format!("cannot parse number {field:?}")))
}

fn parse_opt(path: &Path, line: usize, field: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_f64(path, line, field).map(Some)
    }
}

/// Read a curve previously written by [`write_csv`].  The reconstruction is
/// exact: floats are parsed from their shortest round-trip representation.
pub fn read_csv(path: &Path) -> Result<EffCurve> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut config_hash = String::new();
    let mut provenance = String::new();
    let mut poles = Vec::new();
    let mut samples = Vec::new();
    let mut has_b = None::<bool>;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(h) = rest.strip_prefix("config_hash =") {
                config_hash = h.trim().to_string();
            } else if let Some(p) = rest.strip_prefix("provenance =") {
                provenance = p.trim().to_string();
            } else if let Some(p) = rest.strip_prefix("pole lambda_j =") {
                let (lj, cj) = p
                    .split_once("c_j =")
                    .ok_or_else(|| bad_csv(path, line, "pole comment without c_j"))?;
                poles.push(PoleAnnotation {
                    lambda_j: parse_f64(path, line, lj.trim())?,
                    c_j: parse_f64(path, line, cj.trim())?,
                });
            }
            continue;
        }
        if has_b.is_none() {
            has_b = match t {
                "lambda,B,a_eff,mu_max,cond,flag" => Some(true),
                "lambda,a_eff,mu_max,cond,flag" => Some(false),
                _ => return Err(bad_csv(path, line, "unrecognized header row")),
            };
            continue;
        }
        let with_b = has_b.unwrap();
        let fields: Vec<&str> = t.split(',').collect();
        let expect = if with_b { 6 } else { 5 };
        if fields.len() != expect {
            return Err(bad_csv(
                path,
                line,
                &format!("expected {expect} fields, got {}", fields.len()),
            ));
        }
        let mut k = 0;
        let mut next = || {
            let f = fields[k];
            k += 1;
            f
        };
        let lambda = parse_f64(path, line, next())?;
        let b = if with_b { parse_opt(path, line, next())? } else { None };
        let a_eff = parse_opt(path, line, next())?;
        let mu_max = parse_opt(path, line, next())?;
        let cond = parse_opt(path, line, next())?;
        let flag = SampleFlag::parse(next())
            .ok_or_else(|| bad_csv(path, line, "unknown flag value"))?;
        samples.push(ScanSample {
            lambda,
            b,
            a_eff,
            mu_max,
            cond,
            flag,
        });
    }
    if has_b.is_none() {
        return Err(bad_csv(path, text.lines().count(), "missing header row"));
    }
    Ok(EffCurve {
        samples,
        poles,
        config_hash,
        provenance,
    })
}

/// Render resonance reports as the versioned JSON document
/// `feshscan.report.v1`.
pub fn reports_to_json(reports: &[ResonanceReport], config_hash: &str, provenance: &str) -> String {
    let items: Vec<serde_json::Value> = reports
        .iter()
        .map(|r| {
            json!({
                "lambda_j": r.lambda_j,
                "c_j": r.c_j,
                "c_j_fit": r.c_j_fit,
                "p_j": r.p_j,
                "sigma_min": r.sigma_min,
                "kernel_dim": r.kernel_dim,
                "state": r.state,
                "interlaced": r.interlaced,
                "w_norm": r.w_norm,
                "E_b": r.breit_wigner.map(|bw| bw.e_b),
                "E_res": r.breit_wigner.map(|bw| bw.e_res),
                "Gamma": r.breit_wigner.map(|bw| bw.gamma),
            })
        })
        .collect();
    let doc = json!({
        "schema": "feshscan.report.v1",
        "config_hash": config_hash,
        "provenance": provenance,
        "reports": items,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("report document serializes");
    s.push('\n');
    s
}

/// Write [`reports_to_json`] output to `path`.
pub fn write_reports_json(
    path: &Path,
    reports: &[ResonanceReport],
    config_hash: &str,
    provenance: &str,
) -> Result<()> {
    fs::write(path, reports_to_json(reports, config_hash, provenance))
        .map_err(|e| io_err(path, e))
}

const SVG_W: f64 = 1200.0;
const SVG_H: f64 = 800.0;
const MARGIN_L: f64 = 90.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 50.0;
const MARGIN_B: f64 = 70.0;

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if (1e-3..1e4).contains(&a) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

/// Render the curve as a self-contained 1200×800 SVG: one path per curve
/// (with `M` jumps at gaps and pole crossings), dashed vertical pole markers,
/// labelled axes.
pub fn curve_to_svg(curve: &EffCurve) -> String {
    let xs: Vec<f64> = curve.samples.iter().map(|s| s.lambda).collect();
    let finite: Vec<f64> = curve.samples.iter().filter_map(|s| s.a_eff).collect();
    let (x0, x1) = match (xs.first(), xs.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        _ => (0.0, 1.0),
    };
    // Robust y-range: central 90% of the finite values, padded.  a_eff blows
    // up near poles, so min/max would flatten the background entirely.
    let (mut y0, mut y1) = if finite.is_empty() {
        (-1.0, 1.0)
    } else {
        let mut sorted = finite.clone();
        sorted.sort_by(f64::total_cmp);
        let q = |f: f64| sorted[((sorted.len() - 1) as f64 * f).round() as usize];
        (q(0.05), q(0.95))
    };
    if y1 <= y0 || y0.is_nan() || y1.is_nan() {
        let mid = if y0.is_finite() { y0 } else { 0.0 };
        y0 = mid - 1.0;
        y1 = mid + 1.0;
    }
    let pad = 0.08 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    let px = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * (SVG_W - MARGIN_L - MARGIN_R);
    let py = |y: f64| SVG_H - MARGIN_B - (y - y0) / (y1 - y0) * (SVG_H - MARGIN_T - MARGIN_B);

    let mut d = String::new();
    let mut pen_up = true;
    let mut prev_lambda = f64::NEG_INFINITY;
    for s in &curve.samples {
        let crosses_pole = curve
            .poles
            .iter()
            .any(|p| prev_lambda < p.lambda_j && p.lambda_j < s.lambda);
        match s.a_eff {
            None => pen_up = true,
            Some(a) => {
                if crosses_pole {
                    pen_up = true;
                }
                let cmd = if pen_up { 'M' } else { 'L' };
                write!(d, "{cmd}{:.2} {:.2} ", px(s.lambda), py(a)).unwrap();
                pen_up = false;
            }
        }
        prev_lambda = s.lambda;
    }

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    )
    .unwrap();
    writeln!(
        s,
        "  <desc>feshscan effective-curve config_hash = {} provenance = {}</desc>",
        xml_escape(&curve.config_hash),
        xml_escape(&curve.provenance)
    )
    .unwrap();
    writeln!(s, r#"  <rect width="{SVG_W}" height="{SVG_H}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"  <clipPath id="plot"><rect x="{MARGIN_L}" y="{MARGIN_T}" width="{}" height="{}"/></clipPath>"#,
        SVG_W - MARGIN_L - MARGIN_R,
        SVG_H - MARGIN_T - MARGIN_B
    )
    .unwrap();
    // Axes box.
    writeln!(
        s,
        r#"  <rect x="{MARGIN_L}" y="{MARGIN_T}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        SVG_W - MARGIN_L - MARGIN_R,
        SVG_H - MARGIN_T - MARGIN_B
    )
    .unwrap();
    // Ticks and labels.
    for i in 0..=5 {
        let x = x0 + (x1 - x0) * i as f64 / 5.0;
        let xp = px(x);
        writeln!(
            s,
            r#"  <line x1="{xp:.2}" y1="{}" x2="{xp:.2}" y2="{}" stroke="black"/>"#,
            SVG_H - MARGIN_B,
            SVG_H - MARGIN_B + 6.0
        )
        .unwrap();
        writeln!(
            s,
            r#"  <text x="{xp:.2}" y="{}" font-size="14" text-anchor="middle">{}</text>"#,
            SVG_H - MARGIN_B + 24.0,
            tick_label(x)
        )
        .unwrap();
        let y = y0 + (y1 - y0) * i as f64 / 5.0;
        let yp = py(y);
        writeln!(
            s,
            r#"  <line x1="{}" y1="{yp:.2}" x2="{MARGIN_L}" y2="{yp:.2}" stroke="black"/>"#,
            MARGIN_L - 6.0
        )
        .unwrap();
        writeln!(
            s,
            r#"  <text x="{}" y="{:.2}" font-size="14" text-anchor="end">{}</text>"#,
            MARGIN_L - 10.0,
            yp + 5.0,
            tick_label(y)
        )
        .unwrap();
    }
    // Zero line when visible.
    if y0 < 0.0 && y1 > 0.0 {
        writeln!(
            s,
            r##"  <line x1="{MARGIN_L}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="#bbbbbb"/>"##,
            py(0.0),
            SVG_W - MARGIN_R
        )
        .unwrap();
    }
    // Pole markers.
    for p in &curve.poles {
        if p.lambda_j < x0 || p.lambda_j > x1 {
            continue;
        }
        let xp = px(p.lambda_j);
        writeln!(
            s,
            r##"  <line x1="{xp:.2}" y1="{MARGIN_T}" x2="{xp:.2}" y2="{}" stroke="#c02020" stroke-dasharray="6,4"/>"##,
            SVG_H - MARGIN_B
        )
        .unwrap();
    }
    writeln!(
        s,
        r##"  <path d="{}" fill="none" stroke="#1f4e9c" stroke-width="1.5" clip-path="url(#plot)"/>"##,
        d.trim_end()
    )
    .unwrap();
    writeln!(
        s,
        r#"  <text x="{}" y="30" font-size="18" text-anchor="middle">effective scattering length a_eff(lambda)</text>"#,
        0.5 * SVG_W
    )
    .unwrap();
    writeln!(
        s,
        r#"  <text x="{}" y="{}" font-size="16" text-anchor="middle">lambda</text>"#,
        0.5 * SVG_W,
        SVG_H - 20.0
    )
    .unwrap();
    writeln!(
        s,
        r#"  <text x="24" y="{}" font-size="16" text-anchor="middle" transform="rotate(-90 24 {})">a_eff</text>"#,
        0.5 * SVG_H,
        0.5 * SVG_H
    )
    .unwrap();
    writeln!(s, "</svg>").unwrap();
    s
}

/// Write [`curve_to_svg`] output to `path`.
pub fn write_svg(path: &Path, curve: &EffCurve) -> Result<()> {
    fs::write(path, curve_to_svg(curve)).map_err(|e| io_err(path, e))
}
