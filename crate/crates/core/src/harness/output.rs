use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{QlbmError, Result};
use crate::harness::experiment::{ExperimentResult, SweepRow};

pub const CSV_FILE: &str = "density.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const PLOT_FILE: &str = "plot.svg";

fn columns(result: &ExperimentResult) -> Vec<(&'static str, &[f64])> {
    [
        ("rho_quantum", result.quantum.as_deref()),
        ("rho_classical", result.classical.as_deref()),
        ("rho_analytic", result.analytic.as_deref()),
    ]
    .into_iter()
    .filter_map(|(name, col)| col.map(|c| (name, c)))
    .collect()
}

/// `x,rho_quantum,rho_classical,rho_analytic` (only the columns the run
/// produced), one row per cell, shortest round-trip float formatting.
pub fn render_csv(result: &ExperimentResult) -> String {
    let cols = columns(result);
    let mut s = String::from("x");
    for (name, _) in &cols {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for k in 0..result.config.cells() {
        let _ = write!(s, "{k}");
        for (_, col) in &cols {
            let _ = write!(s, ",{}", col[k]);
        }
        s.push('\n');
    }
    s
}

pub fn render_manifest(result: &ExperimentResult) -> String {
    let mut s = String::from("# qlbm run manifest\n");
    s.push_str(&result.config.to_kv());
    let _ = writeln!(s, "# step = {}", result.step);
    let _ = writeln!(s, "# initial_checksum = {}", result.initial_checksum);
    for (name, seed) in &result.substreams {
        let _ = writeln!(s, "# substream {name} = {seed}");
    }
    for (label, r) in &result.reports {
        let _ = writeln!(s, "# metric {label} l2={:e} linf={:e} l2_relative={:e}", r.l2, r.linf, r.l2_relative);
    }
    s
}

pub fn render_sweep_csv(param: &str, rows: &[SweepRow]) -> String {
    let mut s = format!("{param},l2,linf,l2_relative\n");
    for row in rows {
        let _ = writeln!(s, "{},{},{},{}", row.value, row.report.l2, row.report.linf, row.report.l2_relative);
    }
    s
}

/// Line plot of every density column as a standalone SVG.
pub fn render_svg(result: &ExperimentResult) -> String {
    let (w, h, pad) = (640.0, 400.0, 48.0);
    let cols = columns(result);
    let n = result.config.cells();
    let (mut lo, mut hi) = cols
        .iter()
        .flat_map(|(_, c)| c.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let sx = |k: usize| pad + (w - 2.0 * pad) * k as f64 / (n.max(2) - 1) as f64;
    let sy = |v: f64| h - pad - (h - 2.0 * pad) * (v - lo) / (hi - lo);
    let colors = ["#1f77b4", "#d62728", "#2ca02c"];

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{pad} {pad} V{} H{}" fill="none" stroke="black"/>"#,
        h - pad,
        w - pad
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12">x</text>"#, w / 2.0, h - 12.0);
    let _ = writeln!(s, r#"<text x="4" y="{}" font-size="12">{hi:.4}</text>"#, pad);
    let _ = writeln!(s, r#"<text x="4" y="{}" font-size="12">{lo:.4}</text>"#, h - pad);
    for (i, (name, col)) in cols.iter().enumerate() {
        let pts: Vec<String> = col.iter().enumerate().map(|(k, &v)| format!("{:.2},{:.2}", sx(k), sy(v))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            pts.join(" "),
            colors[i % colors.len()]
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" fill="{}">{name}</text>"#,
            w - pad - 110.0,
            pad + 16.0 * i as f64,
            colors[i % colors.len()]
        );
    }
    s.push_str("</svg>\n");
    s
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| QlbmError::io(path, e))
}

/// Writes the CSV, the manifest and (if enabled) the plot into
/// `result.config.out`. Returns the written paths.
pub fn emit_outputs(result: &ExperimentResult) -> Result<Vec<PathBuf>> {
    let dir = &result.config.out;
    fs::create_dir_all(dir).map_err(|e| QlbmError::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, contents: String| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, &contents)?;
        written.push(path);
        Ok(())
    };
    put(CSV_FILE, render_csv(result))?;
    put(MANIFEST_FILE, render_manifest(result))?;
    if result.config.plot {
        put(PLOT_FILE, render_svg(result))?;
    }
    Ok(written)
}

pub fn emit_sweep(dir: &Path, param: &str, rows: &[SweepRow]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| QlbmError::io(dir, e))?;
    let path = dir.join("sweep.csv");
    write_file(&path, &render_sweep_csv(param, rows))?;
    Ok(path)
}
