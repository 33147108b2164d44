//! Convergence reports: `iteration,relres` CSV plus a text summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::problem::SolveReport;

/// Scientific notation with six significant digits and a signed two-digit exponent,
/// e.g. `1.00000e+00`, `3.14159e-07`.
pub fn format_sci6(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.5e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let e: i32 = exp.parse().expect("integer exponent");
    let sign = if e < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", e.abs())
}

/// CSV text for a residual history; row `k` holds the residual after iteration `k`.
pub fn history_csv(history: &[f64]) -> String {
    let mut s = String::from("iteration,relres\n");
    for (k, r) in history.iter().enumerate() {
        let _ = writeln!(s, "{k},{}", format_sci6(*r));
    }
    s
}

/// Parse CSV written by [`history_csv`].
pub fn parse_history_csv(text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("iteration,relres") => {}
        other => return Err(Error::Parse(format!("unexpected CSV header {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(k, l)| {
            let (it, v) = l
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("row {}: expected two columns", k + 1)))?;
            if it.trim().parse::<usize>().ok() != Some(k) {
                return Err(Error::Parse(format!("row {}: iteration index out of sequence", k + 1)));
            }
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("row {}: bad residual `{v}`", k + 1)))
        })
        .collect()
}

/// Human-readable summary: outcome, timings, chosen α and the configuration echo.
pub fn summary_text(report: &SolveReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "method = {}", report.method.name());
    let _ = writeln!(s, "converged = {}", report.converged);
    let _ = writeln!(s, "iterations = {}", report.iterations);
    let _ = writeln!(s, "final_relres = {}", format_sci6(report.final_residual));
    let _ = writeln!(s, "n = {}", report.n);
    if let Some(req) = report.requested_n {
        let _ = writeln!(s, "n_requested = {req} (adjusted to {})", report.n);
    }
    let _ = writeln!(s, "omega_h = {:.6}", report.omega_h);
    if let Some(l) = report.adr_level {
        let _ = writeln!(s, "adr_level = {l}");
    }
    if let Some(a) = &report.alphas {
        for (l, v) in a.iter().enumerate().skip(1) {
            let _ = writeln!(s, "alpha.{} = {v}", l + 1);
        }
    }
    if let Some(loss) = report.tuned_loss {
        let _ = writeln!(s, "tuned_loss = {}", format_sci6(loss));
    }
    for (name, secs) in &report.timings {
        let _ = writeln!(s, "time.{name} = {secs:.6}");
    }
    let _ = writeln!(s, "time.setup_total = {:.6}", report.setup_seconds());
    let _ = writeln!(s, "\n[config]");
    s.push_str(&report.spec.to_config_string());
    s
}

/// Sidecar path: `out.csv` → `out.summary.txt`.
pub fn summary_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv.with_file_name(format!("{stem}.summary.txt"))
}

/// Write the CSV and its sidecar summary; returns the summary path.
pub fn emit_report(report: &SolveReport, csv: &Path) -> Result<PathBuf> {
    std::fs::write(csv, history_csv(&report.history))?;
    let side = summary_path(csv);
    std::fs::write(&side, summary_text(report))?;
    Ok(side)
}
