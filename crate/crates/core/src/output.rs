//! CSV traces, convergence tables and the benchmark summary.
//!
//! Traces keep full precision (shortest round-trip `f64` formatting); summary
//! values are rounded to six significant digits. Missing values are empty
//! fields. Output never depends on locale.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::bench::{AlgorithmSummary, CurvePoint, SuiteSummary};
use crate::error::{Error, Result};
use crate::optimizer::OptimizationResult;

pub const TRACE_HEADER: [&str; 8] = ["t", "mode", "status", "x", "mean", "std", "best_so_far", "eta"];
pub const CURVE_HEADER: [&str; 3] = ["t", "mean_best", "se"];

/// Rounds to six significant digits and prints the shortest representation.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.5e}").parse().expect("formatted float parses");
    rounded.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn coords(x: &[f64]) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

pub fn write_trace<W: Write>(out: W, result: &OptimizationResult) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in &result.trace {
        w.write_record([
            r.t.to_string(),
            r.mode.as_str().to_owned(),
            r.status.as_str().to_owned(),
            coords(r.candidate.coords()),
            opt(r.mean),
            opt(r.std),
            r.best_so_far.to_string(),
            r.eta.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<trace>", e))?;
    Ok(())
}

pub fn write_curve<W: Write>(out: W, curve: &[CurvePoint]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CURVE_HEADER)?;
    for p in curve {
        w.write_record([p.t.to_string(), p.mean.to_string(), opt(p.se)])?;
    }
    w.flush().map_err(|e| Error::io("<curve>", e))?;
    Ok(())
}

/// TOML-compatible number at six significant digits.
fn toml_num(v: f64) -> String {
    if v.is_nan() {
        "nan".to_owned()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_owned()
    } else {
        sig6(v)
    }
}

fn toml_opt(v: Option<f64>) -> String {
    v.map(toml_num).unwrap_or_else(|| "nan".to_owned())
}

/// One TOML `[[algorithm]]` record per algorithm, in suite order.
pub fn summary_text(summary: &SuiteSummary) -> String {
    let mut s = String::new();
    s.push_str("# benchmark summary\n");
    s.push_str(&format!("seed = {}\n", summary.base_seed));
    s.push_str(&format!("n_macro = {}\n", summary.n_macro));
    s.push_str(&format!("trials = {}\n", summary.trials));
    s.push_str(&format!("last_window = {}\n", summary.last_window.size));
    s.push_str(&format!("last_window_metric = \"{}\"\n", summary.last_window.metric.as_str()));
    for a in &summary.algorithms {
        s.push_str(&record(a));
    }
    s
}

fn record(a: &AlgorithmSummary) -> String {
    // Undefined statistics (single macro) are written as TOML nan.
    format!(
        "\n[[algorithm]]\nname = \"{}\"\nn_macro = {}\nfinal_best_mean = {}\nfinal_best_std = {}\n\
         avg_last_mean = {}\navg_last_std = {}\nwall_time_mean_s = {}\nfailures = {}\n",
        a.variant.name(),
        a.n_macro,
        toml_num(a.final_best_mean),
        toml_opt(a.final_best_std),
        toml_num(a.avg_last_mean),
        toml_opt(a.avg_last_std),
        toml_num(a.mean_wall_time),
        a.failures.len(),
    )
}

/// Human-readable table in the same column order as the summary records.
pub fn summary_table(summary: &SuiteSummary) -> String {
    let mut s = format!(
        "{:<14} {:>12} {:>12} {:>24} {:>12}\n",
        "Algorithm", "FinalBest", "FinalStd", "AvgLast (mean +- std)", "Time (s)"
    );
    let std_or_dash = |v: Option<f64>| v.map(sig6).unwrap_or_else(|| "-".into());
    for a in &summary.algorithms {
        let last = format!("{} +- {}", sig6(a.avg_last_mean), std_or_dash(a.avg_last_std));
        s.push_str(&format!(
            "{:<14} {:>12} {:>12} {:>24} {:>12}\n",
            a.variant.name(),
            sig6(a.final_best_mean),
            std_or_dash(a.final_best_std),
            last,
            sig6(a.mean_wall_time),
        ));
    }
    s
}

/// Creates `dir` (and parents) if needed.
pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `summary.toml` and one `convergence_<algo>.csv` per algorithm.
pub fn write_suite(dir: &Path, summary: &SuiteSummary) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let path = dir.join("summary.toml");
    write_file(&path, summary_text(summary).as_bytes())?;
    written.push(path);
    for a in &summary.algorithms {
        let path = dir.join(format!("convergence_{}.csv", a.variant.slug()));
        let mut buf = Vec::new();
        write_curve(&mut buf, &a.curve)?;
        write_file(&path, &buf)?;
        written.push(path);
    }
    Ok(written)
}
