//! Report files. CSV and JSON outputs depend only on `(config, seed)`;
//! wall-clock time goes to a separate `timing.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use crate::error::Result;

use super::run::{AsymptoticTable, Report};

pub const CSV_HEADER: &str = "t,x,empirical,stderr,ci_lo,ci_hi,asymptote,ratio";
pub const ASYMPTOTIC_HEADER: &str = "t,x,asymptote,kernel_argument";
pub const TIMING_FILE: &str = "timing.json";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    /// `ratios.csv` plus `summary.json`.
    #[default]
    Csv,
    /// A single `report.json` with summary and rows.
    Json,
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn line(out: &mut String, fields: &[f64]) {
    let cells: Vec<String> = fields.iter().map(|&v| fmt_f64(v)).collect();
    out.push_str(&cells.join(","));
    out.push('\n');
}

pub fn ratio_csv(report: &Report) -> String {
    let mut out = String::new();
    writeln!(out, "{CSV_HEADER}").expect("string write");
    for r in &report.rows {
        let e = &r.empirical;
        line(&mut out, &[r.t, r.x, e.value, e.stderr, e.ci95.0, e.ci95.1, r.asymptote, r.ratio]);
    }
    out
}

pub fn asymptotic_csv(table: &AsymptoticTable) -> String {
    let mut out = String::new();
    writeln!(out, "{ASYMPTOTIC_HEADER}").expect("string write");
    for r in &table.rows {
        line(&mut out, &[r.t, r.x, r.asymptote, r.kernel_argument]);
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct Timing<'a> {
    name: &'a str,
    seconds: f64,
    threads: usize,
}

/// Writes the report into `dir` and returns the paths written.
pub fn write_report(
    report: &Report,
    dir: &Path,
    format: Format,
    csv_name: &str,
    summary_name: &str,
    runtime: Duration,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, body)?;
        written.push(p);
        Ok(())
    };
    match format {
        Format::Csv => {
            put(csv_name, ratio_csv(report))?;
            put(summary_name, to_json(&report.summary)?)?;
        }
        Format::Json => put(REPORT_FILE, to_json(report)?)?,
    }
    let timing = Timing {
        name: &report.summary.name,
        seconds: runtime.as_secs_f64(),
        threads: rayon::current_num_threads(),
    };
    put(TIMING_FILE, to_json(&timing)?)?;
    Ok(written)
}
