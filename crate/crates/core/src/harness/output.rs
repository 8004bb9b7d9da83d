//! CSV artifacts.
//!
//! Metric files carry `#`-prefixed `key=value` header lines followed by a
//! header row and one row per record step. Numbers use Rust's shortest
//! round-trip formatting (`1.0`, `0.25`, `3.2e-7`, `inf`); absent values are
//! empty cells. Column order is fixed:
//! `time, align_E, align_F, align_Fabs, w2_to_target, v_p, energy`, followed
//! by the envelope columns when they are requested.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use super::HarnessError;
use crate::dynamics::{Beta, Ensemble};
use crate::metrics::MetricRecord;

/// Envelope columns appended when `metrics.envelopes` is on.
pub const ENVELOPE_COLUMNS: [&str; 4] = ["env_theorem", "env_w2_stated", "env_w2_proof", "env_lyapunov"];

/// Float formatting shared by every CSV cell.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:?}")
    }
}

fn fmt_cell(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// `{model}_beta-{β}_trial-{k:03}.csv`
pub fn run_file_name(model: &str, beta: Beta, trial: usize) -> String {
    format!("{model}_beta-{beta}_trial-{trial:03}.csv")
}

/// `{model}_beta-{β}_bands.csv`
pub fn bands_file_name(model: &str, beta: Beta) -> String {
    format!("{model}_beta-{beta}_bands.csv")
}

/// `snapshots/{model}_beta-{β}_trial-{k:03}_t-{time}.csv`
pub fn snapshot_file_name(model: &str, beta: Beta, trial: usize, time: f64) -> String {
    format!("snapshots/{model}_beta-{beta}_trial-{trial:03}_t-{}.csv", fmt_f64(time))
}

fn header_block(out: &mut String, header: &[(String, String)]) {
    for (k, v) in header {
        let v = v.replace(['\n', '\r'], " ");
        let _ = writeln!(out, "# {k}={v}");
    }
}

/// Renders a metric CSV. `envelopes`, when present, has one row per record.
pub fn metrics_csv(header: &[(String, String)], records: &[MetricRecord], envelopes: Option<&[[Option<f64>; 4]]>) -> String {
    let mut out = String::new();
    header_block(&mut out, header);
    let mut cols: Vec<&str> = MetricRecord::COLUMNS.to_vec();
    if envelopes.is_some() {
        cols.extend(ENVELOPE_COLUMNS);
    }
    out.push_str(&cols.join(","));
    out.push('\n');
    for (i, r) in records.iter().enumerate() {
        let mut cells: Vec<String> = r.values().iter().map(|v| fmt_cell(*v)).collect();
        if let Some(env) = envelopes {
            cells.extend(env[i].iter().map(|v| fmt_cell(*v)));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Renders token coordinates `x0..x{d−1}`, one token per row.
pub fn snapshot_csv(header: &[(String, String)], ensemble: &Ensemble) -> String {
    let mut out = String::new();
    header_block(&mut out, header);
    let cols: Vec<String> = (0..ensemble.dim()).map(|j| format!("x{j}")).collect();
    out.push_str(&cols.join(","));
    out.push('\n');
    for x in ensemble.tokens() {
        let cells: Vec<String> = x.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Mean and nearest-rank quantiles of one metric at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Per-time bands for each metric column after `time`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandRow {
    pub time: f64,
    pub columns: [Option<Band>; 6],
}

/// `q`-quantile by nearest rank: the `⌈qN⌉`-th smallest value.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    sorted[rank - 1]
}

/// Per-time mean and `(lo, hi)` nearest-rank quantiles across trials.
///
/// A cell is absent when any trial lacks the value at that time.
pub fn quantile_bands(trials: &[Vec<MetricRecord>], lo: f64, hi: f64) -> Result<Vec<BandRow>, HarnessError> {
    if trials.len() < 2 {
        return Err(HarnessError::GridMismatch(format!("bands need at least 2 trials, got {}", trials.len())));
    }
    let grid: Vec<f64> = trials[0].iter().map(|r| r.time).collect();
    for (k, t) in trials.iter().enumerate().skip(1) {
        if t.len() != grid.len() || t.iter().zip(&grid).any(|(r, g)| r.time != *g) {
            return Err(HarnessError::GridMismatch(format!("trial {k} differs from trial 0")));
        }
    }
    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, &time)| {
            let columns = std::array::from_fn(|c| {
                let values: Option<Vec<f64>> = trials.iter().map(|t| t[i].values()[c + 1]).collect();
                values.map(|mut v| {
                    let mean = v.iter().sum::<f64>() / v.len() as f64;
                    v.sort_by(f64::total_cmp);
                    Band { mean, lo: nearest_rank(&v, lo), hi: nearest_rank(&v, hi) }
                })
            });
            BandRow { time, columns }
        })
        .collect();
    Ok(rows)
}

/// Renders bands as `time, {col}_mean, {col}_lo, {col}_hi, ...`.
pub fn bands_csv(header: &[(String, String)], rows: &[BandRow]) -> String {
    let mut out = String::new();
    header_block(&mut out, header);
    let mut cols = vec!["time".to_string()];
    for c in &MetricRecord::COLUMNS[1..] {
        cols.extend(["mean", "lo", "hi"].iter().map(|s| format!("{c}_{s}")));
    }
    out.push_str(&cols.join(","));
    out.push('\n');
    for r in rows {
        let mut cells = vec![fmt_f64(r.time)];
        for b in &r.columns {
            match b {
                Some(b) => cells.extend([b.mean, b.lo, b.hi].map(fmt_f64)),
                None => cells.extend([String::new(), String::new(), String::new()]),
            }
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Writes `contents` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    }
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(HarnessError::io(&tmp))?;
    f.write_all(contents.as_bytes()).map_err(HarnessError::io(&tmp))?;
    f.sync_all().map_err(HarnessError::io(&tmp))?;
    drop(f);
    fs::rename(&tmp, path).map_err(HarnessError::io(path))
}
