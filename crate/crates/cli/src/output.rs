use std::fs;
use std::io::{self, BufWriter};
use std::path::Path;

use gkdv_core::diagnostics::{drift_series, ConvergenceTable};
use gkdv_core::sav::{fmt17, InvariantRecord};
use gkdv_core::snapshot::Snapshot;
use gkdv_core::RunLog;
use serde::Serialize;

pub fn invariants_csv(log: &RunLog, breather: bool) -> String {
    let mut out = String::new();
    out.push_str(header(breather));
    out.push('\n');
    for r in &log.records {
        out.push_str(&r.csv_row(breather));
        out.push('\n');
    }
    out
}

fn header(breather: bool) -> &'static str {
    if breather {
        InvariantRecord::CSV_HEADER_BREATHER
    } else {
        InvariantRecord::CSV_HEADER
    }
}

/// Long-format merge of several runs: a leading `scheme` column, then the
/// invariant columns.
pub fn comparison_csv<'a>(runs: impl IntoIterator<Item = (&'a str, &'a RunLog)>, breather: bool) -> String {
    let mut out = format!("scheme,{}\n", header(breather));
    for (name, log) in runs {
        for r in &log.records {
            out.push_str(name);
            out.push(',');
            out.push_str(&r.csv_row(breather));
            out.push('\n');
        }
    }
    out
}

/// `tau` followed by an error and a rate column per table. All tables must
/// share the step list.
pub fn rates_csv(tables: &[ConvergenceTable]) -> String {
    let mut out = String::from("tau");
    for t in tables {
        out.push_str(&format!(",{0}_error,{0}_rate", t.label));
    }
    out.push('\n');
    let rows = tables.first().map_or(0, |t| t.rows.len());
    let cell = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), fmt17);
    for k in 0..rows {
        out.push_str(&fmt17(tables[0].rows[k].tau));
        for t in tables {
            let row = &t.rows[k];
            out.push(',');
            out.push_str(&cell(row.error));
            out.push(',');
            out.push_str(&cell(row.rate));
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct Drifts {
    pub momentum: f64,
    pub mass: f64,
    /// modified energy for SAV schemes
    pub energy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BreatherDeviation {
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub scheme: String,
    pub preset: String,
    pub scenario: String,
    pub tau: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    /// `ok`, `blowup` or `failed`
    pub status: &'static str,
    pub message: Option<String>,
    pub final_time: f64,
    pub steps: usize,
    pub final_error: Option<f64>,
    pub max_drifts: Option<Drifts>,
    pub fp_iterations_total: usize,
    pub max_fp_residual: f64,
    pub c0_adjustments: usize,
    pub blowup_time: Option<f64>,
    pub breather_deviation: Option<BreatherDeviation>,
}

pub fn drifts(log: &RunLog) -> Option<Drifts> {
    drift_series(log).ok().map(|d| Drifts {
        momentum: d.max_momentum(),
        mass: d.max_mass(),
        energy: d.max_energy(),
    })
}

pub fn write_text(path: &Path, text: &str) -> io::Result<()> {
    fs::write(path, text)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> io::Result<()> {
    snap.write_to(BufWriter::new(fs::File::create(path)?))
}
