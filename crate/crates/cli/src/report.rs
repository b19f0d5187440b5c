//! Run reports: canonical JSON, metric CSV, per-row CSV and optional SVG.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::plot::{self, Plot};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Error,
}

impl Verdict {
    pub fn exit_code(self) -> u8 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail | Verdict::Error => 1,
        }
    }

    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub tool_version: String,
    pub homology_convention: u32,
    pub seed: Option<u64>,
    pub rng: String,
    /// Seconds since the Unix epoch; only present when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub kind: String,
    pub verdict: Verdict,
    pub message: Option<String>,
    pub metrics: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
    pub details: serde_json::Value,
    pub provenance: Provenance,
}

impl RunReport {
    /// Keys sorted at every level, two-space indent, trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("reports always serialize");
        let mut s = serde_json::to_string_pretty(&value).expect("values always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
        serde_json::from_str(&text).map_err(|source| CliError::Report { path: path.to_path_buf(), source })
    }
}

/// Rows with a fixed column order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

/// Shortest round-trip text of a float.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Everything a run produces before it is written out.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub rows: Option<Table>,
    pub plots: Vec<(String, Plot)>,
    /// Additional text files as `(file name, contents)`.
    pub extras: Vec<(String, String)>,
}

fn write(path: PathBuf, text: &str) -> CliResult<PathBuf> {
    std::fs::write(&path, text).map_err(|source| CliError::Write { path: path.clone(), source })?;
    Ok(path)
}

/// Writes `<kind>.json`, `<kind>.metrics.csv`, `<kind>.rows.csv` and, when
/// enabled, one SVG per plot. Returns the paths written.
pub fn emit_report(out: &RunOutput, dir: &Path, plots: bool) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })?;
    let kind = &out.report.kind;
    let mut written = vec![write(dir.join(format!("{kind}.json")), &out.report.to_canonical_json())?];
    let mut metrics = Table::new(&["metric", "value"]);
    for (k, v) in &out.report.metrics {
        metrics.push(vec![k.clone(), num(*v)]);
    }
    written.push(write(dir.join(format!("{kind}.metrics.csv")), &metrics.to_csv())?);
    if let Some(rows) = &out.rows {
        written.push(write(dir.join(format!("{kind}.rows.csv")), &rows.to_csv())?);
    }
    for (name, text) in &out.extras {
        written.push(write(dir.join(name), text)?);
    }
    if plots {
        for (name, p) in &out.plots {
            let path = dir.join(format!("{kind}.{name}.svg"));
            write(path.clone(), &plot::render_svg(p)?)?;
            written.push(path);
        }
    }
    Ok(written)
}
