//! Experiment reports: JSON document, per-realization CSV records and TSV plot data.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::manifest::{resolved_entries, RunManifest};

pub const FORMAT_VERSION: u32 = 1;

/// One entry of a record table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:?}"),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Float(v) => Some(*v),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// A plot-ready curve with the parameters fitted to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub name: String,
    pub sweep: String,
    pub box_side: Option<f64>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub params: BTreeMap<String, f64>,
}

impl Curve {
    pub fn new(sweep: &str, box_side: Option<f64>, columns: &[&str]) -> Self {
        Self {
            name: sweep.to_string(),
            sweep: sweep.to_string(),
            box_side,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            params: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionRecord {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEcho {
    pub path: Option<String>,
    pub tool_version: String,
    pub master_seed: u64,
    pub output_dir: Option<String>,
    pub warnings: Vec<String>,
    pub resolved: BTreeMap<String, String>,
}

impl ManifestEcho {
    pub fn of(manifest: &RunManifest) -> Self {
        Self {
            path: manifest.path.clone(),
            tool_version: manifest.tool_version.clone(),
            master_seed: manifest.config.run.master_seed,
            output_dir: manifest.output_dir.clone(),
            warnings: manifest.warnings.clone(),
            resolved: resolved_entries(&manifest.config)
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format_version: u32,
    pub driver: String,
    pub manifest: ManifestEcho,
    pub records: Table,
    pub flagged: Vec<String>,
    pub summary: BTreeMap<String, Value>,
    pub assertions: Vec<AssertionRecord>,
    pub curves: Vec<Curve>,
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    pub fn new(driver: &str, manifest: &RunManifest, columns: &[&str]) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            driver: driver.to_string(),
            manifest: ManifestEcho::of(manifest),
            records: Table::new(columns),
            flagged: Vec::new(),
            summary: BTreeMap::new(),
            assertions: Vec::new(),
            curves: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn record(&mut self, row: Vec<Cell>) {
        self.records.push(row);
    }

    pub fn summarize(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.summary.insert(key.to_string(), v);
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.assertions.push(AssertionRecord {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn flag(&mut self, message: impl Into<String>) {
        self.flagged.push(message.into());
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failed_assertions(&self) -> Vec<&AssertionRecord> {
        self.assertions.iter().filter(|a| !a.passed).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-realization records with `#` header comments; no timings, so reruns compare
    /// byte for byte.
    pub fn records_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# driver: {}", self.driver);
        let _ = writeln!(out, "# format_version: {}", self.format_version);
        let _ = writeln!(out, "# master_seed: {}", self.manifest.master_seed);
        let _ = writeln!(out, "{}", self.records.columns.join(","));
        for row in &self.records.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    /// Writes `<driver>.json`, `<driver>_records.csv` and the plot-data TSV files.
    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let json = dir.join(format!("{}.json", self.driver));
        std::fs::write(&json, self.to_json())?;
        written.push(json);
        let csv = dir.join(format!("{}_records.csv", self.driver));
        std::fs::write(&csv, self.records_csv())?;
        written.push(csv);
        written.extend(emit_plotdata(self, dir)?);
        Ok(written)
    }
}

fn side_tag(side: Option<f64>) -> String {
    match side {
        Some(l) => format!("{l}"),
        None => "all".to_string(),
    }
}

pub fn plotdata_name(driver: &str, curve: &Curve) -> String {
    format!("{}_{}_{}.tsv", driver, side_tag(curve.box_side), curve.sweep)
}

pub fn curve_tsv(driver: &str, curve: &Curve) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# driver: {driver}");
    let _ = writeln!(out, "# curve: {}", curve.name);
    let _ = writeln!(out, "# L: {}", side_tag(curve.box_side));
    let _ = writeln!(out, "# axes: {}", curve.columns.join(" vs "));
    for (k, v) in &curve.params {
        let _ = writeln!(out, "# fit {k} = {v:?}");
    }
    let _ = writeln!(out, "{}", curve.columns.join("\t"));
    for row in &curve.rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", line.join("\t"));
    }
    out
}

/// One TSV per curve, named `<driver>_<L>_<sweep>.tsv`.
pub fn emit_plotdata(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for curve in &report.curves {
        let path = dir.join(plotdata_name(&report.driver, curve));
        std::fs::write(&path, curve_tsv(&report.driver, curve))
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ExperimentConfig;

    fn report() -> ExperimentReport {
        let m = RunManifest::new(ExperimentConfig::default());
        let mut r = ExperimentReport::new("wegner", &m, &["realization", "count", "note"]);
        r.record(vec![0usize.into(), 0.1.into(), "a,b".into()]);
        r
    }

    #[test]
    fn csv_quotes_and_headers() {
        let text = report().records_csv();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# driver: wegner");
        assert_eq!(lines[3], "realization,count,note");
        assert_eq!(lines[4], "0,0.1,\"a,b\"");
    }

    #[test]
    fn empty_sweep_gives_header_only_file() {
        let mut r = report();
        let mut c = Curve::new("delta", Some(1.0), &["delta", "mean_count", "ci_low", "ci_high"]);
        c.params.insert("slope".into(), 0.5);
        r.curves.push(c);
        let dir = tempfile::tempdir().unwrap();
        let files = emit_plotdata(&r, dir.path()).unwrap();
        assert_eq!(files[0].file_name().unwrap(), "wegner_1_delta.tsv");
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert!(text.lines().last().unwrap().starts_with("delta\tmean_count"));
        assert!(text.contains("# fit slope = 0.5"));
    }

    #[test]
    fn json_has_stable_key_order() {
        let mut r = report();
        r.summarize("zeta", 1.0);
        r.summarize("alpha", 2.0);
        let j = r.to_json();
        assert!(j.find("\"alpha\"").unwrap() < j.find("\"zeta\"").unwrap());
        assert!(j.find("\"format_version\"").unwrap() < j.find("\"driver\"").unwrap());
        let back: ExperimentReport = serde_json::from_str(&j).unwrap();
        assert_eq!(back.records, r.records);
    }
}
