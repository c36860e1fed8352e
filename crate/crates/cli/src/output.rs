//! Result tables and their CSV / JSON encodings.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::config::Format;
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    List(Vec<Cell>),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
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

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell::Float(v.unwrap_or(f64::NAN))
    }
}

impl From<Option<usize>> for Cell {
    fn from(v: Option<usize>) -> Self {
        match v {
            Some(v) => Cell::Int(v as i64),
            None => Cell::Text("none".into()),
        }
    }
}

impl From<Vec<f64>> for Cell {
    fn from(v: Vec<f64>) -> Self {
        Cell::List(v.into_iter().map(Cell::Float).collect())
    }
}

/// Floats carry 17 significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::List(items) => items.iter().map(Cell::csv).collect::<Vec<_>>().join(" "),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(v) => Value::String(format_float(*v)),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::List(items) => Value::Array(items.iter().map(Cell::json).collect()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
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

    fn csv_body(&self, out: &mut String) {
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
    }
}

/// Outcome of one experiment: scalar summary, main table, optional curve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultSet {
    pub summary: Vec<(String, Cell)>,
    pub table: Table,
    /// Plot-ready data over an ordered abscissa (first column).
    pub curve: Option<Table>,
}

impl ResultSet {
    pub fn put(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.push((key.to_string(), value.into()));
    }
}

/// Metadata embedded in every output file.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub experiment: String,
    pub config_sha256: String,
    pub library_version: String,
    pub seed: u64,
}

impl Provenance {
    fn header(&self, out: &mut String) {
        let _ = writeln!(out, "# experiment: {}", self.experiment);
        let _ = writeln!(out, "# config_sha256: {}", self.config_sha256);
        let _ = writeln!(out, "# library_version: {}", self.library_version);
        let _ = writeln!(out, "# seed: {}", self.seed);
    }

    fn json(&self) -> Value {
        json!({
            "experiment": self.experiment,
            "config_sha256": self.config_sha256,
            "library_version": self.library_version,
            "seed": self.seed,
        })
    }
}

pub fn encode_csv(results: &ResultSet, prov: &Provenance) -> String {
    let mut out = String::new();
    prov.header(&mut out);
    for (k, v) in &results.summary {
        let _ = writeln!(out, "# {k}: {}", v.csv());
    }
    results.table.csv_body(&mut out);
    out
}

pub fn encode_json(results: &ResultSet, prov: &Provenance) -> String {
    let mut body = Map::new();
    for (k, v) in &results.summary {
        body.insert(k.clone(), v.json());
    }
    body.insert("columns".into(), json!(results.table.columns));
    body.insert(
        "rows".into(),
        Value::Array(
            results
                .table
                .rows
                .iter()
                .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
                .collect(),
        ),
    );
    let doc = json!({ "manifest": prov.json(), "results": Value::Object(body) });
    let mut s = serde_json::to_string_pretty(&doc).expect("json encodes");
    s.push('\n');
    s
}

/// Plot-ready CSV with a metadata header; header-only when empty.
pub fn emit_curve(curve: &Table, prov: &Provenance) -> String {
    let mut out = String::new();
    prov.header(&mut out);
    curve.csv_body(&mut out);
    out
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

/// Writes the result file and, when present, the curve file. Returns the
/// written file names.
pub fn write_results(
    dir: &Path,
    format: Format,
    results: &ResultSet,
    prov: &Provenance,
) -> Result<Vec<String>, CliError> {
    let name = format!("{}.{}", prov.experiment, format.extension());
    let body = match format {
        Format::Csv => encode_csv(results, prov),
        Format::Json => encode_json(results, prov),
    };
    write_file(dir, &name, &body)?;
    let mut names = vec![name];
    if let Some(curve) = &results.curve {
        let curve_name = format!("{}_curve.csv", prov.experiment);
        write_file(dir, &curve_name, &emit_curve(curve, prov))?;
        names.push(curve_name);
    }
    Ok(names)
}
