//! Result tables and their CSV / JSON encodings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum ColumnData {
    Float(Vec<f64>),
    Int(Vec<i64>),
    Text(Vec<String>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Float(v) => v.len(),
            ColumnData::Int(v) => v.len(),
            ColumnData::Text(v) => v.len(),
        }
    }

    fn cell(&self, i: usize) -> String {
        match self {
            ColumnData::Float(v) => format_float(v[i]),
            ColumnData::Int(v) => v[i].to_string(),
            ColumnData::Text(v) => quote(&v[i]),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            ColumnData::Float(v) => Value::Array(v.iter().map(|x| float_json(*x)).collect()),
            ColumnData::Int(v) => json!(v),
            ColumnData::Text(v) => json!(v),
        }
    }
}

/// Named columns of equal length plus string metadata.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<(String, ColumnData)>,
    pub metadata: BTreeMap<String, String>,
}

impl ResultTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn float(mut self, name: &str, data: Vec<f64>) -> Self {
        self.columns.push((name.into(), ColumnData::Float(data)));
        self
    }

    pub fn int(mut self, name: &str, data: Vec<i64>) -> Self {
        self.columns.push((name.into(), ColumnData::Int(data)));
        self
    }

    pub fn text(mut self, name: &str, data: Vec<String>) -> Self {
        self.columns.push((name.into(), ColumnData::Text(data)));
        self
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, c)| c.len())
    }

    fn check(&self) {
        let n = self.rows();
        for (name, c) in &self.columns {
            assert_eq!(c.len(), n, "column `{name}` has {} rows, expected {n}", c.len());
        }
    }

    pub fn to_csv(&self) -> String {
        self.check();
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let header: Vec<String> = self.columns.iter().map(|(n, _)| quote(n)).collect();
        let _ = writeln!(out, "{}", header.join(","));
        for i in 0..self.rows() {
            let row: Vec<String> = self.columns.iter().map(|(_, c)| c.cell(i)).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn to_json(&self) -> String {
        self.check();
        let columns: serde_json::Map<String, Value> = self.columns.iter().map(|(n, c)| (n.clone(), c.to_json())).collect();
        let order: Vec<&str> = self.columns.iter().map(|(n, _)| n.as_str()).collect();
        let doc = json!({ "metadata": self.metadata, "column_order": order, "columns": columns });
        serde_json::to_string_pretty(&doc).expect("table serializes") + "\n"
    }
}

/// 17 significant digits in scientific notation; parses back to the same bits.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn float_json(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(format_float(x))
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// SHA-256 of the normalized JSON form of the configuration, output section excluded.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut value = serde_json::to_value(cfg).expect("config serializes");
    // Where and how results are written does not change them.
    value.as_object_mut().expect("config is a table").remove("output");
    let canonical = value.to_string();
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Metadata present in every emitted file.
pub fn standard_metadata(cfg: &ExperimentConfig, task: &str, profile: &str) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("tool".into(), format!("qresponse {}", env!("CARGO_PKG_VERSION")));
    m.insert("task".into(), task.into());
    m.insert("config_sha256".into(), config_hash(cfg));
    m.insert("tolerance_profile".into(), profile.into());
    m.insert("fourier_convention".into(), "X(t) = (1/2pi) sum_l w_l exp(-i w_l t); chi(w) = int dt exp(+i w t) chi(t)".into());
    m.insert("response_convention".into(), "delayed response = i theta(t) Delta_rho(t); theta(0) = 1/2".into());
    m.insert("metric".into(), "mostly-plus (-,+,+,+)".into());
    m.insert("units".into(), "hbar = k_B = 1".into());
    m
}

/// Serializes writes so one run never interleaves files.
pub struct Emitter {
    dir: PathBuf,
    format: Format,
}

impl Emitter {
    pub fn new(dir: &Path, format: Format) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), format })
    }

    pub fn write(&mut self, stem: &str, table: &ResultTable) -> Result<PathBuf, CliError> {
        let path = self.dir.join(format!("{stem}.{}", self.format.extension()));
        let body = match self.format {
            Format::Csv => table.to_csv(),
            Format::Json => table.to_json(),
        };
        std::fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
