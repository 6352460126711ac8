//! Rendering of command results. Every document starts with an echo of the
//! full configuration so that a file alone is enough to reproduce it.

use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// One cell of a table. Floats print in Rust's shortest round-trip decimal
/// form, which never uses exponents and keeps every significant digit.
#[derive(Clone, Debug)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => json!(v),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
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
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v.into())
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

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map(Into::into).unwrap_or(Cell::Empty)
    }
}

#[derive(Clone, Debug)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let mut m = Map::new();
                    for (c, v) in self.columns.iter().zip(r) {
                        m.insert(c.to_string(), v.to_json());
                    }
                    Value::Object(m)
                })
                .collect(),
        )
    }
}

/// What a command produced: a table (CSV-native) or a JSON document.
pub enum Report {
    Table(Table),
    Json(Value),
}

/// Ordered `(flag, value)` pairs echoed at the top of every output.
pub type Config = Vec<(&'static str, String)>;

pub fn render(report: &Report, config: &Config, format: Format) -> Result<Vec<u8>, RenderError> {
    match format {
        Format::Csv => render_csv(report, config),
        Format::Json => {
            let mut cfg = Map::new();
            for (k, v) in config {
                cfg.insert(k.to_string(), json!(v));
            }
            let result = match report {
                Report::Table(t) => t.to_json(),
                Report::Json(v) => v.clone(),
            };
            let doc = json!({ "config": Value::Object(cfg), "result": result });
            let mut out = serde_json::to_vec_pretty(&doc)?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

fn render_csv(report: &Report, config: &Config) -> Result<Vec<u8>, RenderError> {
    let mut out = Vec::new();
    for (k, v) in config {
        writeln!(out, "# {k}: {v}")?;
    }
    match report {
        Report::Table(t) => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&t.columns)?;
            for r in &t.rows {
                w.write_record(r.iter().map(Cell::render))?;
            }
            w.flush()?;
        }
        // nested documents flatten to dotted keys
        Report::Json(v) => {
            let mut pairs = Vec::new();
            flatten("", v, &mut pairs);
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["key", "value"])?;
            for (k, v) in pairs {
                w.write_record([k, v])?;
            }
            w.flush()?;
        }
    }
    Ok(out)
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                flatten(&join(k), v, out);
            }
        }
        Value::Array(a) => {
            for (i, v) in a.iter().enumerate() {
                flatten(&join(&i.to_string()), v, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

pub fn emit(bytes: &[u8], path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes),
        None => std::io::stdout().write_all(bytes),
    }
}

/// Failure while rendering or writing; always an internal error.
#[derive(Debug)]
pub struct RenderError(pub String);

impl std::fmt::Display for RenderError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<std::io::Error> for RenderError {
    fn from(e: std::io::Error) -> Self {
        Self(e.to_string())
    }
}

impl From<csv::Error> for RenderError {
    fn from(e: csv::Error) -> Self {
        Self(e.to_string())
    }
}

impl From<serde_json::Error> for RenderError {
    fn from(e: serde_json::Error) -> Self {
        Self(e.to_string())
    }
}
