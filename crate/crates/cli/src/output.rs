//! Streaming CSV and JSON writers with a leading metadata record.
//!
//! CSV output starts with one `# ` comment line holding the metadata as
//! JSON, then a header and one line per row. JSON output is a single object
//! `{"metadata": .., "rows": [{column: value, ..}, ..]}`. Numbers are written
//! with 12 significant digits so that reruns diff cleanly.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

/// Output encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// One value of an output row.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
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

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// `x` rounded to 12 significant digits and printed in its shortest form.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        round12(x).to_string()
    }
}

fn round12(x: f64) -> f64 {
    format!("{x:.11e}").parse().expect("formatted float parses")
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => fmt_num(*v),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Num(v) if v.is_finite() => json!(round12(*v)),
            Cell::Num(v) => json!(fmt_num(*v)),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

/// Metadata record written before any data.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub flags: Value,
    /// Seconds since the Unix epoch; the only field that differs between
    /// reruns with identical inputs and flags.
    pub timestamp: u64,
}

impl Metadata {
    pub fn new(command: &'static str, seed: u64, flags: Value) -> Self {
        Self {
            tool: "pairwise-ot",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            flags,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

/// Row writer for one table.
pub struct Output {
    sink: Box<dyn Write>,
    format: Format,
    columns: Vec<String>,
    rows: usize,
}

impl Output {
    /// Opens `path` (stdout when `None`) and writes the metadata record and,
    /// for CSV, the header.
    pub fn begin(path: Option<&Path>, format: Format, meta: &Metadata, columns: &[&str]) -> Result<Self> {
        let sink: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("cannot create output file {}", p.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        let mut out = Self {
            sink,
            format,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: 0,
        };
        let meta = serde_json::to_string(meta)?;
        match format {
            Format::Csv => {
                writeln!(out.sink, "# {meta}")?;
                writeln!(out.sink, "{}", out.columns.join(","))?;
            }
            Format::Json => write!(out.sink, "{{\"metadata\":{meta},\"rows\":[")?,
        }
        Ok(out)
    }

    /// Writes one row; `cells` must match the columns.
    pub fn row(&mut self, cells: &[Cell]) -> Result<()> {
        debug_assert_eq!(cells.len(), self.columns.len());
        match self.format {
            Format::Csv => {
                let line: Vec<String> = cells.iter().map(Cell::csv).collect();
                writeln!(self.sink, "{}", line.join(","))?;
            }
            Format::Json => {
                let obj: serde_json::Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(cells)
                    .map(|(c, v)| (c.clone(), v.json()))
                    .collect();
                if self.rows > 0 {
                    write!(self.sink, ",")?;
                }
                write!(self.sink, "{}", Value::Object(obj))?;
            }
        }
        self.rows += 1;
        Ok(())
    }

    /// Closes the JSON document and flushes.
    pub fn finish(mut self) -> Result<()> {
        if self.format == Format::Json {
            writeln!(self.sink, "]}}")?;
        }
        self.sink.flush()?;
        Ok(())
    }
}

/// Writes a single JSON document `{"metadata": .., <body fields>}`.
pub fn write_document(path: Option<&Path>, meta: &Metadata, body: Value) -> Result<()> {
    let mut doc = serde_json::Map::new();
    doc.insert("metadata".into(), serde_json::to_value(meta)?);
    if let Value::Object(fields) = body {
        doc.extend(fields);
    }
    let text = serde_json::to_string_pretty(&Value::Object(doc))?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("cannot write {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}
