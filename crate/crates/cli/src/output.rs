//! Tables and their CSV / JSON serialization.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::{Format, Resolved};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
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

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

/// Plain decimal in the comfortable range, scientific otherwise.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl Cell {
    fn to_text(&self) -> String {
        match self {
            Cell::Num(x) => format_float(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(_) => Value::Null,
            Cell::Int(n) => json!(n),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// One output file. An empty `suffix` names the file after the experiment.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub suffix: String,
    pub table: Table,
}

impl Artifact {
    pub fn main(table: Table) -> Self {
        Self { suffix: String::new(), table }
    }

    pub fn named(suffix: impl Into<String>, table: Table) -> Self {
        Self { suffix: suffix.into(), table }
    }

    pub fn file_name(&self, experiment: &str, format: Format) -> String {
        let ext = match format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        if self.suffix.is_empty() {
            format!("{experiment}.{ext}")
        } else {
            format!("{experiment}-{}.{ext}", self.suffix)
        }
    }
}

pub fn render_csv(experiment: &str, config: &Value, table: &Table) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    writeln!(buf, "# pathread {experiment}")?;
    writeln!(buf, "# config: {config}")?;
    {
        let mut w = pathread_core::io::csv_writer(&mut buf);
        w.write_record(&table.columns).map_err(pathread_core::Error::from)?;
        for row in &table.rows {
            w.write_record(row.iter().map(Cell::to_text)).map_err(pathread_core::Error::from)?;
        }
        w.flush()?;
    }
    Ok(buf)
}

pub fn render_json(experiment: &str, config: &Value, table: &Table) -> Result<Vec<u8>, CliError> {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| Value::Array(r.iter().map(Cell::to_json).collect()))
        .collect();
    let doc = json!({
        "experiment": experiment,
        "config": config,
        "data": { "columns": table.columns, "rows": rows },
    });
    let mut buf = serde_json::to_vec_pretty(&doc).map_err(pathread_core::Error::from)?;
    buf.push(b'\n');
    Ok(buf)
}

/// Renders every artifact in memory, then writes them. Returns the paths
/// written.
pub fn write_all(resolved: &Resolved, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
    let name = resolved.experiment.name();
    let config = serde_json::to_value(resolved).map_err(pathread_core::Error::from)?;
    let rendered = artifacts
        .iter()
        .map(|a| {
            let bytes = match resolved.format {
                Format::Csv => render_csv(name, &config, &a.table)?,
                Format::Json => render_json(name, &config, &a.table)?,
            };
            Ok((a.file_name(name, resolved.format), bytes))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    fs::create_dir_all(&resolved.out_dir)?;
    rendered
        .into_iter()
        .map(|(file, bytes)| {
            let path = Path::new(&resolved.out_dir).join(file);
            fs::write(&path, bytes)?;
            Ok(path)
        })
        .collect()
}
