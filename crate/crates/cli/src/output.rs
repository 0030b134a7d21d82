//! Table emitters. Both formats carry the resolved configuration so that a
//! file can be fed back through `--config` to regenerate itself.
//!
//! CSV layout (the column names are a versioned contract):
//!
//! ```text
//! # sagnac-cli table v1
//! # command: scan-omega
//! #% key = value        (one line per configuration key)
//! omega,p_down,...      (column header)
//! ...                   (data rows)
//! ```
//!
//! Numbers use the shortest decimal form that parses back to the same `f64`.
//! Missing values are empty in CSV and `null` in JSON.

use std::io::Write;

use crate::config::{Format, RunConfig};
use crate::error::CliError;

pub const CSV_MAGIC: &str = "# sagnac-cli table";
pub const TABLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(i64::from(x))
    }
}

pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_f64(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        use serde_json::Value;
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) => Value::from(s.clone()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Missing => Value::Null,
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

pub fn render(table: &Table, config: &RunConfig) -> Result<Vec<u8>, CliError> {
    match config.format {
        Format::Csv => render_csv(table, config),
        Format::Json => render_json(table, config),
    }
}

fn render_csv(table: &Table, config: &RunConfig) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    let io = |e: std::io::Error| CliError::config(format!("write failed: {e}"));
    writeln!(buf, "{CSV_MAGIC} v{TABLE_VERSION}").map_err(io)?;
    writeln!(buf, "# command: {}", config.command.name()).map_err(io)?;
    for (k, v) in config.entries() {
        writeln!(buf, "#% {k} = {v}").map_err(io)?;
    }
    let mut w = csv::Writer::from_writer(buf);
    let csv_err = |e: csv::Error| CliError::config(format!("write failed: {e}"));
    w.write_record(&table.columns).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::csv)).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::config(format!("write failed: {e}")))
}

fn render_json(table: &Table, config: &RunConfig) -> Result<Vec<u8>, CliError> {
    let cfg: serde_json::Map<String, serde_json::Value> =
        config.entries().into_iter().map(|(k, v)| (k.to_string(), serde_json::Value::from(v))).collect();
    let rows: Vec<serde_json::Value> =
        table.rows.iter().map(|r| serde_json::Value::from(r.iter().map(Cell::json).collect::<Vec<_>>())).collect();
    let doc = serde_json::json!({
        "format": "sagnac-cli table",
        "version": TABLE_VERSION,
        "command": config.command.name(),
        "config": cfg,
        "columns": table.columns,
        "rows": rows,
    });
    let mut out = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::config(format!("write failed: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, 1.0, -0.5, 3e-6, 9.48683298050514e-8, 1.2345678901234567e20, 0.1 + 0.2] {
            assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_f64(3e-6), "3e-6");
        assert_eq!(format_f64(0.25), "0.25");
    }
}
