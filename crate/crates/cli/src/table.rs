//! Result tables written as CSV or JSON with stable formatting.

use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::config::Format;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(usize),
    Real(f64),
    Text(String),
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) if v.is_nan() => "nan".into(),
            Cell::Real(v) => format!("{v:.10e}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Real(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Text(s) => Value::from(s.as_str()),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
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

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, headers: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            headers: headers.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path, format: Format) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        match format {
            Format::Csv => {
                let path = dir.join(format!("{}.csv", self.name));
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(&self.headers)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::to_csv))?;
                }
                w.flush()?;
                Ok(path)
            }
            Format::Json => {
                let path = dir.join(format!("{}.json", self.name));
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> = self
                            .headers
                            .iter()
                            .zip(row)
                            .map(|(h, c)| (h.to_string(), c.to_json()))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                let text = serde_json::to_string_pretty(&Value::Array(rows))?;
                std::fs::write(&path, text + "\n")?;
                Ok(path)
            }
        }
    }

    /// Plain aligned text for the terminal.
    pub fn render(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|c| match c {
                        Cell::Real(v) => format!("{v:.3e}"),
                        other => other.to_csv(),
                    })
                    .collect()
            })
            .collect();
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|j| {
                cells
                    .iter()
                    .map(|r| r[j].len())
                    .chain([self.headers[j].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |items: Vec<&str>| -> String {
            items
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        let mut out = vec![line(self.headers.clone())];
        out.extend(
            cells
                .iter()
                .map(|r| line(r.iter().map(String::as_str).collect())),
        );
        out.join("\n")
    }
}
