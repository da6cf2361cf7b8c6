//! In-memory tables and their CSV / JSON encodings.

use serde_json::{Map, Value};

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Cell {
        v.map_or(Cell::Empty, Cell::Num)
    }

    pub fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }

    /// Shortest round-trip decimal, so equal numbers always print identically.
    pub fn render(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x}"),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => Value::from(*x),
            Cell::Num(x) => Value::from(format!("{x}")),
            Cell::Int(n) => Value::from(*n),
            Cell::Text(s) => Value::from(s.clone()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn encode(&self, format: Format) -> Result<Vec<u8>, HarnessError> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let csv_err = |e: csv::Error| HarnessError::Task(format!("csv encoding: {e}"));
                w.write_record(&self.columns).map_err(csv_err)?;
                for r in &self.rows {
                    w.write_record(r.iter().map(Cell::render)).map_err(csv_err)?;
                }
                w.into_inner().map_err(|e| HarnessError::Task(format!("csv encoding: {e}")))
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let m: Map<String, Value> = self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect();
                        Value::Object(m)
                    })
                    .collect();
                let mut out = serde_json::to_vec_pretty(&rows).map_err(|e| HarnessError::Task(e.to_string()))?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// A file produced by a task, held in memory until the writer stores it.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub path: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn table(stem: &str, table: &Table, format: Format) -> Result<Self, HarnessError> {
        Ok(Artifact { path: format!("{stem}.{}", format.extension()), bytes: table.encode(format)? })
    }

    pub fn json<T: serde::Serialize>(path: &str, value: &T) -> Result<Self, HarnessError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| HarnessError::Task(e.to_string()))?;
        bytes.push(b'\n');
        Ok(Artifact { path: path.to_string(), bytes })
    }

    /// Whitespace-delimited plot data: `x u` or `x y u` per node.
    pub fn plot_data(path: String, header: &str, nodes: &[Vec<f64>], u: &[f64]) -> Self {
        let mut s = format!("# {header}\n");
        for (x, v) in nodes.iter().zip(u) {
            for c in x {
                s.push_str(&format!("{c} "));
            }
            s.push_str(&format!("{v}\n"));
        }
        Artifact { path, bytes: s.into_bytes() }
    }
}
