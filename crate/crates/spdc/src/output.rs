//! CSV tables and JSON run summaries.
//!
//! Tables have a mandatory header. SI columns are written in shortest
//! round-trip exponent form (`1.5e-4`), display-unit columns with six
//! decimals. The summary is a JSON object with sorted keys; its `config`
//! block is a complete run config.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// SI value.
    Si(f64),
    /// Value in a display unit (mm, um, nm, deg).
    Display(f64),
    Int(usize),
    Flag(bool),
    Text(String),
    /// Not applicable for this row.
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Si(x) => format!("{x:e}"),
            Cell::Display(x) => format!("{x:.6}"),
            Cell::Int(n) => n.to_string(),
            Cell::Flag(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn finite(&self) -> bool {
        match self {
            Cell::Si(x) | Cell::Display(x) => x.is_finite(),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column; `None` for empty cells.
    pub fn values(&self, name: &str) -> Vec<Option<f64>> {
        let Some(k) = self.column(name) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .map(|r| match r[k] {
                Cell::Si(x) | Cell::Display(x) => Some(x),
                _ => None,
            })
            .collect()
    }

    /// First non-finite cell as `(row, column)`.
    pub fn first_non_finite(&self) -> Option<(usize, &str)> {
        self.rows.iter().enumerate().find_map(|(i, r)| {
            r.iter()
                .position(|c| !c.finite())
                .map(|k| (i, self.columns[k].as_str()))
        })
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, csv::Error> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
    }
}

/// Writes `bytes` to `path`, creating the parent directory.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let fail = |e: std::io::Error| Error::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(fail)?;
    }
    std::fs::write(path, bytes).map_err(fail)
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn to_json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s
}

/// `config` block of a run summary as config pairs.
pub fn config_from_summary(text: &str) -> Result<BTreeMap<String, String>, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| format!("not a run summary: {e}"))?;
    let block = value
        .get("config")
        .and_then(Value::as_object)
        .ok_or("run summary has no `config` object")?;
    block
        .iter()
        .map(|(k, v)| match v {
            Value::String(s) => Ok((k.clone(), s.clone())),
            _ => Err(format!("config value for `{k}` is not a string")),
        })
        .collect()
}

pub fn string_map(map: &BTreeMap<String, String>) -> Value {
    Value::Object(
        map.iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect::<Map<_, _>>(),
    )
}

/// Paths written by a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Written {
    pub csv: PathBuf,
    pub json: PathBuf,
}
