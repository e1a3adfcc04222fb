use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Run metadata embedded in every artifact.
#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub grid: Option<usize>,
    /// Last stage of the finite truncation, when one applies.
    pub truncated_at: Option<usize>,
}

impl Meta {
    pub fn new(command: &str, config: &Value) -> Self {
        let canonical = serde_json::to_string(config).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        Self {
            tool: "riesz",
            version: VERSION,
            command: command.into(),
            config_hash: format!("{digest:x}"),
            grid: None,
            truncated_at: None,
        }
    }
}

/// Round-trip float text, 17 significant digits.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

#[derive(Clone, Debug)]
pub enum Cell {
    Int(i128),
    Float(f64),
    Text(String),
    Empty,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Int(v) => v.to_string(),
        Cell::Float(v) => float(*v),
        Cell::Text(s) => s.clone(),
        Cell::Empty => String::new(),
    }
}

/// One tabular artifact with a JSON payload for the other format.
pub struct Report {
    pub meta: Meta,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub footer: Vec<(String, String)>,
    pub json: Value,
}

impl Report {
    pub fn new(meta: Meta, json: Value) -> Self {
        Self {
            meta,
            columns: Vec::new(),
            rows: Vec::new(),
            footer: Vec::new(),
            json,
        }
    }

    pub fn table(mut self, columns: Vec<&'static str>, rows: Vec<Vec<Cell>>) -> Self {
        self.columns = columns;
        self.rows = rows;
        self
    }

    pub fn footer(mut self, key: &str, value: impl Into<String>) -> Self {
        self.footer.push((key.into(), value.into()));
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut v = serde_json::json!({ "meta": self.meta });
                v["result"] = self.json.clone();
                let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut s = String::new();
                let m = &self.meta;
                let _ = writeln!(s, "# tool={} version={} command={}", m.tool, m.version, m.command);
                let _ = writeln!(s, "# config_hash={}", m.config_hash);
                if let Some(g) = m.grid {
                    let _ = writeln!(s, "# grid={g}");
                }
                if let Some(t) = m.truncated_at {
                    let _ = writeln!(s, "# truncated_at={t}");
                }
                if !self.columns.is_empty() {
                    let _ = writeln!(s, "{}", self.columns.join(","));
                }
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(cell_text).collect();
                    let _ = writeln!(s, "{}", cells.join(","));
                }
                for (k, v) in &self.footer {
                    let _ = writeln!(s, "# {k}={v}");
                }
                s
            }
        }
    }
}

pub fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}
