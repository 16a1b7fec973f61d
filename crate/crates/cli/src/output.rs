//! Tabular output with an embedded run manifest.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Duration;

use clap::ValueEnum;
use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    #[value(name = "jsonl", alias = "json-lines")]
    JsonLines,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::JsonLines => "json-lines",
        }
    }
}

/// Reproducibility record written at the top of every output.
pub struct Manifest {
    pub problem: PathBuf,
    pub command: &'static str,
    pub options: Map<String, Value>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub duration: Duration,
    /// Derived quantities worth keeping next to the data (residuals, norms).
    pub diagnostics: Map<String, Value>,
}

impl Manifest {
    pub fn new(problem: PathBuf, command: &'static str, output: Option<PathBuf>, format: Format) -> Self {
        Self {
            problem,
            command,
            options: Map::new(),
            output,
            format,
            duration: Duration::ZERO,
            diagnostics: Map::new(),
        }
    }

    pub fn option(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.options.insert(key.to_string(), value.into());
        self
    }

    pub fn diagnostic(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.diagnostics.insert(key.to_string(), value.into());
        self
    }

    pub fn to_json(&self) -> Value {
        json!({
            "tool": "bvtp",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "problem": self.problem.display().to_string(),
            "options": self.options,
            "output": self.output.as_ref().map_or("-".to_string(), |p| p.display().to_string()),
            "format": self.format.name(),
            "duration_seconds": self.duration.as_secs_f64(),
            "diagnostics": self.diagnostics,
        })
    }

    fn csv_preamble(&self) -> String {
        let mut s = String::new();
        if let Value::Object(m) = self.to_json() {
            for (k, v) in m {
                s.push_str(&format!("# {k}: {v}\n"));
            }
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            // Debug formatting is the shortest representation that parses back exactly.
            Cell::Float(x) => format!("{x:?}"),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(x) => json!(format!("{x:?}")),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, manifest: &Manifest) -> String {
        match manifest.format {
            Format::Csv => {
                let mut s = manifest.csv_preamble();
                s.push_str(&self.columns.join(","));
                s.push('\n');
                for r in &self.rows {
                    let cells: Vec<String> = r.iter().map(Cell::csv).collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
                s
            }
            Format::JsonLines => {
                let mut s = json!({ "manifest": manifest.to_json() }).to_string();
                s.push('\n');
                for r in &self.rows {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(r)
                        .map(|(c, v)| (c.to_string(), v.json()))
                        .collect();
                    s.push_str(&Value::Object(obj).to_string());
                    s.push('\n');
                }
                s
            }
        }
    }
}

/// Writes to the `--out` file, or to stdout when none is given.
pub fn emit(target: Option<&PathBuf>, text: &str) -> io::Result<()> {
    match target {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            w.write_all(text.as_bytes())?;
            w.flush()
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}
