use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde_json::{Map, Value};
use varmdp::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

/// Exact values keep at most this many fractional digits in their decimal
/// column when the expansion does not terminate.
const EXACT_DIGITS: usize = 15;

/// One output cell. Numbers stay numbers in JSON lines.
#[derive(Debug, Clone)]
pub enum Cell {
    Text(String),
    Int(i128),
    Real(String),
}

impl Cell {
    /// An estimate, rendered with 12 significant digits.
    pub fn estimate(v: f64) -> Self {
        Cell::Real(sig12(v))
    }

    fn render(&self) -> String {
        match self {
            Cell::Text(s) | Cell::Real(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(i) => Value::from(*i as i64),
            Cell::Real(s) => s
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map(Value::Number)
                .unwrap_or_else(|| Value::String(s.clone())),
        }
    }
}

/// `{:e}` rounding to 12 significant digits, printed in the shortest form
/// that reads back to the rounded value.
pub fn sig12(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("valid float");
    format!("{rounded}")
}

/// Exact value as `num/den (decimal)`.
pub fn exact(r: &Rational) -> String {
    format!(
        "{} ({})",
        rational::format(r),
        rational::format_decimal(r, EXACT_DIGITS)
    )
}

/// Two cells for an exact quantity: the rational and its decimal value.
pub fn exact_cells(r: &Rational) -> [Cell; 2] {
    [
        Cell::Text(rational::format(r)),
        Cell::Real(rational::format_decimal(r, EXACT_DIGITS)),
    ]
}

#[derive(Debug, Clone)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: Vec<&'static str>) -> Self {
        Self {
            headers,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> io::Result<Vec<u8>> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.headers)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::render))?;
                }
                w.into_inner().map_err(|e| e.into_error())
            }
            Format::Jsonl => {
                let mut out = Vec::new();
                for row in &self.rows {
                    let obj: Map<String, Value> = self
                        .headers
                        .iter()
                        .zip(row)
                        .map(|(h, c)| (h.to_string(), c.json()))
                        .collect();
                    serde_json::to_writer(&mut out, &obj)?;
                    out.push(b'\n');
                }
                Ok(out)
            }
        }
    }
}

/// Where a command's main artifact goes.
#[derive(Debug, Clone)]
pub enum Sink {
    Stdout,
    File(PathBuf),
}

impl Sink {
    pub fn from_arg(path: Option<&Path>) -> Self {
        match path {
            Some(p) if p != Path::new("-") => Sink::File(p.to_path_buf()),
            _ => Sink::Stdout,
        }
    }

    pub fn write(&self, bytes: &[u8]) -> io::Result<()> {
        match self {
            Sink::Stdout => {
                let mut out = io::stdout().lock();
                out.write_all(bytes)?;
                out.flush()
            }
            Sink::File(path) => write_atomic(path, bytes),
        }
    }

    /// `<file>.<suffix>` next to a file sink; nothing for stdout.
    pub fn companion(&self, suffix: &str) -> Option<PathBuf> {
        match self {
            Sink::Stdout => None,
            Sink::File(p) => {
                let mut name = p.as_os_str().to_os_string();
                name.push(".");
                name.push(suffix);
                Some(PathBuf::from(name))
            }
        }
    }
}

/// Writes to a temporary file in the target directory and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
