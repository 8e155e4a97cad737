//! Output files. CSVs start with a `#` line naming the generator and the
//! configuration hash; JSON documents carry the same fields at top level.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::Resolved;
use crate::error::{CliError, CliResult};

pub const GENERATOR: &str = concat!("dcwelfare ", env!("CARGO_PKG_VERSION"));

pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

pub struct Output {
    dir: PathBuf,
    command: &'static str,
    sha256: String,
    written: Vec<PathBuf>,
}

impl Output {
    /// Creates `dir` and writes the effective configuration to `config.txt`.
    pub fn create<C>(dir: &Path, command: &'static str, resolved: &Resolved<C>) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))?;
        let mut out = Self { dir: dir.to_path_buf(), command, sha256: resolved.sha256.clone(), written: Vec::new() };
        let body = format!("{}\n{}", out.header(), resolved.canonical);
        out.write("config.txt", body.as_bytes())?;
        Ok(out)
    }

    fn header(&self) -> String {
        format!("# {GENERATOR} {} config_sha256={}", self.command, self.sha256)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, columns: &[&str], rows: Vec<Vec<Cell>>) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::data(format!("writing {name}: {e}"));
        w.write_record(columns).map_err(fail)?;
        for row in rows {
            debug_assert_eq!(row.len(), columns.len());
            w.write_record(row.iter().map(Cell::render)).map_err(fail)?;
        }
        let body = w.into_inner().map_err(|e| CliError::data(format!("writing {name}: {e}")))?;
        let mut bytes = format!("{}\n", self.header()).into_bytes();
        bytes.extend(body);
        self.write(name, &bytes)
    }

    /// Writes `payload`'s fields under a header of generator, command, hash.
    pub fn json<T: Serialize>(&mut self, name: &str, payload: &T) -> CliResult<()> {
        let mut doc = Map::new();
        doc.insert("generator".into(), GENERATOR.into());
        doc.insert("command".into(), self.command.into());
        doc.insert("config_sha256".into(), self.sha256.clone().into());
        match serde_json::to_value(payload).map_err(|e| CliError::data(format!("serialising {name}: {e}")))? {
            Value::Object(m) => doc.extend(m),
            other => {
                doc.insert("value".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values serialise");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
