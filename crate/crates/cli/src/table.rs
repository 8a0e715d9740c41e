//! Output tables: CSV data plus a JSON metadata sidecar.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
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

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// 17 significant digits, so every value round-trips exactly.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => {
        vec![$($crate::table::Cell::from($x)),*]
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra entries merged into the metadata sidecar.
    pub notes: Vec<(String, Value)>,
}

impl ResultTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.header.len(),
            "row width differs from header"
        );
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: Value) {
        self.notes.push((key.to_string(), value));
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.header)?;
        for r in &self.rows {
            wr.write_record(r.iter().map(Cell::render))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, CliError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| CliError::Other(e.to_string()))
    }

    /// Metadata document: tool, version, seed, the exact config and any notes.
    pub fn metadata(&self, config: &Value, seed: u64) -> Value {
        let mut meta = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "columns": self.header,
            "rows": self.rows.len(),
            "config": config,
        });
        let obj = meta.as_object_mut().unwrap();
        for (k, v) in &self.notes {
            obj.insert(k.clone(), v.clone());
        }
        meta
    }
}

/// `results.csv` -> `results.csv.meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// `results.csv` -> `results.<suffix>.csv` for auxiliary tables.
pub fn auxiliary_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}.csv"))
}

pub fn write_outputs(
    table: &ResultTable,
    out: &Path,
    config: &Value,
    seed: u64,
) -> Result<(), CliError> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    table.write_csv(fs::File::create(out)?)?;
    let meta = serde_json::to_string_pretty(&table.metadata(config, seed))
        .map_err(|e| CliError::Other(e.to_string()))?;
    fs::write(sidecar_path(out), meta + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.5, 1.0 / 3.0, 1e-300, 12345.678, -2.0f64.sqrt()] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn csv_layout() {
        let mut t = ResultTable::new(&["k", "p", "label"]);
        t.push(row![1u64, 0.5, "a"]);
        t.push(row![2u64, None::<f64>, true]);
        assert_eq!(
            t.to_csv_string().unwrap(),
            "k,p,label\n1,5.0000000000000000e-1,a\n2,,true\n"
        );
    }

    #[test]
    fn paths() {
        assert_eq!(
            sidecar_path(Path::new("a/b.csv")),
            PathBuf::from("a/b.csv.meta.json")
        );
        assert_eq!(
            auxiliary_path(Path::new("a/b.csv"), "events"),
            PathBuf::from("a/b.events.csv")
        );
    }
}
