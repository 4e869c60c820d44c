//! CSV and JSON-sidecar serialization.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use endiff_core::constants::{CODATA_REVISION, SNAPSHOT};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{fmt_number, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    CsvJson,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Self {
        Self {
            name: name.to_string(),
            unit: unit.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    /// One named column per field.
    Table,
    /// Matrix whose first row holds `top` values and whose first column
    /// holds the row coordinate; `columns` describes the three axes.
    Grid { corner: String, top: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// File stem.
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
    pub layout: Layout,
    pub notes: Vec<String>,
}

impl Dataset {
    pub fn table(name: &str, columns: Vec<Column>, rows: Vec<Vec<f64>>) -> Self {
        Self {
            name: name.to_string(),
            columns,
            rows,
            layout: Layout::Table,
            notes: Vec::new(),
        }
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

/// SHA-256 over the pinned constants, one `name=value` line each.
pub fn constants_hash() -> String {
    let mut h = Sha256::new();
    h.update(CODATA_REVISION.as_bytes());
    h.update(b"\n");
    for (name, value) in SNAPSHOT {
        h.update(format!("{name}={value:e}\n").as_bytes());
    }
    h.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn render_csv(ds: &Dataset, command: &str, cfg: &RunConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# endiff {} {command}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "# constants {CODATA_REVISION} sha256 {}", constants_hash());
    out.push_str("# config begin\n");
    for line in cfg.echo() {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str("# config end\n");
    for note in &ds.notes {
        let _ = writeln!(out, "# note: {note}");
    }
    let units: Vec<String> = ds.columns.iter().map(|c| format!("{} [{}]", c.name, c.unit)).collect();
    let _ = writeln!(out, "# columns: {}", units.join(", "));
    match &ds.layout {
        Layout::Table => {
            let names: Vec<&str> = ds.columns.iter().map(|c| c.name.as_str()).collect();
            let _ = writeln!(out, "{}", names.join(","));
        }
        Layout::Grid { corner, top } => {
            let _ = writeln!(out, "{corner},{}", join(top));
        }
    }
    for row in &ds.rows {
        let _ = writeln!(out, "{}", join(row));
    }
    out
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| fmt_number(*v)).collect::<Vec<_>>().join(",")
}

#[derive(Serialize)]
struct Constants {
    revision: &'static str,
    sha256: String,
    values: BTreeMap<&'static str, f64>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    program: &'static str,
    version: &'static str,
    command: &'a str,
    dataset: &'a str,
    file: String,
    constants: Constants,
    config: BTreeMap<String, String>,
    columns: &'a [Column],
    rows: usize,
    notes: &'a [String],
    summary: BTreeMap<&'a str, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_unix_seconds: Option<u64>,
}

pub fn render_sidecar(
    ds: &Dataset,
    command: &str,
    cfg: &RunConfig,
    summary: &[(&str, f64)],
    timestamp: Option<u64>,
) -> String {
    let config = cfg
        .echo()
        .iter()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    let sidecar = Sidecar {
        program: "endiff",
        version: env!("CARGO_PKG_VERSION"),
        command,
        dataset: &ds.name,
        file: format!("{}.csv", ds.name),
        constants: Constants {
            revision: CODATA_REVISION,
            sha256: constants_hash(),
            values: SNAPSHOT.iter().copied().collect(),
        },
        config,
        columns: &ds.columns,
        rows: ds.rows.len(),
        notes: &ds.notes,
        summary: summary.iter().copied().collect(),
        generated_unix_seconds: timestamp,
    };
    let mut text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    text.push('\n');
    text
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Writes every dataset into `dir`, returning the paths written.
pub fn emit(
    dir: &Path,
    datasets: &[Dataset],
    format: Format,
    command: &str,
    cfg: &RunConfig,
    summary: &[(&str, f64)],
    timestamp: Option<u64>,
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for ds in datasets {
        written.push(write(dir.join(format!("{}.csv", ds.name)), &render_csv(ds, command, cfg))?);
        if format == Format::CsvJson {
            let json = render_sidecar(ds, command, cfg, summary, timestamp);
            written.push(write(dir.join(format!("{}.json", ds.name)), &json)?);
        }
    }
    Ok(written)
}
