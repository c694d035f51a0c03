//! Tables with an embedded metadata header, written atomically.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

/// Everything an experiment produces.
#[derive(Debug, Clone, Default)]
pub struct Output {
    pub table: Table,
    pub metadata: Map<String, Value>,
    /// Extra documents written next to the main file as `<out>.<suffix>`.
    pub sidecars: Vec<(String, Value)>,
}

impl Output {
    /// CSV: one `# {json}` line, the header, then rows.
    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => {
                let mut text = String::new();
                writeln!(text, "# {}", serde_json::to_string(&self.metadata)?).unwrap();
                writeln!(text, "{}", self.table.columns.join(",")).unwrap();
                for row in &self.table.rows {
                    let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                    writeln!(text, "{}", cells.join(",")).unwrap();
                }
                Ok(text)
            }
            Format::Json => {
                let mut doc = json!({
                    "metadata": self.metadata,
                    "columns": self.table.columns,
                    "rows": self.table.rows,
                });
                for (suffix, value) in &self.sidecars {
                    let key = suffix.trim_end_matches(".json");
                    doc[key] = value.clone();
                }
                Ok(serde_json::to_string_pretty(&doc)? + "\n")
            }
        }
    }

    pub fn write(&self, out: Option<&Path>, format: Format) -> Result<()> {
        let text = self.render(format)?;
        match out {
            None => {
                std::io::stdout().write_all(text.as_bytes()).map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })?;
            }
            Some(path) => {
                write_atomic(path, text.as_bytes())?;
                for (suffix, value) in &self.sidecars {
                    let mut name = path.as_os_str().to_owned();
                    name.push(format!(".{suffix}"));
                    let body = serde_json::to_string_pretty(value)? + "\n";
                    write_atomic(Path::new(&name), body.as_bytes())?;
                }
            }
        }
        Ok(())
    }
}

/// Writes to a temporary file in the target directory, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Parses the `# {json}` header of a CSV produced by [`Output::render`].
pub fn read_csv(text: &str) -> Result<(Map<String, Value>, Table)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| CliError::config("missing metadata line"))?;
    let metadata: Map<String, Value> = serde_json::from_str(header)?;
    let columns = lines.next().ok_or_else(|| CliError::config("missing column header"))?;
    let mut table = Table::new(columns.split(','));
    for line in lines.filter(|l| !l.is_empty()) {
        let row = line
            .split(',')
            .map(|c| c.parse::<f64>().map_err(|e| CliError::config(format!("bad cell {c:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        table.push(row);
    }
    Ok((metadata, table))
}
