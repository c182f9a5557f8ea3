//! CSV output with `#`-prefixed metadata lines.
//!
//! Records are CRLF-terminated. Numbers are written in scientific notation with
//! 17 significant digits; a missing value is an empty field.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Formats a float with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metadata.push((key.into(), value.to_string()));
    }

    pub fn push_row(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}={v}\r\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push_str("\r\n");
        for row in &self.rows {
            let fields: Vec<String> = row
                .iter()
                .map(|v| v.map(format_float).unwrap_or_default())
                .collect();
            out.push_str(&fields.join(","));
            out.push_str("\r\n");
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.render().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

/// A CSV file read back into metadata, header and numeric columns.
#[derive(Debug, Clone)]
pub struct ParsedCsv {
    pub metadata: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl ParsedCsv {
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Column values up to the first missing entry.
    pub fn dense_column(&self, name: &str) -> Option<Vec<f64>> {
        Some(self.column(name)?.into_iter().map_while(|v| v).collect())
    }
}

pub fn parse_csv(text: &str) -> Result<ParsedCsv> {
    let mut metadata = BTreeMap::new();
    let mut columns = None;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim_end_matches('\r');
        if let Some(meta) = line.strip_prefix('#') {
            if let Some((k, v)) = meta.trim().split_once('=') {
                metadata.insert(k.to_string(), v.to_string());
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        match columns {
            None => columns = Some(line.split(',').map(str::to_string).collect::<Vec<_>>()),
            Some(ref cols) => {
                let row = line
                    .split(',')
                    .map(|f| {
                        if f.is_empty() {
                            Ok(None)
                        } else {
                            f.parse::<f64>()
                                .map(Some)
                                .map_err(|_| Error::InvalidConfig(format!("bad number '{f}'")))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                if row.len() != cols.len() {
                    return Err(Error::InvalidConfig(format!(
                        "row has {} fields, header has {}",
                        row.len(),
                        cols.len()
                    )));
                }
                rows.push(row);
            }
        }
    }
    Ok(ParsedCsv {
        metadata,
        columns: columns.unwrap_or_default(),
        rows,
    })
}

pub fn read_csv(path: &Path) -> Result<ParsedCsv> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}
