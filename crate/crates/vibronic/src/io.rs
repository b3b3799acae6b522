//! CSV output with a units comment line, CSV reading, and content hashes.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const UNITS_LINE: &str = "# units: a.u.";

/// 12 significant digits.
pub fn fmt_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Full round-trip precision.
pub fn fmt_full(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: Vec<String>) -> Self {
        CsvTable {
            comments: Vec::new(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn with_comment(mut self, c: impl Into<String>) -> Self {
        self.comments.push(c.into());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_f64(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| fmt_full(x)).collect());
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(UNITS_LINE);
        s.push('\n');
        for c in &self.comments {
            s.push_str("# ");
            s.push_str(c);
            s.push('\n');
        }
        s.push_str(&self.header.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }

    /// Parses text produced by [`CsvTable::render`]; `#` lines are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut comments = Vec::new();
        let mut header: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        for line in text.lines() {
            if let Some(c) = line.strip_prefix('#') {
                if line != UNITS_LINE {
                    comments.push(c.trim_start().to_string());
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
            match header {
                None => header = Some(fields),
                Some(ref h) => {
                    if fields.len() != h.len() {
                        return Err(Error::Config(format!(
                            "csv row has {} fields, header has {}",
                            fields.len(),
                            h.len()
                        )));
                    }
                    rows.push(fields)
                }
            }
        }
        Ok(CsvTable {
            comments,
            header: header.ok_or_else(|| Error::Config("csv has no header".into()))?,
            rows,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        CsvTable::parse(&fs::read_to_string(path)?)
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("csv has no column `{name}`")))
    }

    pub fn column_f64(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name)?;
        self.rows
            .iter()
            .map(|r| {
                r[i].parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad number `{}`: {e}", r[i])))
            })
            .collect()
    }
}

/// Git-style blob hash (SHA-256 over `blob <len>\0<content>`).
pub fn blob_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    hex::encode(h.finalize())
}

pub fn file_hash(path: &Path) -> Result<String> {
    Ok(blob_hash(&fs::read(path)?))
}

/// Compact time label used in file names, e.g. `56.1`.
pub fn time_label(t: f64) -> String {
    let s = format!("{t}");
    s.replace('-', "m")
}
