//! Numeric CSV artifacts: full-precision writer and checked reader.
//!
//! Layout shared by every table this tool emits: `#`-prefixed comment lines
//! first (carrying the manifest reference and run metadata), one header row,
//! then numeric rows at full double precision so read-back is bit-exact.
//! UNIX line endings throughout.

use std::fs;
use std::path::Path;

use aftershock_core::{Error, Result};

pub fn write_table(
    path: &Path,
    comments: &[String],
    header: &str,
    rows: &[Vec<f64>],
) -> Result<()> {
    let columns = header.split(',').count();
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str(header);
    out.push('\n');
    for row in rows {
        assert_eq!(row.len(), columns, "row width must match the header");
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!("{v:.16e}"));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct Table {
    /// Leading comment lines, `#` prefix stripped.
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    /// Value of a `key=value` comment, if one was written.
    pub fn comment_value(&self, key: &str) -> Option<&str> {
        self.comments
            .iter()
            .find_map(|c| c.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')))
    }

    /// Index of a named column; data error naming file and column if absent.
    pub fn column(&self, name: &str, path: &Path) -> Result<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| {
            Error::Data(format!("{} has no column '{name}'", path.display()))
        })
    }

}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut comments = Vec::new();
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            comments.push(comment.trim().to_string());
            continue;
        }
        if header.is_none() {
            header = Some(line.split(',').map(str::to_string).collect());
            continue;
        }
        let expected = header.as_ref().expect("set above").len();
        let row = line
            .split(',')
            .map(|v| {
                v.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: path.into(),
                    line: idx as u64 + 1,
                    msg: format!("expected a number, got '{v}'"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != expected {
            return Err(Error::Parse {
                path: path.into(),
                line: idx as u64 + 1,
                msg: format!("expected {expected} fields, got {}", row.len()),
            });
        }
        rows.push(row);
    }
    let header = header.ok_or_else(|| {
        Error::Data(format!("{} contains no header row", path.display()))
    })?;
    Ok(Table { comments, header, rows })
}
