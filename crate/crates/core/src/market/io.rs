//! Ensemble CSV serialization: `date,r0,...,r{n-1}` rows preceded by
//! `#`-prefixed provenance comment lines.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::market::{DailyHistory, Ensemble};

/// Write the ensemble with returns at full double precision (17 significant
/// digits), so read-back is bit-exact. Comment lines go first, verbatim
/// after a `# ` prefix.
pub fn write_ensemble(path: &Path, ensemble: &Ensemble, comments: &[String]) -> Result<()> {
    let mut out = Vec::new();
    for c in comments {
        writeln!(out, "# {c}").expect("vec write");
    }
    write!(out, "date").expect("vec write");
    for t in 0..ensemble.n {
        write!(out, ",r{t}").expect("vec write");
    }
    writeln!(out).expect("vec write");
    for h in &ensemble.histories {
        write!(out, "{}", h.date.format("%Y-%m-%d")).expect("vec write");
        for r in &h.returns {
            write!(out, ",{r:.16e}").expect("vec write");
        }
        writeln!(out).expect("vec write");
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Read an ensemble CSV; returns the histories and the leading comment lines
/// (prefix stripped). Column names fix n and must be exactly r0..r{n-1}.
pub fn read_ensemble(path: &Path) -> Result<(Ensemble, Vec<String>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut comments = Vec::new();
    let mut histories = Vec::new();
    let mut n: Option<usize> = None;

    for (line_idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = line_idx as u64 + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            comments.push(rest.trim_start().to_string());
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        match n {
            None => {
                // Header row.
                if fields.len() < 2 || fields[0] != "date" {
                    return Err(Error::Parse {
                        path: path.into(),
                        line: line_no,
                        msg: format!("expected header 'date,r0,...', got '{trimmed}'"),
                    });
                }
                for (t, name) in fields[1..].iter().enumerate() {
                    if *name != format!("r{t}") {
                        return Err(Error::Parse {
                            path: path.into(),
                            line: line_no,
                            msg: format!("column {} must be named r{t}, got '{name}'", t + 1),
                        });
                    }
                }
                n = Some(fields.len() - 1);
            }
            Some(n) => {
                if fields.len() != n + 1 {
                    return Err(Error::Parse {
                        path: path.into(),
                        line: line_no,
                        msg: format!("expected {} fields, got {}", n + 1, fields.len()),
                    });
                }
                let date = NaiveDate::parse_from_str(fields[0], "%Y-%m-%d").map_err(|e| {
                    Error::Parse {
                        path: path.into(),
                        line: line_no,
                        msg: format!("bad date '{}': {e}", fields[0]),
                    }
                })?;
                let mut returns = Vec::with_capacity(n);
                for f in &fields[1..] {
                    let v: f64 = f.parse().map_err(|e| Error::Parse {
                        path: path.into(),
                        line: line_no,
                        msg: format!("bad return '{f}': {e}"),
                    })?;
                    if !v.is_finite() {
                        return Err(Error::Data(format!(
                            "non-finite return {v} on {date} (line {line_no})"
                        )));
                    }
                    returns.push(v);
                }
                histories.push(DailyHistory { date, returns });
            }
        }
    }
    let n = n.ok_or_else(|| Error::Data(format!("{}: no header row", path.display())))?;
    Ok((Ensemble::new(histories, n)?, comments))
}
