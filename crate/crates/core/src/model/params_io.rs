//! Flat key-value serialization of [`ModelParams`]:
//! `alpha=`, `beta=`, `D=`, `n=`, one per line, `#` comments allowed.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Values print with Rust's shortest round-trip float formatting, so the
/// file re-parses to bit-identical parameters.
pub fn write_params(path: &Path, params: &ModelParams, comments: &[String]) -> Result<()> {
    let mut out = Vec::new();
    for c in comments {
        writeln!(out, "# {c}").expect("vec write");
    }
    writeln!(out, "alpha={}", params.alpha).expect("vec write");
    writeln!(out, "beta={}", params.beta).expect("vec write");
    writeln!(out, "D={}", params.d).expect("vec write");
    writeln!(out, "n={}", params.n).expect("vec write");
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_params(path: &Path) -> Result<ModelParams> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut alpha = None;
    let mut beta = None;
    let mut d = None;
    let mut n = None;
    for (line_idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = line_idx as u64 + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| Error::Parse {
            path: path.into(),
            line: line_no,
            msg: format!("expected key=value, got '{trimmed}'"),
        })?;
        let parse_f64 = |v: &str| -> Result<f64> {
            v.trim().parse().map_err(|e| Error::Parse {
                path: path.into(),
                line: line_no,
                msg: format!("bad value '{}': {e}", v.trim()),
            })
        };
        match key.trim() {
            "alpha" => alpha = Some(parse_f64(value)?),
            "beta" => beta = Some(parse_f64(value)?),
            "D" => d = Some(parse_f64(value)?),
            "n" => {
                n = Some(value.trim().parse::<usize>().map_err(|e| Error::Parse {
                    path: path.into(),
                    line: line_no,
                    msg: format!("bad value '{}': {e}", value.trim()),
                })?)
            }
            other => {
                return Err(Error::Parse {
                    path: path.into(),
                    line: line_no,
                    msg: format!("unknown key '{other}'"),
                })
            }
        }
    }
    let missing = |k: &str| Error::Data(format!("{}: missing key '{k}'", path.display()));
    ModelParams::new(
        alpha.ok_or_else(|| missing("alpha"))?,
        beta.ok_or_else(|| missing("beta"))?,
        d.ok_or_else(|| missing("D"))?,
        n.ok_or_else(|| missing("n"))?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("params");
        let p = ModelParams::new(3.500000000000001, 2.9e-3, 0.35, 20).unwrap();
        write_params(&path, &p, &["fitted on synthetic run 7".into()]).unwrap();
        assert_eq!(read_params(&path).unwrap(), p);
    }

    #[test]
    fn missing_and_unknown_keys_are_rejected() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("params");
        std::fs::write(&path, "alpha=3.5\nbeta=2.9e-3\nD=0.35\n").unwrap();
        assert!(matches!(read_params(&path), Err(Error::Data(_))));
        std::fs::write(&path, "alpha=3.5\nbeta=2.9e-3\nD=0.35\nn=20\nq=1\n").unwrap();
        assert!(matches!(read_params(&path), Err(Error::Parse { line: 5, .. })));
    }

    #[test]
    fn invalid_values_fail_validation() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("params");
        std::fs::write(&path, "alpha=-1\nbeta=2.9e-3\nD=0.35\nn=20\n").unwrap();
        assert!(matches!(read_params(&path), Err(Error::Config(_))));
    }
}
