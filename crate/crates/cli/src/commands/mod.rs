//! Subcommand implementations. Each writes its module's data artifacts plus
//! a run manifest into the configured output directory; artifact file names
//! are fixed so downstream commands can find them.

pub mod calibrate;
pub mod ingest;
pub mod omori;
pub mod predict;
pub mod report;
pub mod simulate;

use std::fs;
use std::path::{Path, PathBuf};

use aftershock_core::market::{read_ensemble, Ensemble};
use aftershock_core::{Error, Result};

use crate::config::RunConfig;
use crate::figures::ThresholdCurves;

pub const ENSEMBLE_FILE: &str = "ensemble.csv";
pub const PARAMS_FILE: &str = "params";
pub const GAMMA_FILE: &str = "gamma_q.csv";
pub const COLLAPSE_FILE: &str = "collapse.csv";
pub const EMPIRICAL_FILE: &str = "aftershocks_empirical.csv";
pub const PREDICTED_FILE: &str = "aftershocks_predicted.csv";
pub const FITS_FILE: &str = "omori_fits.csv";

pub(crate) fn artifact_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(name)
}

/// Dependency check: a readable file produced by an earlier command. The
/// error names both the missing file and the command that writes it.
pub(crate) fn require_artifact(path: &Path, produced_by: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Data(format!(
            "missing upstream artifact {}; run `aftershock {produced_by}` first",
            path.display()
        )))
    }
}

pub(crate) fn ensure_output_dir(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))
}

/// The shared entry point for every command downstream of an ensemble.
pub(crate) fn load_ensemble(cfg: &RunConfig) -> Result<Ensemble> {
    let path = artifact_path(cfg, ENSEMBLE_FILE);
    require_artifact(&path, "ingest` or `aftershock simulate")?;
    let (ensemble, _comments) = read_ensemble(&path)?;
    Ok(ensemble)
}

/// Group an aftershock table (columns sigma_a, t, N, se) into one curve per
/// threshold, thresholds in first-appearance order.
pub(crate) fn group_by_threshold(
    table: &crate::csvio::Table,
    path: &Path,
) -> Result<ThresholdCurves> {
    let sigma_col = table.column("sigma_a", path)?;
    let t_col = table.column("t", path)?;
    let n_col = table.column("N", path)?;
    let se_col = table.column("se", path)?;
    let mut curves: ThresholdCurves = Vec::new();
    for row in &table.rows {
        let sigma_a = row[sigma_col];
        let point = (row[t_col] as usize, row[n_col], row[se_col]);
        match curves.iter_mut().find(|(s, _)| *s == sigma_a) {
            Some((_, pts)) => pts.push(point),
            None => curves.push((sigma_a, vec![point])),
        }
    }
    Ok(curves)
}
