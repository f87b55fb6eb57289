//! `report`: assemble figures and tables from previously written artifacts.
//!
//! Strictly composition: every number here is read back from an artifact,
//! nothing is re-estimated. A missing artifact is a hard dependency error
//! naming the file and the command that produces it.

use std::fs;
use std::path::{Path, PathBuf};

use aftershock_core::model::{read_params, ModelParams};
use aftershock_core::omori::OmoriParams;
use aftershock_core::{Error, Result};

use super::{
    artifact_path, ensure_output_dir, group_by_threshold, require_artifact, COLLAPSE_FILE,
    EMPIRICAL_FILE, FITS_FILE, GAMMA_FILE, PARAMS_FILE, PREDICTED_FILE,
};
use crate::config::RunConfig;
use crate::csvio::{read_table, Table};
use crate::figures::{collapse_figure, omori_figure, prediction_figure, scaling_figure, CollapseLayers};
use crate::manifest::ManifestBuilder;

struct Artifacts {
    params: ModelParams,
    gamma: Table,
    collapse: Table,
    empirical: Table,
    fits: Table,
    predicted: Table,
}

fn load_artifacts(cfg: &RunConfig, mf: &mut ManifestBuilder) -> Result<Artifacts> {
    let sources = [
        (PARAMS_FILE, "calibrate"),
        (GAMMA_FILE, "calibrate"),
        (COLLAPSE_FILE, "calibrate"),
        (EMPIRICAL_FILE, "omori"),
        (FITS_FILE, "omori"),
        (PREDICTED_FILE, "predict"),
    ];
    for (name, producer) in sources {
        let path = artifact_path(cfg, name);
        require_artifact(&path, producer)?;
        mf.input(name, &path);
    }
    Ok(Artifacts {
        params: read_params(&artifact_path(cfg, PARAMS_FILE))?,
        gamma: read_table(&artifact_path(cfg, GAMMA_FILE))?,
        collapse: read_table(&artifact_path(cfg, COLLAPSE_FILE))?,
        empirical: read_table(&artifact_path(cfg, EMPIRICAL_FILE))?,
        fits: read_table(&artifact_path(cfg, FITS_FILE))?,
        predicted: read_table(&artifact_path(cfg, PREDICTED_FILE))?,
    })
}

/// The collapse table regrouped for plotting: per-horizon density layers and
/// the stored fitted-g column as a single curve over the bin centers.
fn collapse_layers(table: &Table, path: &Path) -> Result<(CollapseLayers, Vec<(f64, f64)>)> {
    let t_col = table.column("t", path)?;
    let x_col = table.column("x", path)?;
    let d_col = table.column("density", path)?;
    let g_col = table.column("g", path)?;
    let mut layers: CollapseLayers = Vec::new();
    let mut g_curve: Vec<(f64, f64)> = Vec::new();
    for row in &table.rows {
        let t = row[t_col] as usize;
        let point = (row[x_col], row[d_col]);
        match layers.iter_mut().find(|(lt, _)| *lt == t) {
            Some((_, pts)) => pts.push(point),
            None => layers.push((t, vec![point])),
        }
        g_curve.push((row[x_col], row[g_col]));
    }
    g_curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    g_curve.dedup_by(|a, b| a.0 == b.0);
    Ok((layers, g_curve))
}

fn fit_params(table: &Table, path: &Path) -> Result<Vec<(f64, OmoriParams)>> {
    let sigma_col = table.column("sigma_a", path)?;
    let k_col = table.column("K", path)?;
    let p_col = table.column("p", path)?;
    let tau_col = table.column("tau", path)?;
    table
        .rows
        .iter()
        .map(|row| {
            Ok((row[sigma_col], OmoriParams::new(row[k_col], row[p_col], row[tau_col])?))
        })
        .collect()
}

fn fit_rows_markdown(fits: &[(f64, OmoriParams)]) -> String {
    let mut out = String::from("| sigma_a | K | p | tau |\n|---:|---:|---:|---:|\n");
    for (sigma_a, p) in fits {
        out.push_str(&format!("| {sigma_a} | {:.2} | {:.2} | {:.2} |\n", p.k, p.p, p.tau));
    }
    out
}

fn fit_table_markdown(fits: &[(f64, OmoriParams)]) -> String {
    format!("# Fitted decay-law parameters\n\n{}", fit_rows_markdown(fits))
}

fn report_markdown(art: &Artifacts, fits: &[(f64, OmoriParams)]) -> String {
    let p = &art.params;
    let mut out = String::from("# Aftershock analysis report\n\n");
    out.push_str("All content below is assembled from the run artifacts; see \n");
    out.push_str("`manifest_report.json` in the parent directory for provenance.\n\n");
    out.push_str("## Calibrated model\n\n");
    out.push_str(&format!(
        "- alpha = {}\n- beta = {}\n- D = {}\n- bars per day = {}\n\n",
        p.alpha, p.beta, p.d, p.n
    ));
    out.push_str("## Main-shock selection\n\n");
    for key in ["sigma_m", "sigma_max", "main_shocks"] {
        if let Some(value) = art.empirical.comment_value(key) {
            out.push_str(&format!("- {key} = {value}\n"));
        }
    }
    out.push('\n');
    out.push_str("## Decay-law fits\n\n");
    out.push_str(&fit_rows_markdown(fits));
    out.push('\n');
    out.push_str(
        "## Figures\n\n\
         - `figure_scaling.svg`: moment growth exponents gamma(q) with the line q D\n\
         - `figure_collapse.svg`: rescaled aggregate-return densities and fitted g\n\
         - `figure_omori.svg`: measured cumulative counts with fitted decay curves\n\
         - `figure_prediction.svg`: parameter-free predictions over the measured points\n\n",
    );
    out.push_str(
        "## Data files\n\n\
         Copies of the run artifacts: `params`, `gamma_q.csv`, `collapse.csv`,\n\
         `aftershocks_empirical.csv`, `omori_fits.csv`, `aftershocks_predicted.csv`.\n",
    );
    out
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let mut mf = ManifestBuilder::new("report");
    let art = load_artifacts(cfg, &mut mf)?;

    ensure_output_dir(cfg)?;
    let report_dir = cfg.output_dir.join("report");
    fs::create_dir_all(&report_dir).map_err(|e| Error::io(&report_dir, e))?;

    let emit = |name: &str, content: String, mf: &mut ManifestBuilder| -> Result<PathBuf> {
        let path = report_dir.join(name);
        fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        mf.output(&path);
        Ok(path)
    };

    // Figures, from stored columns only.
    let gamma_path = artifact_path(cfg, GAMMA_FILE);
    let q_col = art.gamma.column("q", &gamma_path)?;
    let g_col = art.gamma.column("gamma", &gamma_path)?;
    let se_col = art.gamma.column("se", &gamma_path)?;
    let scaling_pts: Vec<(f64, f64, f64)> =
        art.gamma.rows.iter().map(|r| (r[q_col], r[g_col], r[se_col])).collect();
    emit(
        "figure_scaling.svg",
        scaling_figure(&scaling_pts, art.params.d).render(),
        &mut mf,
    )?;

    let (layers, g_curve) = collapse_layers(&art.collapse, &artifact_path(cfg, COLLAPSE_FILE))?;
    emit("figure_collapse.svg", collapse_figure(&layers, g_curve).render(), &mut mf)?;

    let empirical = group_by_threshold(&art.empirical, &artifact_path(cfg, EMPIRICAL_FILE))?;
    let fits = fit_params(&art.fits, &artifact_path(cfg, FITS_FILE))?;
    emit("figure_omori.svg", omori_figure(&empirical, &fits)?.render(), &mut mf)?;

    let predicted_curves = group_by_threshold(&art.predicted, &artifact_path(cfg, PREDICTED_FILE))?;
    let predicted: Vec<(f64, Vec<(usize, f64)>)> = predicted_curves
        .iter()
        .map(|(s, pts)| (*s, pts.iter().map(|&(t, n, _)| (t, n)).collect()))
        .collect();
    emit(
        "figure_prediction.svg",
        prediction_figure(Some(&empirical), &predicted).render(),
        &mut mf,
    )?;

    emit("fit_table.md", fit_table_markdown(&fits), &mut mf)?;
    emit("report.md", report_markdown(&art, &fits), &mut mf)?;

    // Self-contained directory: artifact copies travel with the figures.
    for name in
        [PARAMS_FILE, GAMMA_FILE, COLLAPSE_FILE, EMPIRICAL_FILE, FITS_FILE, PREDICTED_FILE]
    {
        let from = artifact_path(cfg, name);
        let to = report_dir.join(name);
        fs::copy(&from, &to).map_err(|e| Error::io(&to, e))?;
        mf.output(&to);
    }
    mf.write(&cfg.output_dir)?;
    println!("report: assembled {}", report_dir.display());
    Ok(())
}
