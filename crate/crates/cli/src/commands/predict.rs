//! `predict`: parameter-free aftershock curves from calibrated parameters.

use aftershock_core::market::{select_main_shocks, ShockSpec};
use aftershock_core::model::read_params;
use aftershock_core::omori::{predict_average, PREDICTION_ABS_TOL};
use aftershock_core::{Error, Result};

use super::{artifact_path, ensure_output_dir, require_artifact, EMPIRICAL_FILE, PARAMS_FILE, PREDICTED_FILE};
use crate::config::RunConfig;
use crate::csvio::{read_table, write_table};
use crate::figures::prediction_figure;
use crate::manifest::ManifestBuilder;
use crate::svg::write_plot;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let mut mf = ManifestBuilder::new("predict");
    let ensemble_path = artifact_path(cfg, super::ENSEMBLE_FILE);
    let ensemble = super::load_ensemble(cfg)?;
    mf.input("ensemble", &ensemble_path);

    let params_path = artifact_path(cfg, PARAMS_FILE);
    require_artifact(&params_path, "calibrate")?;
    let params = read_params(&params_path)?;
    mf.input("params", &params_path);
    if params.n != ensemble.n {
        return Err(Error::Data(format!(
            "parameter file was calibrated for {}-bar histories, ensemble has {} bars",
            params.n, ensemble.n
        )));
    }

    let sigma_m = cfg.resolve_sigma_m(&ensemble)?;
    let t_max = cfg.t_max.unwrap_or(ensemble.n - 1);
    mf.parameter("sigma_m", sigma_m);
    mf.parameter("sigma_max", cfg.sigma_max);
    mf.parameter("t_max", t_max);
    mf.parameter("alpha", params.alpha);
    mf.parameter("beta", params.beta);
    mf.parameter("D", params.d);
    mf.parameter("quadrature_tol", PREDICTION_ABS_TOL);

    let mut rows = Vec::new();
    let mut predicted = Vec::new();
    let mut shocks = 0;
    for &sigma_a in &cfg.sigma_a_list {
        let spec = ShockSpec::new(sigma_m, sigma_a, cfg.sigma_max)?;
        let selection = select_main_shocks(&ensemble, &spec)?;
        shocks = selection.selected.len();
        let magnitudes: Vec<f64> =
            selection.selected.iter().map(|(_, r0)| *r0).collect();
        let curve = predict_average(&magnitudes, &spec, &params, t_max)?;
        for i in 0..curve.t.len() {
            rows.push(vec![sigma_a, curve.t[i] as f64, curve.n[i], curve.se[i]]);
        }
        predicted.push((
            sigma_a,
            (0..curve.t.len()).map(|i| (curve.t[i], curve.n[i])).collect::<Vec<_>>(),
        ));
    }
    mf.parameter("main_shocks", shocks);

    ensure_output_dir(cfg)?;
    let out_path = artifact_path(cfg, PREDICTED_FILE);
    write_table(
        &out_path,
        &[
            mf.reference(),
            format!("alpha={} beta={} D={} n={}", params.alpha, params.beta, params.d, params.n),
            format!("sigma_m={sigma_m}"),
            format!("main_shocks={shocks}"),
            "se=0: analytic curves averaged over the selected main-shock magnitudes".into(),
        ],
        "sigma_a,t,N,se",
        &rows,
    )?;
    mf.output(&out_path);

    if cfg.svg {
        // Overlay measured points when the omori stage already ran; the
        // prediction itself never needs them.
        let empirical_path = artifact_path(cfg, EMPIRICAL_FILE);
        let empirical = if empirical_path.is_file() {
            Some(super::group_by_threshold(&read_table(&empirical_path)?, &empirical_path)?)
        } else {
            None
        };
        let figure_path = artifact_path(cfg, "figure_prediction.svg");
        write_plot(&figure_path, &prediction_figure(empirical.as_ref(), &predicted))?;
        mf.output(&figure_path);
    }
    mf.write(&cfg.output_dir)?;
    println!(
        "predict: {} thresholds x {} bars from {} main shocks -> {}",
        cfg.sigma_a_list.len(),
        t_max,
        shocks,
        out_path.display()
    );
    Ok(())
}
