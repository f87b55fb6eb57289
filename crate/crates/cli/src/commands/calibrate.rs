//! `calibrate`: ensemble -> scaling exponent, tail parameters, artifacts.

use aftershock_core::calibrate::{calibrate, TimeRegressor};
use aftershock_core::model::{scaling_function_g, write_params};
use aftershock_core::Result;

use super::{artifact_path, ensure_output_dir, COLLAPSE_FILE, GAMMA_FILE, PARAMS_FILE};
use crate::config::RunConfig;
use crate::csvio::write_table;
use crate::figures::{collapse_figure, scaling_figure};
use crate::manifest::ManifestBuilder;
use crate::svg::write_plot;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let mut mf = ManifestBuilder::new("calibrate");
    let ensemble_path = artifact_path(cfg, super::ENSEMBLE_FILE);
    let ensemble = super::load_ensemble(cfg)?;
    mf.input("ensemble", &ensemble_path);
    mf.seed(cfg.bootstrap_seed);

    let cal_cfg = cfg.calibration_config(ensemble.n);
    mf.parameter("resamples", cal_cfg.resamples);
    mf.parameter("cap_moments", cal_cfg.cap_moments);
    mf.parameter("sigma_max", cfg.sigma_max);
    mf.parameter(
        "regressor",
        match cal_cfg.regressor {
            TimeRegressor::ShiftedLog => "shifted",
            TimeRegressor::PlainLog => "plain",
        },
    );

    let result = calibrate(&ensemble, &cal_cfg)?;
    let alpha_se = result.tail.covariance[0][0].sqrt();
    let beta_se = result.tail.covariance[1][1].sqrt();
    mf.parameter("alpha", result.params.alpha);
    mf.parameter("beta", result.params.beta);
    mf.parameter("D", result.params.d);
    mf.parameter("alpha_se", alpha_se);
    mf.parameter("beta_se", beta_se);
    mf.parameter("D_se", result.scaling.d_se);
    mf.parameter("histories_used", result.moments.histories_used);
    mf.parameter("tail_chi_square", result.tail.chi_square);
    mf.parameter("tail_dof", result.tail.dof);

    ensure_output_dir(cfg)?;
    let params_path = artifact_path(cfg, PARAMS_FILE);
    write_params(
        &params_path,
        &result.params,
        &[
            mf.reference(),
            format!("D_se={}", result.scaling.d_se),
            format!("alpha_se={alpha_se}"),
            format!("beta_se={beta_se}"),
            format!(
                "tail_chi_square={} dof={} bins_used={}",
                result.tail.chi_square, result.tail.dof, result.tail.bins_used
            ),
            format!("histories_used={}", result.moments.histories_used),
        ],
    )?;
    mf.output(&params_path);

    let gamma_path = artifact_path(cfg, GAMMA_FILE);
    let gamma_rows: Vec<Vec<f64>> =
        result.scaling.gamma.iter().map(|g| vec![g.q, g.gamma, g.se]).collect();
    write_table(
        &gamma_path,
        &[
            mf.reference(),
            format!("D={}", result.params.d),
            format!("D_se={}", result.scaling.d_se),
        ],
        "q,gamma,se",
        &gamma_rows,
    )?;
    mf.output(&gamma_path);

    // One row per horizon and non-empty bin of the collapsed histogram;
    // the g column is the fitted scaling function at the bin center.
    let hist = &result.histogram;
    let mut collapse_rows = Vec::new();
    for (layer, &t) in hist.t_set.iter().enumerate() {
        for bin in &hist.bins {
            if bin.per_t[layer] > 0.0 {
                collapse_rows.push(vec![
                    t as f64,
                    bin.center,
                    hist.layer_density(bin, layer),
                    scaling_function_g(bin.center, &result.params),
                ]);
            }
        }
    }
    let collapse_path = artifact_path(cfg, COLLAPSE_FILE);
    write_table(
        &collapse_path,
        &[
            mf.reference(),
            format!("alpha={} beta={} D={}", result.params.alpha, result.params.beta, result.params.d),
            format!("bin_width={}", hist.width),
        ],
        "t,x,density,g",
        &collapse_rows,
    )?;
    mf.output(&collapse_path);

    if cfg.svg {
        let scaling_pts: Vec<(f64, f64, f64)> =
            result.scaling.gamma.iter().map(|g| (g.q, g.gamma, g.se)).collect();
        let scaling_path = artifact_path(cfg, "figure_scaling.svg");
        write_plot(&scaling_path, &scaling_figure(&scaling_pts, result.params.d))?;
        mf.output(&scaling_path);

        let layers: Vec<(usize, Vec<(f64, f64)>)> = hist
            .t_set
            .iter()
            .enumerate()
            .map(|(layer, &t)| {
                let pts = hist
                    .bins
                    .iter()
                    .filter(|b| b.per_t[layer] > 0.0)
                    .map(|b| (b.center, hist.layer_density(b, layer)))
                    .collect();
                (t, pts)
            })
            .collect();
        let g_curve: Vec<(f64, f64)> = hist
            .bins
            .iter()
            .map(|b| (b.center, scaling_function_g(b.center, &result.params)))
            .collect();
        let collapse_fig_path = artifact_path(cfg, "figure_collapse.svg");
        write_plot(&collapse_fig_path, &collapse_figure(&layers, g_curve))?;
        mf.output(&collapse_fig_path);
    }
    mf.write(&cfg.output_dir)?;
    println!(
        "calibrate: D={:.4} (se {:.4}), alpha={:.3} (se {:.3}), beta={:.5} (se {:.5}) \
         from {} histories",
        result.params.d,
        result.scaling.d_se,
        result.params.alpha,
        alpha_se,
        result.params.beta,
        beta_se,
        result.moments.histories_used
    );
    Ok(())
}
