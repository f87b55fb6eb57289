//! `simulate`: draw a synthetic return ensemble from the model.

use aftershock_core::market::write_ensemble;
use aftershock_core::model::{read_params, sample::sample_ensemble};
use aftershock_core::Result;

use super::{artifact_path, ensure_output_dir, require_artifact, ENSEMBLE_FILE};
use crate::config::RunConfig;
use crate::manifest::ManifestBuilder;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let mut mf = ManifestBuilder::new("simulate");
    let params = match &cfg.sim_params {
        Some(path) => {
            require_artifact(path, "calibrate")?;
            mf.input("params", path);
            read_params(path)?
        }
        None => cfg.builtin_params()?,
    };
    mf.seed(cfg.sim_seed);
    mf.parameter("count", cfg.sim_count);
    mf.parameter("alpha", params.alpha);
    mf.parameter("beta", params.beta);
    mf.parameter("D", params.d);
    mf.parameter("n", params.n);

    let ensemble = sample_ensemble(&params, cfg.sim_count, cfg.sim_seed)?;
    ensure_output_dir(cfg)?;
    let out_path = artifact_path(cfg, ENSEMBLE_FILE);
    let comments = vec![
        mf.reference(),
        format!("seed={}", cfg.sim_seed),
        format!(
            "params: alpha={} beta={} D={} n={}",
            params.alpha, params.beta, params.d, params.n
        ),
    ];
    write_ensemble(&out_path, &ensemble, &comments)?;
    mf.output(&out_path);
    mf.write(&cfg.output_dir)?;
    println!(
        "simulate: {} histories (seed {}) -> {}",
        ensemble.len(),
        cfg.sim_seed,
        out_path.display()
    );
    Ok(())
}
