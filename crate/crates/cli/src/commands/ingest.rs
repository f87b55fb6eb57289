//! `ingest`: intraday price CSV -> return ensemble.

use aftershock_core::market::{build_daily_histories, parse_price_file, write_ensemble};
use aftershock_core::{Error, Result};

use super::{artifact_path, ensure_output_dir, ENSEMBLE_FILE};
use crate::config::RunConfig;
use crate::manifest::ManifestBuilder;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let input = cfg.input.clone().ok_or_else(|| {
        Error::Config("ingest needs a price file; set input=<path>".into())
    })?;
    let mut mf = ManifestBuilder::new("ingest");
    mf.input("prices", &input);
    mf.parameter("session_open", cfg.session_open.format("%H:%M"));
    mf.parameter("bar_minutes", cfg.bar_minutes);
    mf.parameter("bars", cfg.bars);

    let grid = cfg.session_grid()?;
    let grouped = parse_price_file(&input, &grid)?;
    let outcome = build_daily_histories(&grouped, cfg.bars)?;
    mf.parameter("days_complete", outcome.ensemble.len());
    mf.parameter("days_dropped_incomplete", outcome.dropped.len());

    ensure_output_dir(cfg)?;
    let out_path = artifact_path(cfg, ENSEMBLE_FILE);
    let mut comments = vec![
        mf.reference(),
        format!("source={}", input.display()),
        format!("days_dropped_incomplete={}", outcome.dropped.len()),
    ];
    for date in &outcome.dropped {
        comments.push(format!("dropped={date}"));
    }
    write_ensemble(&out_path, &outcome.ensemble, &comments)?;
    mf.output(&out_path);
    mf.write(&cfg.output_dir)?;
    println!(
        "ingest: {} complete days -> {} ({} incomplete dropped)",
        outcome.ensemble.len(),
        out_path.display(),
        outcome.dropped.len()
    );
    Ok(())
}
