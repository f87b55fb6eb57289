//! Run configuration: a flat key=value file plus `--set` overrides.
//!
//! Every run is reproducible from the config alone, so the parser surface is
//! deliberately small: one `key=value` per line, `#` comments, no sections,
//! no quoting. Overrides use the same syntax and always win over the file.

use std::path::{Path, PathBuf};

use aftershock_core::calibrate::{CalibrationConfig, TimeRegressor};
use aftershock_core::market::{threshold_for_count, Ensemble, SessionGrid};
use aftershock_core::model::ModelParams;
use aftershock_core::numeric::lm::DEFAULT_REL_STEP_TOL;
use aftershock_core::omori::PREDICTION_ABS_TOL;
use aftershock_core::{Error, Result};
use chrono::NaiveTime;

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Price CSV consumed by `ingest`.
    pub input: Option<PathBuf>,
    /// Directory receiving every artifact and manifest.
    pub output_dir: PathBuf,
    pub session_open: NaiveTime,
    pub bar_minutes: u32,
    /// Bars per day; histories carry this many returns.
    pub bars: usize,
    /// Explicit main-shock threshold. Mutually exclusive with `shock_count`.
    pub sigma_m: Option<f64>,
    /// Main-shock count to back-solve the threshold from the ensemble.
    pub shock_count: Option<usize>,
    pub sigma_max: f64,
    pub sigma_a_list: Vec<f64>,
    /// Moment orders; `None` keeps the calibration default.
    pub q_grid: Option<Vec<f64>>,
    /// Horizons entering the moment regression; `None` keeps the default.
    pub moment_t_grid: Option<Vec<usize>>,
    /// Horizons pooled into the collapse histogram; `None` keeps the default.
    pub collapse_t_set: Option<Vec<usize>>,
    /// Histogram bin width; `None` selects the variance-based rule.
    pub bin_width: Option<f64>,
    pub min_count: f64,
    pub regressor: TimeRegressor,
    pub cap_moments: bool,
    pub resamples: usize,
    pub bootstrap_seed: u64,
    pub sim_count: usize,
    pub sim_seed: u64,
    /// Parameter file for `simulate`; `None` draws from the built-in values.
    pub sim_params: Option<PathBuf>,
    /// Prediction horizon; `None` extends to the last bar.
    pub t_max: Option<usize>,
    /// Emit SVG plots next to the CSV artifacts.
    pub svg: bool,
    /// Absolute quadrature tolerance of one predicted band probability.
    /// Pinned by the prediction routine and recorded here for manifests.
    pub quadrature_tol: f64,
    /// Relative-step convergence tolerance of the nonlinear fits, likewise
    /// pinned and recorded.
    pub fit_rel_step_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            output_dir: PathBuf::from("out"),
            session_open: NaiveTime::from_hms_opt(9, 40, 0).expect("valid constant"),
            bar_minutes: 10,
            bars: 20,
            sigma_m: None,
            shock_count: None,
            sigma_max: 0.02,
            sigma_a_list: vec![4e-3, 5e-3, 6e-3, 7e-3],
            q_grid: None,
            moment_t_grid: None,
            collapse_t_set: None,
            bin_width: None,
            min_count: 5.0,
            regressor: TimeRegressor::ShiftedLog,
            cap_moments: true,
            resamples: 200,
            bootstrap_seed: 0,
            sim_count: 6283,
            sim_seed: 42,
            sim_params: None,
            t_max: None,
            svg: false,
            quadrature_tol: PREDICTION_ABS_TOL,
            fit_rel_step_tol: DEFAULT_REL_STEP_TOL,
        }
    }
}

fn bad_value(key: &str, value: &str, want: &str) -> Error {
    Error::Config(format!("config key `{key}`: expected {want}, got '{value}'"))
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value.parse().map_err(|_| bad_value(key, value, "a number"))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value.parse().map_err(|_| bad_value(key, value, "a non-negative integer"))
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value.parse().map_err(|_| bad_value(key, value, "a non-negative integer"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad_value(key, value, "true or false")),
    }
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| parse_f64(key, v.trim()))
        .collect::<Result<Vec<_>>>()
        .and_then(|list| {
            if list.is_empty() {
                Err(bad_value(key, value, "a comma-separated list of numbers"))
            } else {
                Ok(list)
            }
        })
}

fn parse_usize_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value.split(',').map(|v| parse_usize(key, v.trim())).collect()
}

impl RunConfig {
    /// Defaults, then the file (if any), then the overrides, then validation.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read config file {}: {e}", path.display()))
            })?;
            for (idx, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::Config(format!(
                        "{}:{}: expected key=value, got '{line}'",
                        path.display(),
                        idx + 1
                    ))
                })?;
                cfg.apply(key.trim(), value.trim())?;
            }
        }
        for entry in overrides {
            let (key, value) = entry.split_once('=').ok_or_else(|| {
                Error::Config(format!("--set expects key=value, got '{entry}'"))
            })?;
            cfg.apply(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "input" => self.input = Some(PathBuf::from(value)),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "session_open" => {
                self.session_open = NaiveTime::parse_from_str(value, "%H:%M")
                    .map_err(|_| bad_value(key, value, "a time like 09:40"))?
            }
            "bar_minutes" => {
                self.bar_minutes = value
                    .parse()
                    .map_err(|_| bad_value(key, value, "a positive integer"))?
            }
            "bars" => self.bars = parse_usize(key, value)?,
            "sigma_m" => self.sigma_m = Some(parse_f64(key, value)?),
            "shock_count" => self.shock_count = Some(parse_usize(key, value)?),
            "sigma_max" => self.sigma_max = parse_f64(key, value)?,
            "sigma_a_list" => self.sigma_a_list = parse_f64_list(key, value)?,
            "q_grid" => self.q_grid = Some(parse_f64_list(key, value)?),
            "moment_t_grid" => self.moment_t_grid = Some(parse_usize_list(key, value)?),
            "collapse_t_set" => self.collapse_t_set = Some(parse_usize_list(key, value)?),
            "bin_width" => self.bin_width = Some(parse_f64(key, value)?),
            "min_count" => self.min_count = parse_f64(key, value)?,
            "regressor" => {
                self.regressor = match value {
                    "shifted" => TimeRegressor::ShiftedLog,
                    "plain" => TimeRegressor::PlainLog,
                    _ => return Err(bad_value(key, value, "shifted or plain")),
                }
            }
            "cap_moments" => self.cap_moments = parse_bool(key, value)?,
            "resamples" => self.resamples = parse_usize(key, value)?,
            "bootstrap_seed" => self.bootstrap_seed = parse_u64(key, value)?,
            "sim_count" => self.sim_count = parse_usize(key, value)?,
            "sim_seed" => self.sim_seed = parse_u64(key, value)?,
            "sim_params" => self.sim_params = Some(PathBuf::from(value)),
            "t_max" => self.t_max = Some(parse_usize(key, value)?),
            "svg" => self.svg = parse_bool(key, value)?,
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.bars < 2 {
            return fail(format!("bars: need at least 2 bars per day, got {}", self.bars));
        }
        if self.bar_minutes == 0 {
            return fail("bar_minutes: must be positive".into());
        }
        if !(self.sigma_max > 0.0 && self.sigma_max.is_finite()) {
            return fail(format!("sigma_max: must be positive, got {:e}", self.sigma_max));
        }
        for &s in &self.sigma_a_list {
            if !(s > 0.0 && s.is_finite()) {
                return fail(format!("sigma_a_list: thresholds must be positive, got {s:e}"));
            }
        }
        if let Some(s) = self.sigma_m {
            if !(s > 0.0 && s.is_finite()) {
                return fail(format!("sigma_m: must be positive, got {s:e}"));
            }
            if self.shock_count.is_some() {
                return fail("sigma_m and shock_count are mutually exclusive; set one".into());
            }
        }
        if self.shock_count == Some(0) {
            return fail("shock_count: must be positive".into());
        }
        if let Some(q) = &self.q_grid {
            for &v in q {
                if !(v > 0.0 && v.is_finite()) {
                    return fail(format!("q_grid: orders must be positive, got {v:e}"));
                }
            }
        }
        if let Some(w) = self.bin_width {
            if !(w > 0.0 && w.is_finite()) {
                return fail(format!("bin_width: must be positive, got {w:e}"));
            }
        }
        if !(self.min_count > 0.0 && self.min_count.is_finite()) {
            return fail(format!("min_count: must be positive, got {:e}", self.min_count));
        }
        if self.resamples == 0 {
            return fail("resamples: bootstrap needs at least 1 resample".into());
        }
        if self.sim_count == 0 {
            return fail("sim_count: must be positive".into());
        }
        if let Some(t) = self.t_max {
            if t == 0 || t >= self.bars {
                return fail(format!(
                    "t_max: must lie in 1..{} (bars after the main shock), got {t}",
                    self.bars
                ));
            }
        }
        if !(self.quadrature_tol > 0.0 && self.fit_rel_step_tol > 0.0) {
            return fail("tolerances must be positive".into());
        }
        Ok(())
    }

    pub fn session_grid(&self) -> Result<SessionGrid> {
        SessionGrid::new(self.session_open, self.bar_minutes, self.bars)
    }

    /// Calibration settings for an ensemble of length `n`: module defaults
    /// with the explicitly configured fields overriding.
    pub fn calibration_config(&self, n: usize) -> CalibrationConfig {
        let mut cal = CalibrationConfig::default_for(n);
        if let Some(q) = &self.q_grid {
            cal.q_grid = q.clone();
        }
        if let Some(t) = &self.moment_t_grid {
            cal.moment_t_grid = t.clone();
        }
        cal.sigma_max = Some(self.sigma_max);
        cal.cap_moments = self.cap_moments;
        cal.resamples = self.resamples;
        cal.bootstrap_seed = self.bootstrap_seed;
        cal.regressor = self.regressor;
        if let Some(ts) = &self.collapse_t_set {
            cal.collapse.t_set = ts.clone();
        }
        cal.collapse.bin_width = self.bin_width;
        cal.collapse.min_count = self.min_count;
        cal
    }

    /// Parameters used by `simulate` when no parameter file is configured:
    /// the built-in calibrated values at the configured bar count.
    pub fn builtin_params(&self) -> Result<ModelParams> {
        let c = ModelParams::calibrated();
        ModelParams::new(c.alpha, c.beta, c.d, self.bars)
    }

    /// The main-shock threshold: explicit, or back-solved so that exactly
    /// `shock_count` histories qualify under the cap.
    pub fn resolve_sigma_m(&self, ensemble: &Ensemble) -> Result<f64> {
        match (self.sigma_m, self.shock_count) {
            (Some(s), None) => Ok(s),
            (None, Some(count)) => threshold_for_count(ensemble, count, self.sigma_max),
            (None, None) => Err(Error::Config(
                "main-shock selection needs sigma_m or shock_count".into(),
            )),
            (Some(_), Some(_)) => unreachable!("rejected by validate"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().expect("defaults are consistent");
    }

    #[test]
    fn file_then_override_wins() {
        let dir = tempfile::tempdir().expect("tempdir");
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# comment\nsim_seed=7\nbars=10\n").expect("write");
        let cfg =
            RunConfig::load(Some(&path), &["sim_seed=9".into()]).expect("valid config");
        assert_eq!(cfg.sim_seed, 9);
        assert_eq!(cfg.bars, 10);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = RunConfig::load(None, &["sim_sead=9".into()]).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
        assert!(err.to_string().contains("sim_sead"), "{err}");
    }

    #[test]
    fn malformed_override_is_rejected() {
        let err = RunConfig::load(None, &["sim_seed".into()]).unwrap_err();
        assert!(err.to_string().contains("key=value"), "{err}");
    }

    #[test]
    fn threshold_sources_are_exclusive() {
        let err = RunConfig::load(None, &["sigma_m=0.01".into(), "shock_count=27".into()])
            .unwrap_err();
        assert!(err.to_string().contains("mutually exclusive"), "{err}");
    }

    #[test]
    fn lists_parse_with_spaces() {
        let cfg = RunConfig::load(None, &["sigma_a_list=0.004, 0.005".into()])
            .expect("valid config");
        assert_eq!(cfg.sigma_a_list, vec![0.004, 0.005]);
    }

    #[test]
    fn out_of_range_t_max_is_rejected() {
        let err = RunConfig::load(None, &["t_max=20".into()]).unwrap_err();
        assert!(err.to_string().contains("t_max"), "{err}");
    }
}
