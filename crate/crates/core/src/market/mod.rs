//! Intraday price ingestion and the daily-ensemble construction rules.
//!
//! A trading day contributes one history of n ten-minute log-returns taken on
//! a fixed session grid. Days missing any grid price are dropped whole:
//! the per-bar index t is structural (it drives the non-stationary scale
//! profile), so imputation would shift every later bar.

mod io;

pub use io::{read_ensemble, write_ensemble};

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, FixedOffset, NaiveDate, NaiveTime, Timelike};

use crate::error::{Error, Result};

/// One observed index level with an explicit UTC offset.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTick {
    pub timestamp: DateTime<FixedOffset>,
    pub price: f64,
}

/// The intraday sampling grid: `bars` returns need `bars + 1` prices at
/// `open, open + step, ..., open + bars * step` in exchange-local time.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionGrid {
    pub open: NaiveTime,
    pub bar_minutes: u32,
    pub bars: usize,
}

impl SessionGrid {
    pub fn new(open: NaiveTime, bar_minutes: u32, bars: usize) -> Result<Self> {
        if bar_minutes == 0 {
            return Err(Error::Config("bar duration must be positive".into()));
        }
        if bars == 0 {
            return Err(Error::Config("session must contain at least one bar".into()));
        }
        let span = bar_minutes as i64 * bars as i64;
        let open_minute = open.hour() as i64 * 60 + open.minute() as i64;
        if open.second() != 0 || open.nanosecond() != 0 {
            return Err(Error::Config("session open must fall on a whole minute".into()));
        }
        if open_minute + span >= 24 * 60 {
            return Err(Error::Config(format!(
                "session of {bars} bars x {bar_minutes} min starting {open} runs past midnight"
            )));
        }
        Ok(SessionGrid { open, bar_minutes, bars })
    }

    /// 9:40-13:00 local, ten-minute bars, n = 20.
    pub fn default_session() -> Self {
        SessionGrid {
            open: NaiveTime::from_hms_opt(9, 40, 0).expect("valid constant"),
            bar_minutes: 10,
            bars: 20,
        }
    }

    /// Index of the grid point at `time`, if `time` lies exactly on the grid.
    fn slot(&self, time: NaiveTime) -> Option<usize> {
        if time.second() != 0 || time.nanosecond() != 0 {
            return None;
        }
        let minutes = (time.hour() * 60 + time.minute()) as i64
            - (self.open.hour() * 60 + self.open.minute()) as i64;
        if minutes < 0 || minutes % self.bar_minutes as i64 != 0 {
            return None;
        }
        let k = (minutes / self.bar_minutes as i64) as usize;
        (k <= self.bars).then_some(k)
    }
}

/// Grid prices observed on one calendar date; `None` marks a missing bar.
#[derive(Debug, Clone, PartialEq)]
pub struct DayTicks {
    pub date: NaiveDate,
    pub prices: Vec<Option<f64>>,
}

impl DayTicks {
    pub fn is_complete(&self) -> bool {
        self.prices.iter().all(Option::is_some)
    }
}

/// Parse result: every observed day, complete or not, in date order.
#[derive(Debug, Clone)]
pub struct GroupedTicks {
    pub grid: SessionGrid,
    pub days: Vec<DayTicks>,
}

impl GroupedTicks {
    pub fn incomplete_dates(&self) -> Vec<NaiveDate> {
        self.days.iter().filter(|d| !d.is_complete()).map(|d| d.date).collect()
    }
}

/// One day's vector of n log-returns, t = 0..n-1 in ten-minute units.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyHistory {
    pub date: NaiveDate,
    pub returns: Vec<f64>,
}

/// The collection of daily histories, all of one length, unique dates.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub histories: Vec<DailyHistory>,
    pub n: usize,
}

impl Ensemble {
    /// Validating constructor; use instead of building the struct directly.
    pub fn new(histories: Vec<DailyHistory>, n: usize) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for h in &histories {
            if h.returns.len() != n {
                return Err(Error::Data(format!(
                    "history {} has {} returns, expected {n}",
                    h.date,
                    h.returns.len()
                )));
            }
            if seen.insert(h.date, ()).is_some() {
                return Err(Error::Data(format!("duplicate date {}", h.date)));
            }
        }
        Ok(Ensemble { histories, n })
    }

    pub fn len(&self) -> usize {
        self.histories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histories.is_empty()
    }
}

/// Thresholds defining main shocks and aftershocks, in return units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockSpec {
    pub sigma_m: f64,
    pub sigma_a: f64,
    pub sigma_max: f64,
}

impl ShockSpec {
    pub fn new(sigma_m: f64, sigma_a: f64, sigma_max: f64) -> Result<Self> {
        if !(sigma_a > 0.0 && sigma_a <= sigma_m && sigma_m <= sigma_max) {
            return Err(Error::Config(format!(
                "thresholds must satisfy 0 < sigma_a <= sigma_m <= sigma_max, \
                 got sigma_a={sigma_a:e} sigma_m={sigma_m:e} sigma_max={sigma_max:e}"
            )));
        }
        Ok(ShockSpec { sigma_m, sigma_a, sigma_max })
    }
}

/// Outcome of main-shock selection. `selected`, `below_threshold`, and
/// `over_cap` partition the input ensemble.
#[derive(Debug, Clone)]
pub struct Selection {
    /// Qualifying histories paired with their |r_0|.
    pub selected: Vec<(DailyHistory, f64)>,
    pub below_threshold: usize,
    pub over_cap: usize,
}

/// Log-returns of a consecutive price path: r[t] = ln p[t+1] - ln p[t].
/// Accepts any path of >= 2 prices; window-length policy is the caller's.
pub fn log_returns(prices: &[f64]) -> Result<Vec<f64>> {
    if prices.len() < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 prices for a return, got {}",
            prices.len()
        )));
    }
    for (i, &p) in prices.iter().enumerate() {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Data(format!("non-positive price {p:e} at grid point {i}")));
        }
    }
    Ok(prices.windows(2).map(|w| w[1].ln() - w[0].ln()).collect())
}

/// Read `timestamp,price` CSV rows and place each tick on the session grid,
/// grouped by exchange-local calendar date. Ticks between grid points are
/// ignored; a grid point hit twice keeps its first price. Days missing any
/// grid point are retained (flagged incomplete) for diagnostics.
pub fn parse_price_file(path: &Path, grid: &SessionGrid) -> Result<GroupedTicks> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut days: Vec<DayTicks> = Vec::new();
    let mut index: BTreeMap<NaiveDate, usize> = BTreeMap::new();
    let mut last_ts: Option<DateTime<FixedOffset>> = None;
    let mut header_seen = false;

    for (line_idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = line_idx as u64 + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !header_seen {
            header_seen = true;
            let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if cols != ["timestamp", "price"] {
                return Err(Error::Parse {
                    path: path.into(),
                    line: line_no,
                    msg: format!("expected header 'timestamp,price', got '{trimmed}'"),
                });
            }
            continue;
        }
        let (ts_field, price_field) = trimmed.split_once(',').ok_or_else(|| Error::Parse {
            path: path.into(),
            line: line_no,
            msg: "expected two comma-separated fields".into(),
        })?;
        let timestamp =
            DateTime::parse_from_rfc3339(ts_field.trim()).map_err(|e| Error::Parse {
                path: path.into(),
                line: line_no,
                msg: format!("bad timestamp '{}': {e}", ts_field.trim()),
            })?;
        let price: f64 = price_field.trim().parse().map_err(|e| Error::Parse {
            path: path.into(),
            line: line_no,
            msg: format!("bad price '{}': {e}", price_field.trim()),
        })?;
        let date = timestamp.date_naive();
        if let Some(prev) = last_ts {
            if timestamp < prev {
                return Err(Error::Data(format!(
                    "timestamps go backwards on {date} (line {line_no})"
                )));
            }
        }
        last_ts = Some(timestamp);
        if !(price > 0.0) || !price.is_finite() {
            return Err(Error::Data(format!(
                "non-positive price {price} on {date} (line {line_no})"
            )));
        }
        let Some(slot) = grid.slot(timestamp.time()) else {
            continue;
        };
        let day_idx = *index.entry(date).or_insert_with(|| {
            days.push(DayTicks { date, prices: vec![None; grid.bars + 1] });
            days.len() - 1
        });
        let cell = &mut days[day_idx].prices[slot];
        if cell.is_none() {
            *cell = Some(price);
        }
    }
    Ok(GroupedTicks { grid: grid.clone(), days })
}

/// Outcome of [`build_daily_histories`]; dropped dates are kept for reporting.
#[derive(Debug, Clone)]
pub struct BuildOutcome {
    pub ensemble: Ensemble,
    pub dropped: Vec<NaiveDate>,
}

/// Turn complete days into daily histories of n = grid.bars log-returns.
/// Incomplete days are dropped and listed, never padded.
pub fn build_daily_histories(grouped: &GroupedTicks, n: usize) -> Result<BuildOutcome> {
    if n < 2 {
        return Err(Error::Config(format!(
            "window length must be at least 2 bars, got {n}; \
             single-bar paths are served by log_returns directly"
        )));
    }
    if n != grouped.grid.bars {
        return Err(Error::Config(format!(
            "window length {n} does not match the session grid of {} bars",
            grouped.grid.bars
        )));
    }
    let mut histories = Vec::new();
    let mut dropped = Vec::new();
    for day in &grouped.days {
        if day.is_complete() {
            let prices: Vec<f64> = day.prices.iter().map(|p| p.expect("complete day")).collect();
            histories.push(DailyHistory { date: day.date, returns: log_returns(&prices)? });
        } else {
            dropped.push(day.date);
        }
    }
    Ok(BuildOutcome { ensemble: Ensemble::new(histories, n)?, dropped })
}

/// Split the ensemble by opening return: main shocks are histories with
/// sigma_m <= |r_0| <= sigma_max; |r_0| > sigma_max is counted separately
/// (volatility beyond the cap is outside the model's fitted range).
pub fn select_main_shocks(ensemble: &Ensemble, spec: &ShockSpec) -> Result<Selection> {
    if ensemble.is_empty() {
        return Err(Error::Domain("cannot select shocks from an empty ensemble".into()));
    }
    let mut selection =
        Selection { selected: Vec::new(), below_threshold: 0, over_cap: 0 };
    for h in &ensemble.histories {
        let r0 = h.returns[0].abs();
        if r0 > spec.sigma_max {
            selection.over_cap += 1;
        } else if r0 >= spec.sigma_m {
            selection.selected.push((h.clone(), r0));
        } else {
            selection.below_threshold += 1;
        }
    }
    Ok(selection)
}

/// Back-solve the main-shock threshold that selects exactly `count` histories
/// (those with the largest |r_0| at or under the cap). Returns that |r_0|
/// quantile, so select_main_shocks with the result yields `count` histories
/// whenever the surrounding |r_0| values are distinct.
pub fn threshold_for_count(ensemble: &Ensemble, count: usize, sigma_max: f64) -> Result<f64> {
    if count == 0 {
        return Err(Error::Config("target selection count must be positive".into()));
    }
    let mut magnitudes: Vec<f64> = ensemble
        .histories
        .iter()
        .map(|h| h.returns[0].abs())
        .filter(|&r| r <= sigma_max)
        .collect();
    if magnitudes.len() < count {
        return Err(Error::Config(format!(
            "cannot select {count} shocks: only {} histories under the cap",
            magnitudes.len()
        )));
    }
    magnitudes.sort_by(f64::total_cmp);
    Ok(magnitudes[magnitudes.len() - count])
}

/// `threshold_for_count` with the count taken as a fraction of the ensemble.
pub fn threshold_for_frequency(
    ensemble: &Ensemble,
    frequency: f64,
    sigma_max: f64,
) -> Result<f64> {
    if !(frequency > 0.0 && frequency <= 1.0) {
        return Err(Error::Config(format!(
            "selection frequency must lie in (0, 1], got {frequency}"
        )));
    }
    let count = ((frequency * ensemble.len() as f64).round() as usize).max(1);
    threshold_for_count(ensemble, count, sigma_max)
}
