//! Histogram data collapse and the Student tail fit.
//!
//! Aggregate returns at several horizons, each rescaled by (t+1)^D, are
//! pooled into one histogram; when D is right they share a single shape g,
//! and a weighted least-squares fit of ln g to the pooled log-density
//! recovers (alpha, beta).

use std::collections::BTreeMap;

use crate::calibrate::validate_t_grid;
use crate::error::{Error, Result};
use crate::market::Ensemble;
use crate::model::ln_scaling_function;
use crate::numeric::lm::{self, LmOptions};
use crate::numeric::nelder;
use crate::numeric::stats::variance_rule_bin_width;

#[derive(Debug, Clone)]
pub struct CollapseConfig {
    /// Horizons pooled into the collapse.
    pub t_set: Vec<usize>,
    /// Fixed bin width; `None` selects the variance-based rule on the pooled
    /// rescaled sample.
    pub bin_width: Option<f64>,
    /// Bins with fewer pooled counts are excluded from the tail fit.
    pub min_count: f64,
}

impl Default for CollapseConfig {
    fn default() -> Self {
        CollapseConfig { t_set: vec![0, 4, 9, 19], bin_width: None, min_count: 5.0 }
    }
}

/// One histogram bin. Counts are f64 so synthetic noiseless histograms can
/// carry exact expected occupancies.
#[derive(Debug, Clone)]
pub struct HistogramBin {
    /// Integer bin index: the bin spans [(index-1/2) w, (index+1/2) w].
    pub index: i64,
    pub center: f64,
    /// Pooled count across all horizons.
    pub count: f64,
    /// Count per horizon, aligned with `t_set`.
    pub per_t: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CollapsedHistogram {
    pub t_set: Vec<usize>,
    pub width: f64,
    /// Sorted by bin index; empty bins are not materialized.
    pub bins: Vec<HistogramBin>,
    /// Sample size per horizon.
    pub totals_per_t: Vec<f64>,
    /// Pooled sample size.
    pub total: f64,
}

impl CollapsedHistogram {
    /// Pooled probability density at a bin.
    pub fn pooled_density(&self, bin: &HistogramBin) -> f64 {
        bin.count / (self.total * self.width)
    }

    /// Per-horizon probability density at a bin.
    pub fn layer_density(&self, bin: &HistogramBin, layer: usize) -> f64 {
        bin.per_t[layer] / (self.totals_per_t[layer] * self.width)
    }
}

/// Pool rescaled aggregates S_t (t+1)^{-D} over the configured horizons into
/// a uniform-width histogram. The cap drops whole histories (any bar over
/// sigma_max), matching the moment-estimation filter.
pub fn collapse_histogram(
    ensemble: &Ensemble,
    d: f64,
    sigma_max: Option<f64>,
    config: &CollapseConfig,
) -> Result<CollapsedHistogram> {
    if !d.is_finite() {
        return Err(Error::Domain(format!("scaling exponent must be finite, got {d}")));
    }
    validate_t_grid(&config.t_set, ensemble.n)?;

    let mut pooled = Vec::new();
    let mut per_layer: Vec<Vec<f64>> = vec![Vec::new(); config.t_set.len()];
    for h in &ensemble.histories {
        if let Some(cap) = sigma_max {
            if h.returns.iter().any(|r| r.abs() > cap) {
                continue;
            }
        }
        let mut cum = Vec::with_capacity(ensemble.n);
        let mut acc = 0.0;
        for r in &h.returns {
            acc += r;
            cum.push(acc);
        }
        for (layer, &t) in config.t_set.iter().enumerate() {
            let x = cum[t] / ((t + 1) as f64).powf(d);
            pooled.push(x);
            per_layer[layer].push(x);
        }
    }
    if pooled.is_empty() {
        return Err(Error::Data("no histories remain under the cap".into()));
    }

    let width = match config.bin_width {
        Some(w) => w,
        None => variance_rule_bin_width(&pooled),
    };
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::Data(format!(
            "degenerate bin width {width:e} (constant sample or bad configuration)"
        )));
    }

    let mut map: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for (layer, xs) in per_layer.iter().enumerate() {
        for &x in xs {
            let idx = (x / width).round() as i64;
            map.entry(idx).or_insert_with(|| vec![0.0; config.t_set.len()])[layer] += 1.0;
        }
    }
    let bins: Vec<HistogramBin> = map
        .into_iter()
        .map(|(index, per_t)| HistogramBin {
            index,
            center: index as f64 * width,
            count: per_t.iter().sum(),
            per_t,
        })
        .collect();
    let totals_per_t: Vec<f64> =
        (0..config.t_set.len()).map(|l| bins.iter().map(|b| b.per_t[l]).sum()).collect();
    let total = bins.iter().map(|b| b.count).sum();
    Ok(CollapsedHistogram { t_set: config.t_set.clone(), width, bins, totals_per_t, total })
}

#[derive(Debug, Clone)]
pub struct TailFit {
    pub alpha: f64,
    pub beta: f64,
    /// 2x2 covariance of (alpha, beta) from the Gauss-Newton approximation.
    pub covariance: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub chi_square: f64,
    pub dof: usize,
    pub bins_used: usize,
    pub iterations: usize,
}

/// Bins entering the fit: the contiguous run of bins around the occupancy
/// peak whose pooled counts stay at or above `min_count`.
///
/// Contiguity matters: in the far tail, keeping only the isolated bins that
/// fluctuate up to the threshold (while gaps around them are dropped) would
/// select upward noise and systematically fatten the fitted tail.
fn usable_bins(hist: &CollapsedHistogram, min_count: f64) -> Vec<usize> {
    let Some(peak) = (0..hist.bins.len())
        .max_by(|&i, &j| hist.bins[i].count.total_cmp(&hist.bins[j].count))
    else {
        return Vec::new();
    };
    if hist.bins[peak].count < min_count {
        return Vec::new();
    }
    let adjacent = |i: usize, j: usize| hist.bins[i].index + 1 == hist.bins[j].index;
    let mut lo = peak;
    while lo > 0 && adjacent(lo - 1, lo) && hist.bins[lo - 1].count >= min_count {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < hist.bins.len() && adjacent(hi, hi + 1) && hist.bins[hi + 1].count >= min_count
    {
        hi += 1;
    }
    (lo..=hi).collect()
}

/// Weighted least squares of ln g against the pooled log-density.
/// Weights are bin counts (the Poisson variance of a log-count is ~1/count);
/// iteration runs in (ln alpha, ln beta) to keep both parameters positive.
pub fn fit_tail(hist: &CollapsedHistogram, min_count: f64) -> Result<TailFit> {
    let used = usable_bins(hist, min_count);
    if used.len() < 6 {
        return Err(Error::Fit(format!(
            "tail fit needs at least 6 usable bins, got {} (min count {min_count})",
            used.len()
        )));
    }
    let xs: Vec<f64> = used.iter().map(|&i| hist.bins[i].center).collect();
    let ys: Vec<f64> = used.iter().map(|&i| hist.pooled_density(&hist.bins[i]).ln()).collect();
    let ws: Vec<f64> = used.iter().map(|&i| hist.bins[i].count.sqrt()).collect();

    let problem = |theta: &[f64], out: &mut Vec<f64>| -> Result<()> {
        let (alpha, beta) = (theta[0].exp(), theta[1].exp());
        out.clear();
        out.extend(
            xs.iter()
                .zip(&ys)
                .zip(&ws)
                .map(|((&x, &y), &w)| w * (ln_scaling_function(x, alpha, beta) - y)),
        );
        Ok(())
    };

    // Initial width from the histogram itself: weighted spread of centers.
    let mean: f64 = used.iter().map(|&i| hist.bins[i].center * hist.bins[i].count).sum::<f64>()
        / used.iter().map(|&i| hist.bins[i].count).sum::<f64>();
    let var: f64 = used
        .iter()
        .map(|&i| hist.bins[i].count * (hist.bins[i].center - mean).powi(2))
        .sum::<f64>()
        / used.iter().map(|&i| hist.bins[i].count).sum::<f64>();
    let beta0 = var.sqrt().max(hist.width);
    let fit = lm::fit(&problem, &[3.0f64.ln(), beta0.ln()], &LmOptions::unbounded(2))?;

    let (alpha, beta) = (fit.theta[0].exp(), fit.theta[1].exp());
    // Delta method from (ln alpha, ln beta) to (alpha, beta).
    let p = [alpha, beta];
    let covariance: Vec<Vec<f64>> = (0..2)
        .map(|i| (0..2).map(|j| p[i] * p[j] * fit.covariance[i][j]).collect())
        .collect();
    Ok(TailFit {
        alpha,
        beta,
        covariance,
        residuals: fit.residuals,
        chi_square: fit.chi_square,
        dof: used.len().saturating_sub(2),
        bins_used: used.len(),
        iterations: fit.iterations,
    })
}

/// Collapse with the given D, then fit the tail form on the pooled histogram.
pub fn collapse_and_fit_tail(
    ensemble: &Ensemble,
    d: f64,
    sigma_max: Option<f64>,
    config: &CollapseConfig,
) -> Result<(TailFit, CollapsedHistogram)> {
    let hist = collapse_histogram(ensemble, d, sigma_max, config)?;
    let fit = fit_tail(&hist, config.min_count)?;
    Ok((fit, hist))
}

#[derive(Debug, Clone)]
pub struct MleFit {
    pub alpha: f64,
    pub beta: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
}

/// Maximum-likelihood (alpha, beta) on a raw sample from g, as an
/// independent cross-check of the histogram fit. Simplex search on the
/// negative log-likelihood in (ln alpha, ln beta).
pub fn student_mle(sample: &[f64], alpha0: f64, beta0: f64) -> Result<MleFit> {
    if sample.len() < 10 {
        return Err(Error::Domain(format!(
            "likelihood fit needs at least 10 points, got {}",
            sample.len()
        )));
    }
    if !(alpha0 > 0.0 && beta0 > 0.0) {
        return Err(Error::Config(format!(
            "initial guess must be positive, got alpha={alpha0} beta={beta0}"
        )));
    }
    let nll = |theta: &[f64]| -> f64 {
        let (alpha, beta) = (theta[0].exp(), theta[1].exp());
        -sample.iter().map(|&x| ln_scaling_function(x, alpha, beta)).sum::<f64>()
    };
    let res = nelder::minimize(nll, &[alpha0.ln(), beta0.ln()], &[0.3, 0.3], 1e-10, 5000)?;
    Ok(MleFit {
        alpha: res.x[0].exp(),
        beta: res.x[1].exp(),
        log_likelihood: -res.fmin,
        iterations: res.iterations,
    })
}
