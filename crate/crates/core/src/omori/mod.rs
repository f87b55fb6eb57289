//! Aftershock counting, the Omori law, and its fit to count curves.
//!
//! An aftershock is a later bar whose magnitude falls in the band
//! [sigma_a, |r_0|] of its own day's opening shock. Counts averaged over the
//! selected main shocks form a cumulative curve; the Omori law is the
//! phenomenological two-parameter decay fitted to such curves, and
//! [`predict`]-side routines produce the model's parameter-free counterpart.

mod predict;

pub use predict::{
    predict_average, predict_single, shock_probability, shock_probability_closed,
    PREDICTION_ABS_TOL,
};

use crate::error::{Error, Result};
use crate::market::{DailyHistory, ShockSpec};
use crate::numeric::lm::{self, LmFit, LmOptions};
use crate::numeric::stats::{mean, standard_error};

/// Omori law parameters: instantaneous rate n(t) = K (t + tau)^{-p},
/// t in ten-minute bars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmoriParams {
    pub k: f64,
    pub p: f64,
    pub tau: f64,
}

impl OmoriParams {
    pub fn new(k: f64, p: f64, tau: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Domain(format!("Omori amplitude must be positive, got {k:e}")));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::Domain(format!("Omori exponent must be positive, got {p}")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Domain(format!("Omori offset must be positive, got {tau:e}")));
        }
        Ok(OmoriParams { k, p, tau })
    }
}

/// Exponents within this distance of 1 take the logarithmic branch.
const LOG_BRANCH_WINDOW: f64 = 1e-6;

/// Cumulative Omori count N(t) = K/(1-p) ((t+tau)^{1-p} - tau^{1-p}), with
/// the branch K ln(t/tau + 1) inside |1-p| <= 1e-6.
///
/// The power branch is evaluated as
/// K tau^{1-p} expm1((1-p) ln1p(t/tau)) / (1-p), which keeps full precision
/// as p -> 1 where the textbook difference of powers cancels.
pub fn omori_cumulative(params: &OmoriParams, t: f64) -> Result<f64> {
    if !(params.tau > 0.0) {
        return Err(Error::Domain(format!("Omori offset must be positive, got {:e}", params.tau)));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("bar time must be non-negative, got {t}")));
    }
    let one_minus_p = 1.0 - params.p;
    let log_term = (t / params.tau).ln_1p();
    if one_minus_p.abs() <= LOG_BRANCH_WINDOW {
        return Ok(params.k * log_term);
    }
    Ok(params.k * params.tau.powf(one_minus_p) * (one_minus_p * log_term).exp_m1() / one_minus_p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Empirical,
    Predicted,
}

/// Cumulative aftershock counts on the bar grid t = 1..n-1.
#[derive(Debug, Clone, PartialEq)]
pub struct AftershockCurve {
    pub kind: CurveKind,
    /// Thresholds behind the curve.
    pub spec: ShockSpec,
    /// Bar indices, strictly increasing, starting at 1.
    pub t: Vec<usize>,
    /// Mean cumulative count at each index.
    pub n: Vec<f64>,
    /// Standard error of the mean; zero for analytic curves.
    pub se: Vec<f64>,
    /// Main shocks averaged into the curve.
    pub n_histories: usize,
}

impl AftershockCurve {
    /// Restrict the curve to points with positive standard error: the subset
    /// a weighted fit can use. Early bars of an empirical curve can show no
    /// dispersion at all (every history counts zero there), and such points
    /// carry no weight information.
    pub fn with_positive_errors(&self) -> AftershockCurve {
        let keep: Vec<usize> = (0..self.t.len()).filter(|&i| self.se[i] > 0.0).collect();
        AftershockCurve {
            kind: self.kind,
            spec: self.spec,
            t: keep.iter().map(|&i| self.t[i]).collect(),
            n: keep.iter().map(|&i| self.n[i]).collect(),
            se: keep.iter().map(|&i| self.se[i]).collect(),
            n_histories: self.n_histories,
        }
    }
}

/// Count aftershocks in each selected history and average.
///
/// Bar i >= 1 of history m is an aftershock when
/// sigma_a <= |r_i| <= |r_0^(m)|: large enough to clear the threshold, but
/// not larger than the day's own main shock. N(t) is the mean per-history
/// cumulative count; se is the dispersion of those per-history counts over
/// sqrt(M), not a Poisson error, because counts within a day are dependent.
pub fn empirical_counts(
    selected: &[(DailyHistory, f64)],
    spec: &ShockSpec,
) -> Result<AftershockCurve> {
    if selected.is_empty() {
        return Err(Error::Domain("aftershock counting needs at least one main shock".into()));
    }
    if !(spec.sigma_a > 0.0) {
        return Err(Error::Domain(format!(
            "aftershock threshold must be positive, got {:e}",
            spec.sigma_a
        )));
    }
    let n = selected[0].0.returns.len();
    if n < 2 {
        return Err(Error::Domain(format!(
            "histories of {n} bar(s) have no room for aftershocks"
        )));
    }
    for (h, r0_abs) in selected {
        if h.returns.len() != n {
            return Err(Error::Data(format!(
                "history {} has {} returns, expected {n}",
                h.date,
                h.returns.len()
            )));
        }
        if !(*r0_abs >= 0.0) {
            return Err(Error::Data(format!(
                "history {} carries a negative main-shock magnitude {r0_abs:e}",
                h.date
            )));
        }
    }

    // cumulative[m][t-1]: count of band bars among 1..=t in history m.
    let mut cumulative = vec![vec![0.0f64; n - 1]; selected.len()];
    for (per_history, (h, r0_abs)) in cumulative.iter_mut().zip(selected) {
        let mut acc = 0.0;
        for (slot, r) in h.returns[1..].iter().enumerate() {
            let magnitude = r.abs();
            if magnitude >= spec.sigma_a && magnitude <= *r0_abs {
                acc += 1.0;
            }
            per_history[slot] = acc;
        }
    }
    let mut curve_n = Vec::with_capacity(n - 1);
    let mut curve_se = Vec::with_capacity(n - 1);
    let mut column = vec![0.0; selected.len()];
    for slot in 0..n - 1 {
        for (c, per_history) in column.iter_mut().zip(&cumulative) {
            *c = per_history[slot];
        }
        curve_n.push(mean(&column));
        curve_se.push(if column.len() > 1 { standard_error(&column) } else { 0.0 });
    }
    Ok(AftershockCurve {
        kind: CurveKind::Empirical,
        spec: *spec,
        t: (1..n).collect(),
        n: curve_n,
        se: curve_se,
        n_histories: selected.len(),
    })
}

#[derive(Debug, Clone)]
pub struct OmoriFit {
    pub params: OmoriParams,
    /// 3x3 covariance of (K, p, tau) from the Gauss-Newton approximation.
    pub covariance: Vec<Vec<f64>>,
    /// Weighted residuals at the solution.
    pub residuals: Vec<f64>,
    pub chi_square: f64,
    pub dof: usize,
    pub iterations: usize,
}

/// Default starting point for [`fit_omori`]: matches the curve endpoint under
/// the log branch and lets the multi-start explore the exponent.
pub fn default_omori_init(curve: &AftershockCurve) -> Result<OmoriParams> {
    let last = *curve
        .n
        .last()
        .ok_or_else(|| Error::Domain("cannot initialize a fit from an empty curve".into()))?;
    let t_last = *curve.t.last().expect("checked non-empty") as f64;
    OmoriParams::new((last / (t_last + 1.0).ln()).max(1e-3), 1.0, 1.0)
}

/// Weighted least squares of the Omori cumulative law against a count curve.
///
/// Weights are 1/se^2; a curve with all-zero errors (an analytic prediction)
/// falls back to unit weights, and mixing zero with positive errors is
/// rejected as undefined weighting. Iteration runs in (ln K, p, ln tau)
/// inside a feasible box: the unweighted problem has a flat valley running
/// to tau -> infinity where the law degenerates to a straight line and the
/// parameters lose meaning, so iterates are kept in the regime of a genuine
/// power-law decay over a 19-bar session. Four starts (the caller's p plus
/// p in {0.3, 0.7, 1.3}) guard against local minima; the best chi-square
/// wins.
pub fn fit_omori(curve: &AftershockCurve, init: &OmoriParams) -> Result<OmoriFit> {
    if curve.t.len() != curve.n.len() || curve.t.len() != curve.se.len() {
        return Err(Error::Data(format!(
            "curve arrays disagree: {} times, {} counts, {} errors",
            curve.t.len(),
            curve.n.len(),
            curve.se.len()
        )));
    }
    if curve.t.len() < 4 {
        return Err(Error::Fit(format!(
            "Omori fit needs at least 4 points, got {}",
            curve.t.len()
        )));
    }
    let all_zero = curve.se.iter().all(|&s| s == 0.0);
    let all_positive = curve.se.iter().all(|&s| s > 0.0);
    if !all_zero && !all_positive {
        return Err(Error::Fit(
            "curve mixes zero and positive standard errors; weights are undefined".into(),
        ));
    }
    let root_w: Vec<f64> = if all_zero {
        vec![1.0; curve.se.len()]
    } else {
        curve.se.iter().map(|s| 1.0 / s).collect()
    };

    let ts: Vec<f64> = curve.t.iter().map(|&t| t as f64).collect();
    let problem = |theta: &[f64], out: &mut Vec<f64>| -> Result<()> {
        let params = OmoriParams { k: theta[0].exp(), p: theta[1], tau: theta[2].exp() };
        out.clear();
        for ((&t, &count), &rw) in ts.iter().zip(&curve.n).zip(&root_w) {
            out.push(rw * (omori_cumulative(&params, t)? - count));
        }
        Ok(())
    };
    let opts = LmOptions::bounded(
        vec![1e-4f64.ln(), 0.01, 0.05f64.ln()],
        vec![1e3f64.ln(), 2.5, 20.0f64.ln()],
    );

    let mut starts = vec![init.p];
    for p in [0.3, 0.7, 1.3] {
        if (p - init.p).abs() > 1e-12 {
            starts.push(p);
        }
    }
    let mut best: Option<LmFit> = None;
    let mut failures = Vec::new();
    for &p0 in &starts {
        match lm::fit(&problem, &[init.k.ln(), p0, init.tau.ln()], &opts) {
            Ok(f) => {
                if best.as_ref().map_or(true, |b| f.chi_square < b.chi_square) {
                    best = Some(f);
                }
            }
            Err(e) => failures.push(format!("start p={p0}: {e}")),
        }
    }
    let Some(fit) = best else {
        return Err(Error::Fit(format!("every start failed ({})", failures.join("; "))));
    };

    let params = OmoriParams::new(fit.theta[0].exp(), fit.theta[1], fit.theta[2].exp())?;
    // Delta method from (ln K, p, ln tau) back to (K, p, tau).
    let scale = [params.k, 1.0, params.tau];
    let covariance: Vec<Vec<f64>> = (0..3)
        .map(|i| (0..3).map(|j| scale[i] * scale[j] * fit.covariance[i][j]).collect())
        .collect();
    Ok(OmoriFit {
        params,
        covariance,
        residuals: fit.residuals,
        chi_square: fit.chi_square,
        dof: curve.t.len().saturating_sub(3),
        iterations: fit.iterations,
    })
}
