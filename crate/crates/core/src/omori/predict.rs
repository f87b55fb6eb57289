//! Parameter-free aftershock prediction from the calibrated model.
//!
//! Conditioned on the opening magnitude |R_0| = r0, bar i falls in the
//! aftershock band [sigma_a, r0] with a probability given by a single
//! Student-type integral; summing those probabilities over bars yields the
//! predicted cumulative curve with nothing fitted on the aftershock side.

use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use super::{AftershockCurve, CurveKind};
use crate::error::{Error, Result};
use crate::market::ShockSpec;
use crate::model::{scale_coefficients, ModelParams};
use crate::numeric::quad;

/// Absolute quadrature tolerance for one band-probability integral. Fixed
/// rather than configurable: reference values are frozen against it.
pub const PREDICTION_ABS_TOL: f64 = 1e-10;

fn check_band(r0_abs: f64, sigma_a: f64) -> Result<()> {
    if !(sigma_a > 0.0 && sigma_a.is_finite()) {
        return Err(Error::Domain(format!(
            "aftershock threshold must be positive, got {sigma_a:e}"
        )));
    }
    if !(r0_abs >= sigma_a) {
        return Err(Error::Domain(format!(
            "main shock {r0_abs:e} lies below the aftershock threshold {sigma_a:e}; \
             the band is empty"
        )));
    }
    Ok(())
}

/// Probability that bar i lands in the aftershock band given |R_0| = r0:
///
///   (2/sqrt(pi)) Gamma((alpha+2)/2)/Gamma((alpha+1)/2)
///     * int (1+x^2)^{-(alpha+2)/2} dx
///
/// between sigma_a/(a_i s) and r0/(a_i s) with s = sqrt(beta^2 + r0^2).
/// This is the posterior-averaged Gaussian band mass after substituting out
/// the latent scale; `a_i` is the bar's scale coefficient. Quadrature to
/// absolute tolerance 1e-10.
pub fn shock_probability(
    r0_abs: f64,
    sigma_a: f64,
    a_i: f64,
    params: &ModelParams,
) -> Result<f64> {
    check_band(r0_abs, sigma_a)?;
    if !(a_i > 0.0 && a_i.is_finite()) {
        return Err(Error::Domain(format!("scale coefficient must be positive, got {a_i:e}")));
    }
    let s = (params.beta * params.beta + r0_abs * r0_abs).sqrt();
    let lo = sigma_a / (a_i * s);
    let hi = r0_abs / (a_i * s);
    let alpha = params.alpha;
    let prefactor = 2.0 / std::f64::consts::PI.sqrt()
        * (ln_gamma(0.5 * (alpha + 2.0)) - ln_gamma(0.5 * (alpha + 1.0))).exp();
    let half_power = -0.5 * (alpha + 2.0);
    let integral = quad::integrate(|x| (1.0 + x * x).powf(half_power), lo, hi, PREDICTION_ABS_TOL)?;
    Ok(prefactor * integral)
}

/// Closed form of [`shock_probability`] through the regularized incomplete
/// beta function: the prefactor cancels the complete beta constant, leaving
///
///   I_u(1/2, (alpha+1)/2),  u = x^2/(1+x^2),
///
/// differenced between the two limits. Kept as an independent cross-check of
/// the quadrature route; both must agree to quadrature tolerance.
pub fn shock_probability_closed(
    r0_abs: f64,
    sigma_a: f64,
    a_i: f64,
    params: &ModelParams,
) -> Result<f64> {
    check_band(r0_abs, sigma_a)?;
    if !(a_i > 0.0 && a_i.is_finite()) {
        return Err(Error::Domain(format!("scale coefficient must be positive, got {a_i:e}")));
    }
    let s = (params.beta * params.beta + r0_abs * r0_abs).sqrt();
    let u = |x: f64| x * x / (1.0 + x * x);
    let b = 0.5 * (params.alpha + 1.0);
    Ok(beta_reg(0.5, b, u(r0_abs / (a_i * s))) - beta_reg(0.5, b, u(sigma_a / (a_i * s))))
}

/// Predicted cumulative aftershock curve for one main-shock magnitude:
/// N(t) = sum of the band probabilities of bars 1..=t. Analytic, so the
/// curve carries zero standard errors.
pub fn predict_single(
    r0_abs: f64,
    spec: &ShockSpec,
    params: &ModelParams,
    t_max: usize,
) -> Result<AftershockCurve> {
    if t_max < 1 || t_max >= params.n {
        return Err(Error::Domain(format!(
            "prediction horizon must lie in 1..{}, got {t_max}",
            params.n
        )));
    }
    check_band(r0_abs, spec.sigma_a)?;
    let coefs = scale_coefficients(params);
    let mut acc = 0.0;
    let mut counts = Vec::with_capacity(t_max);
    for a_i in &coefs.a[1..=t_max] {
        acc += shock_probability(r0_abs, spec.sigma_a, *a_i, params)?;
        counts.push(acc);
    }
    Ok(AftershockCurve {
        kind: CurveKind::Predicted,
        spec: *spec,
        t: (1..=t_max).collect(),
        n: counts,
        se: vec![0.0; t_max],
        n_histories: 1,
    })
}

/// Pointwise mean of [`predict_single`] over the selected main-shock
/// magnitudes: the predicted counterpart of an empirical average curve.
pub fn predict_average(
    r0_list: &[f64],
    spec: &ShockSpec,
    params: &ModelParams,
    t_max: usize,
) -> Result<AftershockCurve> {
    if r0_list.is_empty() {
        return Err(Error::Domain("prediction needs at least one main-shock magnitude".into()));
    }
    let mut sums = vec![0.0; t_max];
    let mut curve = None;
    for &r0 in r0_list {
        let single = predict_single(r0, spec, params, t_max)?;
        for (s, n) in sums.iter_mut().zip(&single.n) {
            *s += n;
        }
        curve = Some(single);
    }
    let mut curve = curve.expect("checked non-empty");
    let m = r0_list.len() as f64;
    curve.n = sums.into_iter().map(|s| s / m).collect();
    curve.n_histories = r0_list.len();
    Ok(curve)
}
