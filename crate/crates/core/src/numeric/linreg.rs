//! Weighted linear least squares in one regressor, closed form.

use crate::error::{Error, Result};

/// Result of a straight-line fit y = intercept + slope * x.
///
/// Variances come from (X^T W X)^-1 and assume weights are inverse variances;
/// `chi_square` and `dof` let callers rescale when weights are only relative.
#[derive(Debug, Clone)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub var_slope: f64,
    pub var_intercept: f64,
    pub cov_slope_intercept: f64,
    pub chi_square: f64,
    pub dof: usize,
}

fn check_inputs(x: &[f64], y: &[f64], w: &[f64], min_points: usize) -> Result<()> {
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::Domain(format!(
            "regression inputs differ in length: {} x, {} y, {} w",
            x.len(),
            y.len(),
            w.len()
        )));
    }
    if x.len() < min_points {
        return Err(Error::Fit(format!(
            "regression needs at least {min_points} points, got {}",
            x.len()
        )));
    }
    for (i, ((&xi, &yi), &wi)) in x.iter().zip(y).zip(w).enumerate() {
        if !xi.is_finite() || !yi.is_finite() || !wi.is_finite() || wi <= 0.0 {
            return Err(Error::Domain(format!(
                "non-finite or non-positive entry at index {i}: x={xi:e} y={yi:e} w={wi:e}"
            )));
        }
    }
    Ok(())
}

/// Weighted fit of y = intercept + slope * x.
pub fn fit_line(x: &[f64], y: &[f64], w: &[f64]) -> Result<LineFit> {
    check_inputs(x, y, w, 2)?;
    let sw: f64 = w.iter().sum();
    let sx: f64 = x.iter().zip(w).map(|(x, w)| w * x).sum();
    let sy: f64 = y.iter().zip(w).map(|(y, w)| w * y).sum();
    let sxx: f64 = x.iter().zip(w).map(|(x, w)| w * x * x).sum();
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((x, y), w)| w * x * y).sum();
    let det = sw * sxx - sx * sx;
    // det is (up to weights) the spread of x; it vanishes when all x coincide.
    if !(det > sw * sxx * 1e-14) {
        return Err(Error::Fit("singular regression: regressor values coincide".into()));
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let chi_square = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((x, y), w)| {
            let r = y - intercept - slope * x;
            w * r * r
        })
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        var_slope: sw / det,
        var_intercept: sxx / det,
        cov_slope_intercept: -sx / det,
        chi_square,
        dof: x.len().saturating_sub(2),
    })
}

/// Result of a through-origin fit y = slope * x.
#[derive(Debug, Clone)]
pub struct OriginFit {
    pub slope: f64,
    pub var_slope: f64,
    pub chi_square: f64,
    pub dof: usize,
}

/// Weighted fit of y = slope * x (no intercept).
pub fn fit_through_origin(x: &[f64], y: &[f64], w: &[f64]) -> Result<OriginFit> {
    check_inputs(x, y, w, 1)?;
    let sxx: f64 = x.iter().zip(w).map(|(x, w)| w * x * x).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("singular regression: all regressor values are zero".into()));
    }
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((x, y), w)| w * x * y).sum();
    let slope = sxy / sxx;
    let chi_square = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((x, y), w)| {
            let r = y - slope * x;
            w * r * r
        })
        .sum();
    Ok(OriginFit {
        slope,
        var_slope: 1.0 / sxx,
        chi_square,
        dof: x.len().saturating_sub(1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_line_is_recovered() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|x| 2.5 * x - 1.0).collect();
        let w = [1.0; 4];
        let fit = fit_line(&x, &y, &w).unwrap();
        assert_abs_diff_eq!(fit.slope, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.chi_square, 0.0, epsilon = 1e-20);
        assert_eq!(fit.dof, 2);
    }

    #[test]
    fn weights_pull_the_fit() {
        // Three points, heavy weight on the outlier-free pair.
        let x = [0.0, 1.0, 2.0];
        let y = [0.0, 1.0, 10.0];
        let heavy = fit_line(&x, &y, &[1e6, 1e6, 1e-6]).unwrap();
        assert_abs_diff_eq!(heavy.slope, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn known_variance_formulas() {
        // Unit weights, x symmetric around 0: var(slope) = 1/sum x^2.
        let x = [-1.0, 0.0, 1.0];
        let y = [0.1, -0.2, 0.3];
        let fit = fit_line(&x, &y, &[1.0; 3]).unwrap();
        assert_abs_diff_eq!(fit.var_slope, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.var_intercept, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.cov_slope_intercept, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn coincident_x_is_singular() {
        let err = fit_line(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0], &[1.0; 3]).unwrap_err();
        assert!(matches!(err, Error::Fit(_)));
    }

    #[test]
    fn through_origin_exact() {
        let x = [1.0, 2.0, 4.0];
        let y = [0.35, 0.70, 1.40];
        let fit = fit_through_origin(&x, &y, &[1.0; 3]).unwrap();
        assert_abs_diff_eq!(fit.slope, 0.35, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.var_slope, 1.0 / 21.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_weights() {
        let err = fit_line(&[0.0, 1.0], &[0.0, 1.0], &[1.0, -1.0]).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }
}
