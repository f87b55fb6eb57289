//! Damped least squares (Levenberg-Marquardt) with box projection.
//!
//! Small fixed-dimension problems only (2-3 parameters here), so the
//! Jacobian is numeric (central differences) and linear algebra is direct
//! Gaussian elimination. Steps that leave the feasible box are clamped to
//! its boundary; convergence is declared on the relative size of the
//! accepted (post-clamp) parameter change.

use crate::error::{Error, Result};

/// Least-squares problem: residual vector as a function of parameters.
/// Residuals must already include any weighting (r_k = sqrt(w_k) * (model - data)).
pub trait Residuals {
    fn eval(&self, theta: &[f64], out: &mut Vec<f64>) -> Result<()>;
}

impl<F: Fn(&[f64], &mut Vec<f64>) -> Result<()>> Residuals for F {
    fn eval(&self, theta: &[f64], out: &mut Vec<f64>) -> Result<()> {
        self(theta, out)
    }
}

/// Default convergence threshold on the relative parameter step.
pub const DEFAULT_REL_STEP_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Convergence threshold on max_j |delta_j| / max(|theta_j|, 1).
    pub rel_step_tol: f64,
    /// Lower/upper bounds per coordinate; use +-INFINITY for unbounded.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LmOptions {
    pub fn unbounded(dim: usize) -> Self {
        LmOptions {
            max_iterations: 500,
            rel_step_tol: DEFAULT_REL_STEP_TOL,
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    pub fn bounded(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        LmOptions { max_iterations: 500, rel_step_tol: DEFAULT_REL_STEP_TOL, lower, upper }
    }
}

#[derive(Debug, Clone)]
pub struct LmFit {
    pub theta: Vec<f64>,
    pub residuals: Vec<f64>,
    pub chi_square: f64,
    pub iterations: usize,
    /// (J^T J)^-1 at the solution; the Gauss-Newton parameter covariance
    /// when residuals are scaled by inverse standard errors.
    pub covariance: Vec<Vec<f64>>,
}

/// Solve A x = b in place (partial pivoting). A is row-major n x n.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
        if !x[col].is_finite() {
            return None;
        }
    }
    Some(x)
}

fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(solve(a.to_vec(), e)?);
    }
    // cols[j] is the j-th column of the inverse.
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
}

fn chi_square(r: &[f64]) -> f64 {
    r.iter().map(|r| r * r).sum()
}

fn clamp(theta: &mut [f64], opts: &LmOptions) {
    for ((t, &lo), &hi) in theta.iter_mut().zip(&opts.lower).zip(&opts.upper) {
        *t = t.clamp(lo, hi);
    }
}

/// Central-difference Jacobian. The step floor of 1e-5 keeps differences
/// well clear of piecewise branch windows in the model functions.
fn jacobian<R: Residuals>(
    problem: &R,
    theta: &[f64],
    opts: &LmOptions,
    n_resid: usize,
) -> Result<Vec<Vec<f64>>> {
    let dim = theta.len();
    let mut jac = vec![vec![0.0; dim]; n_resid];
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for j in 0..dim {
        let h = (1e-6 * theta[j].abs()).max(1e-5);
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        tp[j] = (theta[j] + h).min(opts.upper[j]);
        tm[j] = (theta[j] - h).max(opts.lower[j]);
        let span = tp[j] - tm[j];
        if span <= 0.0 {
            return Err(Error::Fit(format!(
                "parameter {j} is pinned at a degenerate bound [{:e}, {:e}]",
                opts.lower[j], opts.upper[j]
            )));
        }
        problem.eval(&tp, &mut plus)?;
        problem.eval(&tm, &mut minus)?;
        for (k, row) in jac.iter_mut().enumerate() {
            row[j] = (plus[k] - minus[k]) / span;
        }
    }
    Ok(jac)
}

pub fn fit<R: Residuals>(problem: &R, init: &[f64], opts: &LmOptions) -> Result<LmFit> {
    let dim = init.len();
    if opts.lower.len() != dim || opts.upper.len() != dim {
        return Err(Error::Config(format!(
            "bounds dimension {}/{} does not match parameter dimension {dim}",
            opts.lower.len(),
            opts.upper.len()
        )));
    }
    let mut theta = init.to_vec();
    clamp(&mut theta, opts);
    let mut resid = Vec::new();
    problem.eval(&theta, &mut resid)?;
    if resid.len() < dim {
        return Err(Error::Fit(format!(
            "underdetermined fit: {} residuals for {dim} parameters",
            resid.len()
        )));
    }
    for (k, r) in resid.iter().enumerate() {
        if !r.is_finite() {
            return Err(Error::Fit(format!("residual {k} is {r} at the initial guess")));
        }
    }
    let mut cost = chi_square(&resid);
    let mut lambda = 1e-3;
    let mut trial_resid = Vec::new();

    for iteration in 1..=opts.max_iterations {
        let jac = jacobian(problem, &theta, opts, resid.len())?;
        // Normal equations J^T J and gradient J^T r.
        let mut jtj = vec![vec![0.0; dim]; dim];
        let mut jtr = vec![0.0; dim];
        for (row, &r) in jac.iter().zip(&resid) {
            for i in 0..dim {
                jtr[i] += row[i] * r;
                for j in 0..dim {
                    jtj[i][j] += row[i] * row[j];
                }
            }
        }

        loop {
            // Marquardt scaling: damp by lambda * diag(J^T J).
            let mut damped = jtj.clone();
            for (i, row) in damped.iter_mut().enumerate() {
                let d = if jtj[i][i] > 0.0 { jtj[i][i] } else { 1.0 };
                row[i] += lambda * d;
            }
            let step = match solve(damped, jtr.iter().map(|g| -g).collect()) {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    if lambda > 1e12 {
                        return Err(Error::Fit(format!(
                            "singular Jacobian at iteration {iteration}, \
                             theta = {theta:?}, chi_square = {cost:e}"
                        )));
                    }
                    continue;
                }
            };
            let mut trial: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + s).collect();
            clamp(&mut trial, opts);
            // If clamping bent the step, re-solve for the free coordinates
            // with the clamped ones pinned at their bounds. The raw clamped
            // step is a gradient-quality direction at best and crawls along
            // active constraints.
            let clamped: Vec<usize> = (0..dim)
                .filter(|&j| trial[j] != theta[j] + step[j])
                .collect();
            if !clamped.is_empty() && clamped.len() < dim {
                let free: Vec<usize> = (0..dim).filter(|j| !clamped.contains(j)).collect();
                let mut lhs = vec![vec![0.0; free.len()]; free.len()];
                let mut rhs = vec![0.0; free.len()];
                for (a, &i) in free.iter().enumerate() {
                    rhs[a] = -jtr[i]
                        - clamped.iter().map(|&c| jtj[i][c] * (trial[c] - theta[c])).sum::<f64>();
                    for (b, &j) in free.iter().enumerate() {
                        lhs[a][b] = jtj[i][j];
                    }
                    let d = if jtj[i][i] > 0.0 { jtj[i][i] } else { 1.0 };
                    lhs[a][a] += lambda * d;
                }
                if let Some(sub) = solve(lhs, rhs) {
                    let mut refit = theta.to_vec();
                    for &c in &clamped {
                        refit[c] = trial[c];
                    }
                    for (a, &i) in free.iter().enumerate() {
                        refit[i] = theta[i] + sub[a];
                    }
                    clamp(&mut refit, opts);
                    trial = refit;
                }
            }
            problem.eval(&trial, &mut trial_resid)?;
            let trial_cost = if trial_resid.iter().all(|r| r.is_finite()) {
                chi_square(&trial_resid)
            } else {
                f64::INFINITY
            };
            if trial_cost < cost {
                let rel_step = theta
                    .iter()
                    .zip(&trial)
                    .map(|(old, new)| (new - old).abs() / old.abs().max(1.0))
                    .fold(0.0, f64::max);
                theta = trial;
                std::mem::swap(&mut resid, &mut trial_resid);
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                // A small step only signals convergence once damping is out of
                // the picture; large lambda produces short steps even far from
                // the minimum in ill-conditioned valleys.
                if rel_step < opts.rel_step_tol && lambda <= 1e-6 {
                    let covariance = invert(&jtj).ok_or_else(|| {
                        Error::Fit(format!(
                            "covariance is singular at the solution, theta = {theta:?}"
                        ))
                    })?;
                    return Ok(LmFit {
                        theta,
                        residuals: resid,
                        chi_square: cost,
                        iterations: iteration,
                        covariance,
                    });
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                // No descent direction left; treat the current point as stalled.
                let covariance = invert(&jtj).ok_or_else(|| {
                    Error::Fit(format!("covariance is singular at the solution, theta = {theta:?}"))
                })?;
                return Ok(LmFit {
                    theta,
                    residuals: resid,
                    chi_square: cost,
                    iterations: iteration,
                    covariance,
                });
            }
        }
    }
    Err(Error::Fit(format!(
        "no convergence in {} iterations: theta = {theta:?}, chi_square = {cost:e}, \
         lambda = {lambda:e}",
        opts.max_iterations
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn exponential_problem(
        xs: Vec<f64>,
        ys: Vec<f64>,
    ) -> impl Fn(&[f64], &mut Vec<f64>) -> Result<()> {
        move |theta: &[f64], out: &mut Vec<f64>| {
            out.clear();
            out.extend(xs.iter().zip(&ys).map(|(x, y)| theta[0] * (-theta[1] * x).exp() - y));
            Ok(())
        }
    }

    #[test]
    fn recovers_exponential_decay() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * (-1.7 * x).exp()).collect();
        let problem = exponential_problem(xs, ys);
        let fit = fit(&problem, &[1.0, 1.0], &LmOptions::unbounded(2)).unwrap();
        assert_abs_diff_eq!(fit.theta[0], 3.0, epsilon = 1e-7);
        assert_abs_diff_eq!(fit.theta[1], 1.7, epsilon = 1e-7);
        assert!(fit.chi_square < 1e-14);
    }

    #[test]
    fn bounds_are_respected() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * (-1.7 * x).exp()).collect();
        let problem = exponential_problem(xs, ys);
        let opts = LmOptions::bounded(vec![0.0, 2.0], vec![10.0, 5.0]);
        let fit = fit(&problem, &[1.0, 2.5], &opts).unwrap();
        // True rate 1.7 lies outside the box; the fit must stop at its edge.
        assert!(fit.theta[1] >= 2.0 - 1e-12);
    }

    #[test]
    fn covariance_matches_straight_line_formula() {
        // Linear model through LM: residuals (a + b x - y), unit weights.
        let xs = [-1.0, 0.0, 1.0];
        let ys = [0.1, -0.2, 0.3];
        let problem = |theta: &[f64], out: &mut Vec<f64>| -> Result<()> {
            out.clear();
            out.extend(xs.iter().zip(&ys).map(|(x, y)| theta[0] + theta[1] * x - y));
            Ok(())
        };
        let fit = fit(&problem, &[0.0, 0.0], &LmOptions::unbounded(2)).unwrap();
        // (J^T J)^-1 = diag(1/3, 1/2) for this design.
        assert_abs_diff_eq!(fit.covariance[0][0], 1.0 / 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.covariance[1][1], 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.covariance[0][1], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn underdetermined_is_rejected() {
        let problem = |theta: &[f64], out: &mut Vec<f64>| -> Result<()> {
            out.clear();
            out.push(theta[0] + theta[1]);
            Ok(())
        };
        let err = fit(&problem, &[0.0, 0.0], &LmOptions::unbounded(2)).unwrap_err();
        assert!(matches!(err, Error::Fit(_)));
    }
}
