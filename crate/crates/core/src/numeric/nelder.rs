//! Nelder-Mead simplex minimizer, used for likelihood cross-checks.

use crate::error::{Error, Result};

pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fmin: f64,
    pub iterations: usize,
}

/// Minimize `f` starting from `x0` with per-coordinate initial spread `scale`.
/// Stops when the simplex function spread drops below `ftol` (absolute) or
/// after `max_iterations` reflect/expand/contract/shrink cycles.
pub fn minimize<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    scale: &[f64],
    ftol: f64,
    max_iterations: usize,
) -> Result<NelderMeadResult> {
    let dim = x0.len();
    if dim == 0 {
        return Err(Error::Domain("empty parameter vector".into()));
    }
    if scale.len() != dim {
        return Err(Error::Config(format!(
            "scale dimension {} does not match parameter dimension {dim}",
            scale.len()
        )));
    }
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for j in 0..dim {
        let mut v = x0.to_vec();
        v[j] += if scale[j] != 0.0 { scale[j] } else { 1.0 };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("objective not finite on the initial simplex".into()));
    }

    for iteration in 1..=max_iterations {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        let (best, worst, second_worst) = (order[0], order[dim], order[dim - 1]);
        if (values[worst] - values[best]).abs() < ftol {
            return Ok(NelderMeadResult {
                x: simplex[best].clone(),
                fmin: values[best],
                iterations: iteration,
            });
        }
        // Centroid of all vertices except the worst.
        let mut centroid = vec![0.0; dim];
        for (i, v) in simplex.iter().enumerate() {
            if i == worst {
                continue;
            }
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dim as f64;
            }
        }
        let lerp = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let reflected = lerp(1.0);
        let fr = f(&reflected);
        if fr < values[best] {
            let expanded = lerp(2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let contracted = if fr < values[worst] { lerp(0.5) } else { lerp(-0.5) };
            let fc = f(&contracted);
            if fc < values[worst].min(fr) {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                // Shrink toward the best vertex.
                let anchor = simplex[best].clone();
                for (i, v) in simplex.iter_mut().enumerate() {
                    if i == best {
                        continue;
                    }
                    for (x, a) in v.iter_mut().zip(&anchor) {
                        *x = a + 0.5 * (*x - a);
                    }
                    values[i] = f(v);
                }
            }
        }
    }
    Err(Error::Fit(format!("simplex did not converge in {max_iterations} iterations")))
}
