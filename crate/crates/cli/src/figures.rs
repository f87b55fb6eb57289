//! Figure builders shared by the per-command `svg=true` convenience output
//! and the `report` assembly. Inputs are plain slices so the same builder
//! serves both in-memory results and re-read CSV artifacts.

use aftershock_core::omori::{omori_cumulative, OmoriParams};
use aftershock_core::Result;

use crate::svg::{Plot, Series};

/// Per-threshold aftershock curves: (sigma_a, [(t, N, se)]).
pub type ThresholdCurves = Vec<(f64, Vec<(usize, f64, f64)>)>;

/// Collapse histogram layers: (horizon, [(x, density)]).
pub type CollapseLayers = Vec<(usize, Vec<(f64, f64)>)>;

/// Scaling-exponent figure: per-order growth exponents with error bars and
/// the through-origin line gamma = q D.
pub fn scaling_figure(points: &[(f64, f64, f64)], d: f64) -> Plot {
    let mut plot = Plot::new("Moment growth exponents", "q", "gamma(q)");
    let q_max = points.iter().map(|p| p.0).fold(0.0, f64::max);
    plot.series.push(
        Series::line(&format!("q D, D = {d:.3}"), true, vec![(0.0, 0.0), (q_max, q_max * d)])
            .colored(1),
    );
    plot.series.push(
        Series::points(
            "measured",
            points.iter().map(|&(q, g, _)| (q, g)).collect(),
            Some(points.iter().map(|p| p.2).collect()),
        )
        .colored(0),
    );
    plot
}

/// Collapse figure: rescaled aggregate-return densities for each horizon on
/// a log axis, with the fitted scaling function through them.
pub fn collapse_figure(layers: &CollapseLayers, g_curve: Vec<(f64, f64)>) -> Plot {
    let mut plot = Plot::new(
        "Rescaled aggregate-return density",
        "x = S_t (t+1)^-D",
        "density",
    );
    plot.log_y = true;
    for (slot, (t, pts)) in layers.iter().enumerate() {
        plot.series
            .push(Series::points(&format!("t = {t}"), pts.clone(), None).colored(slot));
    }
    let slot = layers.len();
    plot.series.push(Series::line("fitted g", false, g_curve).colored(slot));
    plot
}

/// One labeled curve per threshold: empirical points with error bars.
fn empirical_series(curves: &ThresholdCurves) -> Vec<Series> {
    curves
        .iter()
        .enumerate()
        .map(|(slot, (sigma_a, pts))| {
            Series::points(
                &format!("sigma_a = {sigma_a}"),
                pts.iter().map(|&(t, n, _)| (t as f64, n)).collect(),
                Some(pts.iter().map(|p| p.2).collect()),
            )
            .colored(slot)
        })
        .collect()
}

/// Decay-law figure: empirical cumulative counts and the fitted curves,
/// dashed, evaluated on the integer grid up to each curve's last point.
pub fn omori_figure(
    empirical: &ThresholdCurves,
    fits: &[(f64, OmoriParams)],
) -> Result<Plot> {
    let mut plot =
        Plot::new("Cumulative aftershock counts and fitted decay law", "t", "N(t)");
    plot.series.extend(empirical_series(empirical));
    for (slot, (_, params)) in fits.iter().enumerate() {
        let t_max = empirical
            .get(slot)
            .and_then(|(_, pts)| pts.last().map(|p| p.0))
            .unwrap_or(19);
        let mut pts = Vec::with_capacity(t_max);
        for t in 1..=t_max {
            pts.push((t as f64, omori_cumulative(params, t as f64)?));
        }
        plot.series.push(Series::line("", true, pts).colored(slot));
    }
    Ok(plot)
}

/// Prediction figure: parameter-free predicted curves, dashed, over the
/// empirical points they should describe (when those are available).
pub fn prediction_figure(
    empirical: Option<&ThresholdCurves>,
    predicted: &[(f64, Vec<(usize, f64)>)],
) -> Plot {
    let mut plot =
        Plot::new("Predicted vs measured cumulative aftershock counts", "t", "N(t)");
    if let Some(empirical) = empirical {
        plot.series.extend(empirical_series(empirical));
        for (slot, (_, pts)) in predicted.iter().enumerate() {
            plot.series.push(
                Series::line("", true, pts.iter().map(|&(t, n)| (t as f64, n)).collect())
                    .colored(slot),
            );
        }
    } else {
        for (slot, (sigma_a, pts)) in predicted.iter().enumerate() {
            plot.series.push(
                Series::line(
                    &format!("sigma_a = {sigma_a}"),
                    true,
                    pts.iter().map(|&(t, n)| (t as f64, n)).collect(),
                )
                .colored(slot),
            );
        }
    }
    plot
}
