//! Minimal SVG scatter/line plots, written directly with no display or
//! graphics dependency. The CSV artifacts are the contract; these renderings
//! exist so a run can be eyeballed without external tooling.

use std::fs;
use std::path::Path;

use aftershock_core::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 48.0;

const PALETTE: [&str; 6] =
    ["#1f6fb4", "#d1495b", "#3a9d6c", "#8c6bb1", "#e08214", "#5e5e5e"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Line,
    Points,
}

#[derive(Debug, Clone)]
pub struct Series {
    /// Legend text; empty labels get no legend row.
    pub label: String,
    pub mark: Mark,
    pub dashed: bool,
    /// Palette slot; `None` follows the series position. Lets a fitted line
    /// share its data series' color.
    pub color: Option<usize>,
    /// (x, y) pairs; under a log y-axis, points with y <= 0 are skipped.
    pub points: Vec<(f64, f64)>,
    /// Symmetric y error bars, aligned with `points`; zeros draw nothing.
    pub y_err: Option<Vec<f64>>,
}

impl Series {
    pub fn line(label: &str, dashed: bool, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.to_string(),
            mark: Mark::Line,
            dashed,
            color: None,
            points,
            y_err: None,
        }
    }

    pub fn points(label: &str, points: Vec<(f64, f64)>, y_err: Option<Vec<f64>>) -> Self {
        Series {
            label: label.to_string(),
            mark: Mark::Points,
            dashed: false,
            color: None,
            points,
            y_err,
        }
    }

    pub fn colored(mut self, slot: usize) -> Self {
        self.color = Some(slot);
        self
    }
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Plot {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            log_y: false,
            series: Vec::new(),
        }
    }

    fn y_value(&self, y: f64) -> Option<f64> {
        if self.log_y {
            (y > 0.0).then(|| y.log10())
        } else {
            Some(y)
        }
    }

    /// Data ranges in plot coordinates (y already log-transformed if set).
    fn ranges(&self) -> ((f64, f64), (f64, f64)) {
        let mut xr = (f64::INFINITY, f64::NEG_INFINITY);
        let mut yr = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for &(x, y) in &s.points {
                let Some(yv) = self.y_value(y) else { continue };
                if x.is_finite() && yv.is_finite() {
                    xr = (xr.0.min(x), xr.1.max(x));
                    yr = (yr.0.min(yv), yr.1.max(yv));
                }
            }
        }
        (pad_range(xr), pad_range(yr))
    }

    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.ranges();
        let px = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT);
        let py = |yv: f64| {
            HEIGHT - MARGIN_BOTTOM - (yv - y0) / (y1 - y0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
        };
        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
        ));
        svg.push_str(&format!(
            "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
            WIDTH / 2.0,
            escape(&self.title)
        ));

        // Axes and ticks.
        let bottom = HEIGHT - MARGIN_BOTTOM;
        svg.push_str(&format!(
            "<line x1=\"{MARGIN_LEFT}\" y1=\"{bottom:.1}\" x2=\"{:.1}\" y2=\"{bottom:.1}\" \
             stroke=\"black\"/>\n",
            WIDTH - MARGIN_RIGHT
        ));
        svg.push_str(&format!(
            "<line x1=\"{MARGIN_LEFT}\" y1=\"{MARGIN_TOP}\" x2=\"{MARGIN_LEFT}\" \
             y2=\"{bottom:.1}\" stroke=\"black\"/>\n"
        ));
        for (v, label) in ticks(x0, x1) {
            let x = px(v);
            svg.push_str(&format!(
                "<line x1=\"{x:.1}\" y1=\"{bottom:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" \
                 stroke=\"black\"/>\n",
                bottom + 4.0
            ));
            svg.push_str(&format!(
                "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{label}</text>\n",
                bottom + 18.0
            ));
        }
        let y_ticks = if self.log_y { log_ticks(y0, y1) } else { ticks(y0, y1) };
        for (v, label) in y_ticks {
            let y = py(v);
            svg.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{MARGIN_LEFT}\" y2=\"{y:.1}\" \
                 stroke=\"black\"/>\n",
                MARGIN_LEFT - 4.0
            ));
            svg.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{label}</text>\n",
                MARGIN_LEFT - 8.0,
                y + 4.0
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
            HEIGHT - 10.0,
            escape(&self.x_label)
        ));
        svg.push_str(&format!(
            "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" \
             transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
            (MARGIN_TOP + bottom) / 2.0,
            (MARGIN_TOP + bottom) / 2.0,
            escape(&self.y_label)
        ));

        // Series, in declaration order; colors cycle through the palette.
        for (si, s) in self.series.iter().enumerate() {
            let color = PALETTE[s.color.unwrap_or(si) % PALETTE.len()];
            let mapped: Vec<(f64, f64)> = s
                .points
                .iter()
                .filter_map(|&(x, y)| self.y_value(y).map(|yv| (px(x), py(yv))))
                .collect();
            if let Some(errs) = &s.y_err {
                for (&(x, y), &e) in s.points.iter().zip(errs) {
                    if e <= 0.0 {
                        continue;
                    }
                    let (Some(lo), Some(hi)) =
                        (self.y_value((y - e).max(plot_floor(self.log_y, y0))), self.y_value(y + e))
                    else {
                        continue;
                    };
                    let x = px(x);
                    let (ylo, yhi) = (py(lo), py(hi));
                    svg.push_str(&format!(
                        "<line x1=\"{x:.1}\" y1=\"{ylo:.1}\" x2=\"{x:.1}\" y2=\"{yhi:.1}\" \
                         stroke=\"{color}\"/>\n"
                    ));
                    for yy in [ylo, yhi] {
                        svg.push_str(&format!(
                            "<line x1=\"{:.1}\" y1=\"{yy:.1}\" x2=\"{:.1}\" y2=\"{yy:.1}\" \
                             stroke=\"{color}\"/>\n",
                            x - 3.0,
                            x + 3.0
                        ));
                    }
                }
            }
            match s.mark {
                Mark::Line => {
                    let pts: Vec<String> =
                        mapped.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                    let dash = if s.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
                    svg.push_str(&format!(
                        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash} \
                         points=\"{}\"/>\n",
                        pts.join(" ")
                    ));
                }
                Mark::Points => {
                    for (x, y) in &mapped {
                        svg.push_str(&format!(
                            "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"3\" fill=\"{color}\"/>\n"
                        ));
                    }
                }
            }
        }

        // Legend, top-left inside the plot area; unlabeled series are skipped.
        let labeled = self
            .series
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.label.is_empty());
        for (row, (si, s)) in labeled.enumerate() {
            let color = PALETTE[s.color.unwrap_or(si) % PALETTE.len()];
            let y = MARGIN_TOP + 14.0 + 16.0 * row as f64;
            let x = MARGIN_LEFT + 10.0;
            match s.mark {
                Mark::Line => svg.push_str(&format!(
                    "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" \
                     stroke=\"{color}\" stroke-width=\"1.5\"{}/>\n",
                    y - 4.0,
                    x + 18.0,
                    y - 4.0,
                    if s.dashed { " stroke-dasharray=\"6 4\"" } else { "" }
                )),
                Mark::Points => svg.push_str(&format!(
                    "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\"/>\n",
                    x + 9.0,
                    y - 4.0
                )),
            }
            svg.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{y:.1}\">{}</text>\n",
                x + 24.0,
                escape(&s.label)
            ));
        }
        svg.push_str("</svg>\n");
        svg
    }
}

/// Lowest representable data value for clamping error bars: under a log axis
/// the bar cannot cross zero, so it stops at the bottom of the plotted range.
fn plot_floor(log_y: bool, y0: f64) -> f64 {
    if log_y {
        10f64.powf(y0)
    } else {
        f64::NEG_INFINITY
    }
}

fn pad_range((lo, hi): (f64, f64)) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if lo == hi {
        let pad = if lo == 0.0 { 0.5 } else { lo.abs() * 0.1 };
        return (lo - pad, hi + pad);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

/// About five round-valued ticks covering [lo, hi].
fn ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = mag
        * if norm <= 1.0 {
            1.0
        } else if norm <= 2.0 {
            2.0
        } else if norm <= 5.0 {
            5.0
        } else {
            10.0
        };
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let mut out = Vec::new();
    let mut k = (lo / step).ceil() as i64;
    while (k as f64) * step <= hi {
        let v = k as f64 * step;
        let label = if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
            format!("{v:e}")
        } else {
            format!("{v:.decimals$}")
        };
        out.push((v, label));
        k += 1;
    }
    out
}

/// Ticks for a log axis spanning [lo, hi] in log10 units: decade powers when
/// the span holds at least two, otherwise plain ticks labeled with 10^v.
fn log_ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    let first = lo.ceil() as i64;
    let last = hi.floor() as i64;
    if last - first >= 1 {
        (first..=last).map(|k| (k as f64, format!("1e{k}"))).collect()
    } else {
        ticks(lo, hi)
            .into_iter()
            .map(|(v, _)| (v, format!("{:.3e}", 10f64.powf(v))))
            .collect()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn write_plot(path: &Path, plot: &Plot) -> Result<()> {
    fs::write(path, plot.render()).map_err(|e| Error::io(path, e))
}
