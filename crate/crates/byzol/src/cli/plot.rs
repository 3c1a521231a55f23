//! Static SVG rendering of regret-versus-step curves from result CSVs.
//!
//! Input files are the crate's own `trials.csv` / `ensemble.csv` schemas;
//! each regret column (and each trial) becomes one polyline. Output is
//! deterministic for identical input.

use std::path::Path;

use crate::cli::io::read_csv;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Least-squares slope of a series, reported alongside the plot.
pub fn fitted_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in points {
        cov += (x - mean_x) * (y - mean_y);
        var += (x - mean_x) * (x - mean_x);
    }
    if var == 0.0 {
        0.0
    } else {
        cov / var
    }
}

fn parse_value(field: &str) -> Option<f64> {
    if field.is_empty() {
        None
    } else {
        field.parse::<f64>().ok()
    }
}

/// Extract the regret series from one CSV file.
pub fn extract_series(path: &Path) -> Result<Vec<Series>> {
    let (header, rows) = read_csv(path)?;
    let display = path.display().to_string();
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| display.clone());
    let malformed = |reason: &str| Error::MalformedCsv {
        path: display.clone(),
        reason: reason.into(),
    };
    let col = |name: &str| header.iter().position(|h| h == name);
    let step_col = col("step").ok_or_else(|| malformed("missing `step` column"))?;
    if rows.is_empty() {
        return Err(malformed("no data rows"));
    }

    let mut series: Vec<Series> = Vec::new();
    if let Some(trial_col) = col("trial") {
        // per-trial file: one adversarial-regret line per trial
        let value_col = col("adversarial_regret")
            .ok_or_else(|| malformed("missing `adversarial_regret` column"))?;
        let mut by_trial: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        for row in &rows {
            let trial = &row[trial_col];
            let step: f64 = row[step_col]
                .parse()
                .map_err(|_| malformed("unparseable step"))?;
            let value =
                parse_value(&row[value_col]).ok_or_else(|| malformed("unparseable regret"))?;
            match by_trial.iter_mut().find(|(t, _)| t == trial) {
                Some((_, points)) => points.push((step, value)),
                None => by_trial.push((trial.clone(), vec![(step, value)])),
            }
        }
        for (trial, points) in by_trial {
            series.push(Series {
                label: format!("{stem}:trial{trial}:adversarial_regret"),
                points,
            });
        }
    } else {
        // ensemble file: one line per regret column that has values
        let candidates = [
            "adversarial_regret_mean",
            "adversarial_regret_max",
            "stochastic_regret_mean",
            "stochastic_regret_max",
        ];
        for name in candidates {
            let Some(value_col) = col(name) else { continue };
            let mut points = Vec::with_capacity(rows.len());
            for row in &rows {
                let step: f64 = row[step_col]
                    .parse()
                    .map_err(|_| malformed("unparseable step"))?;
                if let Some(v) = parse_value(&row[value_col]) {
                    points.push((step, v));
                }
            }
            if !points.is_empty() {
                series.push(Series {
                    label: format!("{stem}:{name}"),
                    points,
                });
            }
        }
        if series.is_empty() {
            return Err(malformed("no plottable regret columns"));
        }
    }
    Ok(series)
}

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 230.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn fmt_coord(x: f64) -> String {
    format!("{x:.2}")
}

fn fmt_tick(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.abs() >= 1e4 || x.abs() < 1e-2 {
        format!("{x:.1e}")
    } else {
        format!("{x:.3}")
    }
}

/// Render the series to a standalone SVG document.
pub fn render_svg(series: &[Series], logy: bool) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::MalformedCsv {
            path: "<series>".into(),
            reason: "nothing to plot".into(),
        });
    }
    let transform = |y: f64| -> Option<f64> {
        if logy {
            (y > 0.0).then(|| y.log10())
        } else {
            Some(y)
        }
    };
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        for (x, y) in &s.points {
            if let Some(ty) = transform(*y) {
                xs.push(*x);
                ys.push(ty);
            }
        }
    }
    if xs.is_empty() {
        return Err(Error::MalformedCsv {
            path: "<series>".into(),
            reason: "no positive values to plot on a log axis".into(),
        });
    }
    let (x_min, x_max) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let (y_min, y_max) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
            (lo.min(y), hi.max(y))
        });
    let x_span = (x_max - x_min).max(1e-12);
    let y_span = (y_max - y_min).max(1e-12);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_px = |x: f64, ty: f64| -> (f64, f64) {
        (
            MARGIN_LEFT + (x - x_min) / x_span * plot_w,
            MARGIN_TOP + (1.0 - (ty - y_min) / y_span) * plot_h,
        )
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // axes
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt_coord(MARGIN_LEFT),
        fmt_coord(MARGIN_TOP + plot_h),
        fmt_coord(MARGIN_LEFT + plot_w),
        fmt_coord(MARGIN_TOP + plot_h),
    ));
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt_coord(MARGIN_LEFT),
        fmt_coord(MARGIN_TOP),
        fmt_coord(MARGIN_LEFT),
        fmt_coord(MARGIN_TOP + plot_h),
    ));
    // ticks
    for i in 0..=4 {
        let fx = x_min + x_span * i as f64 / 4.0;
        let (px, _) = to_px(fx, y_min);
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            fmt_coord(px),
            fmt_coord(MARGIN_TOP + plot_h + 18.0),
            fmt_tick(fx)
        ));
        let fy = y_min + y_span * i as f64 / 4.0;
        let (_, py) = to_px(x_min, fy);
        let label = if logy { 10f64.powf(fy) } else { fy };
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            fmt_coord(MARGIN_LEFT - 6.0),
            fmt_coord(py + 4.0),
            fmt_tick(label)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">step</text>\n",
        fmt_coord(MARGIN_LEFT + plot_w / 2.0),
        fmt_coord(HEIGHT - 10.0)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        fmt_coord(MARGIN_TOP + plot_h / 2.0),
        fmt_coord(MARGIN_TOP + plot_h / 2.0),
        if logy { "regret (log)" } else { "regret" }
    ));
    // series
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut path = String::new();
        for (x, y) in &s.points {
            if let Some(ty) = transform(*y) {
                let (px, py) = to_px(*x, ty);
                if path.is_empty() {
                    path.push('M');
                } else {
                    path.push('L');
                }
                path.push_str(&format!("{} {} ", fmt_coord(px), fmt_coord(py)));
            }
        }
        if !path.is_empty() {
            svg.push_str(&format!(
                "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                path.trim_end()
            ));
        }
        let ly = MARGIN_TOP + 16.0 * i as f64 + 10.0;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"3\"/>\n",
            fmt_coord(MARGIN_LEFT + plot_w + 10.0),
            fmt_coord(ly - 4.0),
            fmt_coord(MARGIN_LEFT + plot_w + 28.0),
            fmt_coord(ly - 4.0),
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>\n",
            fmt_coord(MARGIN_LEFT + plot_w + 32.0),
            fmt_coord(ly),
            s.label
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[derive(Debug, Clone)]
pub struct PlotReport {
    /// (label, fitted slope) per rendered series.
    pub slopes: Vec<(String, f64)>,
}

/// Read the input CSVs, render the SVG to `out_path`, and report fitted
/// slopes. Nothing is written when an input is malformed.
pub fn cmd_plot(inputs: &[std::path::PathBuf], out_path: &Path, logy: bool) -> Result<PlotReport> {
    let mut series = Vec::new();
    for input in inputs {
        series.extend(extract_series(input)?);
    }
    let svg = render_svg(&series, logy)?;
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(out_path, svg)?;
    Ok(PlotReport {
        slopes: series
            .iter()
            .map(|s| (s.label.clone(), fitted_slope(&s.points)))
            .collect(),
    })
}
