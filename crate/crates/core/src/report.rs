//! SVG line charts, plot-data CSV and comparison tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use thiserror::Error;

use crate::io::{write_atomic, IoError};
use crate::scenario::{BacktestReport, SweepRun, Trajectory, TrajectoryRow};

pub const RENDERER_VERSION: &str = concat!("epimacro-svg/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no trajectories to plot")]
    NoTrajectories,
    #[error("no variables requested")]
    NoVariables,
    #[error("unknown variable `{name}` (valid: {})", valid_variables().join(", "))]
    UnknownVariable { name: String },
    #[error(transparent)]
    Io(#[from] IoError),
}

pub fn valid_variables() -> Vec<&'static str> {
    TrajectoryRow::COLUMNS[1..].to_vec()
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 450.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Round step of roughly `span / target`.
fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e5 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

/// One chart, one polyline per series.
pub fn render_svg(title: &str, series: &[(&str, Vec<(NaiveDate, f64)>)]) -> String {
    let dates = series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.0));
    let (mut d0, mut d1) = (NaiveDate::MAX, NaiveDate::MIN);
    for d in dates {
        d0 = d0.min(d);
        d1 = d1.max(d);
    }
    let values = series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.1));
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        let pad = if hi == 0.0 { 1.0 } else { hi.abs() * 0.05 };
        lo -= pad;
        hi += pad;
    }
    let step = nice_step(hi - lo, 5.0);
    let y_lo = (lo / step).floor() * step;
    let y_hi = (hi / step).ceil() * step;
    let span_days = ((d1 - d0).num_days().max(1)) as f64;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |d: NaiveDate| LEFT + plot_w * (d - d0).num_days() as f64 / span_days;
    let py = |v: f64| TOP + plot_h * (1.0 - (v - y_lo) / (y_hi - y_lo));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, "<metadata>{}</metadata>", escape(RENDERER_VERSION));
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );

    // y grid
    let mut v = y_lo;
    while v <= y_hi + step * 1e-9 {
        let y = py(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            tick_label(v)
        );
        v += step;
    }
    // x ticks at year starts
    let years = f64::from(d1.year() - d0.year() + 1);
    let year_step = nice_step(years, 8.0).max(1.0) as i32;
    let mut year = d0.year();
    if NaiveDate::from_ymd_opt(year, 1, 1).is_some_and(|d| d < d0) {
        year += 1;
    }
    year = ((year + year_step - 1) / year_step) * year_step;
    while let Some(d) = NaiveDate::from_ymd_opt(year, 1, 1).filter(|d| *d <= d1) {
        let x = px(d);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#eeeeee"/>"##,
            TOP + plot_h
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{year}</text>"#,
            TOP + plot_h + 18.0
        );
        year += year_step;
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    for (k, (name, pts)) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let mut points = String::new();
        for (d, v) in pts.iter().filter(|p| p.1.is_finite()) {
            let _ = write!(points, "{:.2},{:.2} ", px(*d), py(*v));
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            points.trim_end()
        );
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let lx = LEFT + plot_w + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Long-format plot data: `series,date,value`.
pub fn plot_data_csv(variable: &str, trajectories: &[&Trajectory]) -> String {
    let mut s = format!("series,date,{variable}\n");
    for t in trajectories {
        for row in &t.rows {
            let _ = writeln!(
                s,
                "{},{},{}",
                t.scenario,
                row.date,
                row.value(variable).expect("validated variable")
            );
        }
    }
    s
}

/// Writes `<variable>.svg` and `<variable>.csv` for each variable.
pub fn emit_plots(
    trajectories: &[&Trajectory],
    variables: &[&str],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    if trajectories.is_empty() {
        return Err(ReportError::NoTrajectories);
    }
    if variables.is_empty() {
        return Err(ReportError::NoVariables);
    }
    if let Some(bad) = variables.iter().find(|v| !valid_variables().contains(v)) {
        return Err(ReportError::UnknownVariable {
            name: (*bad).to_owned(),
        });
    }
    let mut written = Vec::new();
    for var in variables {
        let series: Vec<(&str, Vec<(NaiveDate, f64)>)> = trajectories
            .iter()
            .map(|t| {
                (
                    t.scenario.as_str(),
                    t.rows
                        .iter()
                        .map(|r| (r.date, r.value(var).expect("validated")))
                        .collect(),
                )
            })
            .collect();
        let svg = render_svg(var, &series);
        let svg_path = out_dir.join(format!("{var}.svg"));
        write_atomic(&svg_path, svg.as_bytes())?;
        let csv_path = out_dir.join(format!("{var}.csv"));
        write_atomic(&csv_path, plot_data_csv(var, trajectories).as_bytes())?;
        written.push(svg_path);
        written.push(csv_path);
    }
    Ok(written)
}

pub fn sweep_table_csv(runs: &[SweepRun]) -> String {
    let ratio_dates: Vec<NaiveDate> = runs
        .iter()
        .find_map(|r| r.metrics.as_ref())
        .map(|m| m.output_ratios.iter().map(|o| o.date).collect())
        .unwrap_or_default();
    let mut s = String::from(
        "label,scenario,total_deaths,peak_active_infections,peak_date,max_output_drop_pct",
    );
    for d in &ratio_dates {
        let _ = write!(s, ",output_ratio_{d}");
    }
    s.push_str(",welfare,error\n");
    for run in runs {
        let _ = write!(s, "{},{}", run.label, run.scenario.name);
        match &run.metrics {
            Some(m) => {
                let _ = write!(
                    s,
                    ",{},{},{},{}",
                    m.total_deaths, m.peak_active_infections, m.peak_date, m.max_output_drop_pct
                );
                for o in &m.output_ratios {
                    let _ = write!(s, ",{}", o.ratio);
                }
                let _ = writeln!(s, ",{},", m.welfare);
            }
            None => {
                s.push_str(&",".repeat(4 + ratio_dates.len() + 1));
                let msg = run.error.as_deref().unwrap_or("").replace('"', "'");
                let _ = writeln!(s, ",\"{msg}\"");
            }
        }
    }
    s
}

pub fn sweep_table_text(runs: &[SweepRun]) -> String {
    let mut s = format!(
        "{:<14} {:>14} {:>12} {:>10} {:>10}\n",
        "value", "deaths", "peak date", "max drop", "Y ratio"
    );
    for run in runs {
        match &run.metrics {
            Some(m) => {
                let ratio = m
                    .output_ratios
                    .last()
                    .map_or(String::from("-"), |o| format!("{:.4}", o.ratio));
                let _ = writeln!(
                    s,
                    "{:<14} {:>14.5e} {:>12} {:>9.1}% {:>10}",
                    run.label, m.total_deaths, m.peak_date, m.max_output_drop_pct, ratio
                );
            }
            None => {
                let _ = writeln!(
                    s,
                    "{:<14} failed: {}",
                    run.label,
                    run.error.as_deref().unwrap_or("unknown error")
                );
            }
        }
    }
    s
}

pub fn backtest_csv(report: &BacktestReport) -> String {
    let mut s = String::from("panel,year,observed,simulated,relative_error\n");
    for panel in [
        &report.gdp,
        &report.population,
        &report.investment,
        &report.capital,
    ] {
        for r in &panel.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                panel.name, r.year, r.observed, r.simulated, r.relative_error
            );
        }
    }
    s
}

pub fn backtest_text(report: &BacktestReport) -> String {
    let mut s = format!(
        "Backtest {}-{} (solver horizon {})\n",
        report.settings.first_year, report.settings.last_year, report.settings.horizon_year
    );
    let _ = writeln!(
        s,
        "{:<12} {:>10} {:>10} {:>10}  drift",
        "panel", "max |err|", "mean err", "trend"
    );
    for p in [
        &report.gdp,
        &report.population,
        &report.investment,
        &report.capital,
    ] {
        let _ = writeln!(
            s,
            "{:<12} {:>9.2}% {:>9.2}% {:>9.2}%  {}",
            p.name,
            100.0 * p.max_abs_error,
            100.0 * p.mean_error,
            100.0 * p.drift,
            if p.drift_flag {
                if p.drift < 0.0 {
                    "systematic underprediction"
                } else {
                    "systematic overprediction"
                }
            } else {
                "none"
            }
        );
    }
    let _ = writeln!(
        s,
        "GDP within {:.0}% every year: {}",
        100.0 * report.settings.tolerance,
        if report.gdp_within_tolerance {
            "yes"
        } else {
            "no"
        }
    );
    s
}
