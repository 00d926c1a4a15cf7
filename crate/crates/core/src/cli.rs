//! Command-line front end.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};

use crate::calibration::calibrate;
use crate::config::RunConfig;
use crate::io::{
    ensure_dir, load_annual_series, load_calibration_data, load_config, read_json, read_trajectory,
    write_atomic, write_json, write_trajectory, DatasetKind, DatasetManifest, OutputManifest,
};
use crate::params::ModelParams;
use crate::report::{backtest_csv, backtest_text, emit_plots, sweep_table_csv, sweep_table_text};
use crate::scenario::{
    backtest, run_scenario, run_sweep, summarize, ObservedSeries, Scenario, SweepAxis, SweepValue,
    Trajectory, NO_PANDEMIC,
};
use crate::{Error, Result};

pub const DATA_DIR_ENV: &str = "EPIMACRO_DATA_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "epimacro",
    version,
    about = "Pandemic-economy simulator, calibration and policy experiments"
)]
pub struct Cli {
    /// Run configuration (JSON); unknown keys are rejected.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate every model constant from the datasets.
    Calibrate {
        /// Directory holding manifest.json and the datasets.
        #[arg(long, env = DATA_DIR_ENV)]
        data: Option<PathBuf>,
        /// Where to write the parameter file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one scenario and write its trajectory and summary.
    Simulate {
        #[arg(long)]
        params: Option<PathBuf>,
        /// Preset or configured scenario name, or a scenario JSON file.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Vary one policy dimension around the no-intervention baseline.
    Sweep {
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated: ISO dates for `start`, percentages for
        /// `intensity`, weeks for `duration`. Defaults to the configured grid.
        #[arg(long)]
        values: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay the historical window without a pandemic and score the fit.
    Backtest {
        #[arg(long)]
        params: Option<PathBuf>,
        /// Dataset directory with observed GDP, population and investment.
        #[arg(long, env = DATA_DIR_ENV)]
        observed: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plot columns of saved trajectory CSV files.
    Report {
        /// Trajectory CSV files; each becomes one series named after its file.
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        /// Comma-separated column names.
        #[arg(long, default_value = "I,D,Y,C")]
        variables: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Start,
    Intensity,
    Duration,
}

impl From<Axis> for SweepAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::Start => SweepAxis::Start,
            Axis::Intensity => SweepAxis::Intensity,
            Axis::Duration => SweepAxis::Duration,
        }
    }
}

const PLOT_VARIABLES: [&str; 4] = ["I", "D", "Y", "C"];

fn load_run_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => Ok(load_config(p)?),
        None => Ok(RunConfig::default()),
    }
}

/// Parameter file if given, else configured overrides on the defaults.
fn resolve_params(config: &RunConfig, file: Option<&Path>) -> Result<ModelParams> {
    let params = match file {
        Some(p) => read_json::<ModelParams>(p)?,
        None => config.params_over(ModelParams::default()),
    };
    params.validate()?;
    Ok(params)
}

fn data_dir(flag: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    flag.or_else(|| config.paths.data_dir.clone())
        .unwrap_or_else(|| PathBuf::from("data"))
}

fn parse_values(axis: Axis, text: &str) -> Result<Vec<SweepValue>> {
    let items: Vec<&str> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(Error::Usage("--values must list at least one value".into()));
    }
    items
        .iter()
        .map(|item| match axis {
            Axis::Start => NaiveDate::parse_from_str(item, "%Y-%m-%d")
                .map(SweepValue::Date)
                .map_err(|_| Error::Usage(format!("`{item}` is not an ISO date"))),
            Axis::Intensity => item
                .trim_end_matches('%')
                .parse::<f64>()
                .ok()
                .filter(|v| (0.0..100.0).contains(v))
                .map(|v| SweepValue::Number(v / 100.0))
                .ok_or_else(|| Error::Usage(format!("`{item}` is not a percentage in [0, 100)"))),
            Axis::Duration => item
                .parse::<f64>()
                .ok()
                .filter(|v| *v >= 0.0 && v.is_finite())
                .map(SweepValue::Number)
                .ok_or_else(|| Error::Usage(format!("`{item}` is not a number of weeks"))),
        })
        .collect()
}

fn configured_values(axis: Axis, config: &RunConfig) -> Vec<SweepValue> {
    match axis {
        Axis::Start => config
            .sweeps
            .start_dates
            .iter()
            .map(|&d| SweepValue::Date(d))
            .collect(),
        Axis::Intensity => config
            .sweeps
            .intensities
            .iter()
            .map(|&x| SweepValue::Number(x))
            .collect(),
        Axis::Duration => config
            .sweeps
            .durations_weeks
            .iter()
            .map(|&x| SweepValue::Number(x))
            .collect(),
    }
}

fn reference_run(config: &RunConfig, params: &ModelParams) -> Result<Trajectory> {
    let scenario = config
        .scenario(NO_PANDEMIC)
        .expect("preset always available");
    Ok(run_scenario(&scenario, params, &config.run_settings())?)
}

fn cmd_calibrate(config: &RunConfig, data: Option<PathBuf>, out: &Path) -> Result<String> {
    let dir = data_dir(data, config);
    let loaded = load_calibration_data(&dir)?;
    let report = calibrate(&loaded.data, &config.calibration)?;
    let out_dir = out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    ensure_dir(out_dir)?;
    write_json(out, &report.params)?;
    let mut text = String::new();
    for table in [
        &report.population,
        &report.tfp_trend,
        &report.mortality,
        &report.tradeoff,
    ] {
        text.push_str(&table.to_text());
        text.push('\n');
    }
    text.push_str(&format!(
        "case-count repairs: {}\nskipped rate days: {}\n",
        loaded.repairs.len(),
        report.skipped_days.len()
    ));
    for note in &report.notes {
        text.push_str(&format!("note: {note}\n"));
    }
    write_json(&out_dir.join("calibration_report.json"), &report)?;
    write_atomic(&out_dir.join("calibration_report.txt"), text.as_bytes())?;
    if !loaded.repairs.is_empty() {
        write_json(&out_dir.join("case_repairs.json"), &loaded.repairs)?;
    }
    Ok(text)
}

fn load_scenario(config: &RunConfig, name: &str) -> Result<Scenario> {
    if let Some(s) = config.scenario(name) {
        return Ok(s);
    }
    let path = Path::new(name);
    if path.is_file() {
        let s: Scenario = read_json(path)?;
        s.validate()?;
        return Ok(s);
    }
    Err(Error::Usage(format!(
        "unknown scenario `{name}` (known: {})",
        config.scenario_names().join(", ")
    )))
}

fn cmd_simulate(
    config: &RunConfig,
    params: Option<&Path>,
    name: &str,
    out: &Path,
) -> Result<String> {
    let params = resolve_params(config, params)?;
    let scenario = load_scenario(config, name)?;
    ensure_dir(out)?;
    let settings = config.run_settings();
    let (trajectory, reference) = if scenario.name == NO_PANDEMIC {
        let t = run_scenario(&scenario, &params, &settings)?;
        (t.clone(), t)
    } else {
        let (t, r) = rayon::join(
            || run_scenario(&scenario, &params, &settings),
            || reference_run(config, &params),
        );
        (t?, r?)
    };
    let ratio_dates: Vec<NaiveDate> = config
        .ratio_dates
        .iter()
        .copied()
        .filter(|d| trajectory.row_at(*d).is_some())
        .collect();
    let metrics = summarize(&trajectory, &reference, &ratio_dates)?;

    let mut manifest = OutputManifest::new("simulate");
    manifest.params_fingerprint = Some(trajectory.params_fingerprint.clone());
    write_trajectory(&trajectory, &out.join("trajectory.csv"))?;
    manifest.add(
        "trajectory.csv",
        "trajectory",
        format!("daily path of `{}`", scenario.name),
    );
    write_json(&out.join("metrics.json"), &metrics)?;
    manifest.add(
        "metrics.json",
        "metrics",
        format!("summary against `{}`", reference.scenario),
    );
    write_json(&out.join("params.json"), &params)?;
    manifest.add("params.json", "params", "parameters used");
    write_json(&out.join("scenario.json"), &scenario)?;
    manifest.add("scenario.json", "scenario", "scenario definition");
    let mut plotted = vec![&trajectory];
    if reference.scenario != trajectory.scenario {
        plotted.push(&reference);
    }
    for file in emit_plots(&plotted, &PLOT_VARIABLES, out)? {
        let name = file_name(&file);
        let kind = if name.ends_with(".svg") {
            "plot"
        } else {
            "plot-data"
        };
        manifest.add(name, kind, "");
    }
    manifest.write(out)?;
    Ok(format!(
        "{}: total deaths {:.4e}, peak {:.4e} on {}, max output drop {:.1}%\n",
        scenario.name,
        metrics.total_deaths,
        metrics.peak_active_infections,
        metrics.peak_date,
        metrics.max_output_drop_pct
    ))
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn cmd_sweep(
    config: &RunConfig,
    params: Option<&Path>,
    axis: Axis,
    values: Option<&str>,
    out: &Path,
) -> Result<String> {
    let params = resolve_params(config, params)?;
    let values = match values {
        Some(v) => parse_values(axis, v)?,
        None => configured_values(axis, config),
    };
    if values.is_empty() {
        return Err(Error::Usage("sweep grid is empty".into()));
    }
    ensure_dir(out)?;
    let settings = config.run_settings();
    let reference = reference_run(config, &params)?;
    let base = config
        .scenario(crate::scenario::NO_INTERVENTION)
        .expect("preset always available");
    let runs = run_sweep(
        &params,
        &base,
        axis.into(),
        &values,
        &config.sweeps.fixed,
        &reference,
        &config.ratio_dates,
        &settings,
    )?;

    let mut manifest = OutputManifest::new("sweep");
    manifest.params_fingerprint = Some(params.fingerprint());
    for run in &runs {
        let dir_name = run.scenario.name.replace('%', "pct");
        let dir = out.join(&dir_name);
        ensure_dir(&dir)?;
        if let (Some(t), Some(m)) = (&run.trajectory, &run.metrics) {
            write_trajectory(t, &dir.join("trajectory.csv"))?;
            write_json(&dir.join("metrics.json"), m)?;
            manifest.add(
                format!("{dir_name}/trajectory.csv"),
                "trajectory",
                run.label.clone(),
            );
            manifest.add(
                format!("{dir_name}/metrics.json"),
                "metrics",
                run.label.clone(),
            );
        }
    }
    write_atomic(
        &out.join("comparison.csv"),
        sweep_table_csv(&runs).as_bytes(),
    )?;
    manifest.add("comparison.csv", "table", "one row per sweep member");
    let text = sweep_table_text(&runs);
    write_atomic(&out.join("comparison.txt"), text.as_bytes())?;
    manifest.add("comparison.txt", "table", "human-readable comparison");
    let mut plotted: Vec<&Trajectory> = runs.iter().filter_map(|r| r.trajectory.as_ref()).collect();
    plotted.push(&reference);
    let plot_dir = out.join("plots");
    ensure_dir(&plot_dir)?;
    for file in emit_plots(&plotted, &PLOT_VARIABLES, &plot_dir)? {
        let name = file_name(&file);
        let kind = if name.ends_with(".svg") {
            "plot"
        } else {
            "plot-data"
        };
        manifest.add(format!("plots/{name}"), kind, "");
    }
    manifest.write(out)?;
    let failed = runs.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        return Err(Error::Usage(format!(
            "{failed} of {} sweep runs failed; see {}\n{text}",
            runs.len(),
            out.join("comparison.csv").display()
        )));
    }
    Ok(text)
}

fn cmd_backtest(
    config: &RunConfig,
    params: Option<&Path>,
    observed: Option<PathBuf>,
    out: &Path,
) -> Result<String> {
    let params = resolve_params(config, params)?;
    let dir = data_dir(observed, config);
    let manifest = DatasetManifest::load(&dir)?;
    let series = |kind: DatasetKind| -> Result<_> {
        let entry = manifest.entry(kind).ok_or_else(|| {
            Error::Usage(format!(
                "observed {} series missing from {}",
                kind.name(),
                dir.display()
            ))
        })?;
        Ok(load_annual_series(&manifest, entry)?)
    };
    let observed = ObservedSeries {
        gdp: series(DatasetKind::Gdp)?,
        population: series(DatasetKind::Population)?,
        gcf: series(DatasetKind::Gcf)?,
    };
    let (trajectory, report) =
        backtest(&params, &observed, &config.backtest, &config.run_settings())?;
    ensure_dir(out)?;
    let mut files = OutputManifest::new("backtest");
    files.params_fingerprint = Some(params.fingerprint());
    write_atomic(&out.join("backtest.csv"), backtest_csv(&report).as_bytes())?;
    files.add(
        "backtest.csv",
        "table",
        "observed vs simulated by panel and year",
    );
    write_json(&out.join("backtest.json"), &report)?;
    files.add("backtest.json", "report", "fit report");
    let text = backtest_text(&report);
    write_atomic(&out.join("backtest.txt"), text.as_bytes())?;
    files.add("backtest.txt", "report", "human-readable fit report");
    write_trajectory(&trajectory, &out.join("trajectory.csv"))?;
    files.add("trajectory.csv", "trajectory", "simulated daily path");
    for file in emit_plots(&[&trajectory], &["N", "K", "Y", "C"], out)? {
        let name = file_name(&file);
        let kind = if name.ends_with(".svg") {
            "plot"
        } else {
            "plot-data"
        };
        files.add(name, kind, "");
    }
    files.write(out)?;
    Ok(text)
}

fn cmd_report(inputs: &[PathBuf], variables: &str, out: &Path) -> Result<String> {
    let vars: Vec<&str> = variables
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    let mut trajectories = Vec::with_capacity(inputs.len());
    for path in inputs {
        let rows = read_trajectory(path)?;
        let name = path
            .parent()
            .filter(|_| path.file_stem().is_some_and(|s| s == "trajectory"))
            .and_then(|p| p.file_name())
            .or_else(|| path.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        trajectories.push(Trajectory {
            scenario: name,
            params_fingerprint: String::new(),
            rows,
            welfare: f64::NAN,
            max_euler_residual: f64::NAN,
            terminal_capital: f64::NAN,
            horizon: NaiveDate::MIN,
        });
    }
    ensure_dir(out)?;
    let refs: Vec<&Trajectory> = trajectories.iter().collect();
    let written = emit_plots(&refs, &vars, out)?;
    let mut manifest = OutputManifest::new("report");
    for file in &written {
        let name = file_name(file);
        let kind = if name.ends_with(".svg") {
            "plot"
        } else {
            "plot-data"
        };
        manifest.add(name, kind, "");
    }
    manifest.write(out)?;
    Ok(format!(
        "wrote {} files to {}\n",
        written.len(),
        out.display()
    ))
}

/// Executes one command and returns the text meant for standard output.
pub fn run(cli: Cli) -> Result<String> {
    let config = load_run_config(cli.config.as_deref())?;
    match cli.command {
        Command::Calibrate { data, out } => cmd_calibrate(&config, data, &out),
        Command::Simulate {
            params,
            scenario,
            out,
        } => cmd_simulate(&config, params.as_deref(), &scenario, &out),
        Command::Sweep {
            params,
            axis,
            values,
            out,
        } => cmd_sweep(&config, params.as_deref(), axis, values.as_deref(), &out),
        Command::Backtest {
            params,
            observed,
            out,
        } => cmd_backtest(&config, params.as_deref(), observed, &out),
        Command::Report {
            inputs,
            variables,
            out,
        } => cmd_report(&inputs, &variables, &out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn value_parsing() {
        let d = parse_values(Axis::Duration, "4, 28,52,76").unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(d[1], SweepValue::Number(28.0));
        let i = parse_values(Axis::Intensity, "5,15%").unwrap();
        assert_eq!(i, vec![SweepValue::Number(0.05), SweepValue::Number(0.15)]);
        let s = parse_values(Axis::Start, "2020-05-21").unwrap();
        assert_eq!(s.len(), 1);
        assert!(parse_values(Axis::Duration, "").is_err());
        assert!(parse_values(Axis::Start, "May 21").is_err());
        assert!(parse_values(Axis::Intensity, "100").is_err());
    }
}
