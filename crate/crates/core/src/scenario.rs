//! Scenario runs: baselines, policy sweeps and the historical backtest.
//!
//! Each run simulates the epidemic forward to the solver horizon, then
//! solves the planner against the resulting labour, hospital-cost, TFP and
//! shortfall paths. Consumption never feeds back into transmission.

use chrono::{Datelike, Days, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{impute_capital, steady_state_capital, AnnualSeries, CalibError};
use crate::economy::{hospital_cost, tfp_step};
use crate::epidemic::{effective_rates, epi_step, EpiError, EpiRates, EpiState};
use crate::ols::ols;
use crate::params::{annual_depreciation, ModelParams, ParamError, DAYS_PER_YEAR};
use crate::planner::{balanced_path_capital, solve, PlannerError, PlannerInputs, SolverConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("scenario `{scenario}`: {source}")]
    Epidemic {
        scenario: String,
        #[source]
        source: EpiError,
    },
    #[error("scenario `{scenario}`: planner failed{}: {source}", .date.map(|d| format!(" at {d}")).unwrap_or_default())]
    Planner {
        scenario: String,
        date: Option<NaiveDate>,
        #[source]
        source: PlannerError,
    },
    #[error("invalid parameters: {0}")]
    Params(#[from] ParamError),
    #[error("invalid scenario `{scenario}`: {reason}")]
    Invalid { scenario: String, reason: String },
    #[error("trajectories are not aligned: {0}")]
    Misaligned(String),
    #[error("backtest: {0}")]
    Backtest(String),
    #[error("backtest: {0}")]
    Calibration(#[from] CalibError),
}

pub fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid calendar date")
}

fn add_days(date: NaiveDate, days: usize) -> NaiveDate {
    date.checked_add_days(Days::new(days as u64))
        .expect("date within chrono range")
}

/// Temporary output sacrifice active on `[start, start + duration_days)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySchedule {
    pub start: NaiveDate,
    /// Fraction of output foregone while active.
    pub intensity: f64,
    pub duration_days: u32,
}

impl PolicySchedule {
    pub fn weeks(start: NaiveDate, intensity: f64, weeks: u32) -> Self {
        Self {
            start,
            intensity,
            duration_days: weeks * 7,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..1.0).contains(&self.intensity) {
            return Err(format!("intensity {} outside [0, 1)", self.intensity));
        }
        Ok(())
    }

    pub fn is_active(&self, date: NaiveDate) -> bool {
        date >= self.start && (date - self.start).num_days() < i64::from(self.duration_days)
    }

    pub fn shortfall_on(&self, date: NaiveDate) -> f64 {
        if self.is_active(date) {
            self.intensity
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub start_date: NaiveDate,
    pub n0: f64,
    pub i0: f64,
    pub r0: f64,
    pub d0: f64,
    /// Base infection rate; the parameter set's value when absent.
    #[serde(default)]
    pub b0: Option<f64>,
    pub a0: f64,
    pub k0: f64,
    #[serde(default)]
    pub schedule: Option<PolicySchedule>,
    /// Last day reported in the trajectory.
    pub end_of_interest: NaiveDate,
    /// Last decision day of the planner.
    pub horizon: NaiveDate,
}

pub const NO_PANDEMIC: &str = "no-pandemic";
pub const NO_INTERVENTION: &str = "no-intervention";

impl Scenario {
    pub fn no_pandemic() -> Self {
        Self {
            name: NO_PANDEMIC.into(),
            start_date: ymd(2019, 1, 1),
            n0: 7.634e9,
            i0: 0.0,
            r0: 0.0,
            d0: 0.0,
            b0: Some(0.0),
            a0: 1.880,
            k0: 2.775e14,
            schedule: None,
            end_of_interest: ymd(2030, 12, 31),
            horizon: ymd(2060, 12, 31),
        }
    }

    pub fn no_intervention() -> Self {
        Self {
            name: NO_INTERVENTION.into(),
            start_date: ymd(2020, 1, 22),
            n0: 7.718e9,
            i0: 510.0,
            r0: 28.0,
            d0: 17.0,
            b0: None,
            a0: 1.906,
            k0: 2.827e14,
            schedule: None,
            end_of_interest: ymd(2030, 12, 31),
            horizon: ymd(2060, 12, 31),
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            NO_PANDEMIC => Some(Self::no_pandemic()),
            NO_INTERVENTION => Some(Self::no_intervention()),
            _ => None,
        }
    }

    pub fn preset_names() -> &'static [&'static str] {
        &[NO_PANDEMIC, NO_INTERVENTION]
    }

    pub fn with_policy(&self, name: impl Into<String>, schedule: PolicySchedule) -> Self {
        Self {
            name: name.into(),
            schedule: Some(schedule),
            ..self.clone()
        }
    }

    /// Planner decision days, start through horizon inclusive.
    pub fn solver_days(&self) -> usize {
        ((self.horizon - self.start_date).num_days() + 1).max(0) as usize
    }

    pub fn reported_days(&self) -> usize {
        ((self.end_of_interest - self.start_date).num_days() + 1).max(0) as usize
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |reason: String| {
            Err(ScenarioError::Invalid {
                scenario: self.name.clone(),
                reason,
            })
        };
        if self.end_of_interest < self.start_date {
            return bad("end of interest precedes the start date".into());
        }
        if self.horizon <= self.end_of_interest {
            return bad("solver horizon must lie after the end of interest".into());
        }
        let counts = [self.n0, self.i0, self.r0, self.d0];
        if counts.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("initial compartments must be nonnegative".into());
        }
        if self.i0 + self.r0 > self.n0 {
            return bad("infected plus recovered exceed the population".into());
        }
        if !(self.a0 > 0.0 && self.k0 > 0.0) {
            return bad("initial TFP and capital must be positive".into());
        }
        if let Some(b) = self.b0 {
            if !(b >= 0.0 && b.is_finite()) {
                return bad(format!("b0 = {b}"));
            }
        }
        if let Some(s) = &self.schedule {
            if let Err(reason) = s.validate() {
                return bad(reason);
            }
        }
        Ok(())
    }
}

/// Exogenous daily paths produced by the epidemic pass.
#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicPath {
    pub states: Vec<EpiState>,
    pub rates: Vec<EpiRates>,
    pub shortfall: Vec<f64>,
    pub hcost: Vec<f64>,
    pub tfp: Vec<f64>,
}

pub fn simulate_epidemic(
    scenario: &Scenario,
    params: &ModelParams,
) -> Result<EpidemicPath, ScenarioError> {
    scenario.validate()?;
    let epi_err = |source| ScenarioError::Epidemic {
        scenario: scenario.name.clone(),
        source,
    };
    let days = scenario.solver_days();
    let b0 = scenario.b0.unwrap_or(params.b0);
    let pop = params.pop();
    let mortality = params.mortality();
    let tradeoff = params.tradeoff();

    let mut state = EpiState::seeded(
        scenario.start_date,
        scenario.n0,
        scenario.i0,
        scenario.r0,
        scenario.d0,
    );
    let mut a = scenario.a0;
    let mut path = EpidemicPath {
        states: Vec::with_capacity(days),
        rates: Vec::with_capacity(days),
        shortfall: Vec::with_capacity(days),
        hcost: Vec::with_capacity(days),
        tfp: Vec::with_capacity(days),
    };
    for day in 0..days {
        let p = scenario
            .schedule
            .as_ref()
            .map_or(0.0, |s| s.shortfall_on(state.date));
        let reduction = tradeoff.reduction_pct(100.0 * p).map_err(epi_err)?;
        let rates = effective_rates(b0, reduction, &mortality, params.r).map_err(epi_err)?;
        path.hcost
            .push(hospital_cost(params.u, params.h, rates.b, state.s, state.i));
        path.shortfall.push(p);
        path.tfp.push(a);
        path.states.push(state);
        path.rates.push(rates);
        if day + 1 < days {
            state = epi_step(&state, &rates, &pop).map_err(epi_err)?;
            a = tfp_step(a, params.g_daily);
        }
    }
    Ok(path)
}

/// Balanced-path capital at the horizon for the population the scenario
/// would reach without any pandemic.
pub fn terminal_capital(scenario: &Scenario, params: &ModelParams) -> f64 {
    let days = scenario.solver_days();
    let pop = params.pop();
    let mut n = scenario.n0;
    let mut a = scenario.a0;
    for _ in 0..days {
        n += pop.births(n);
        a = tfp_step(a, params.g_daily);
    }
    balanced_path_capital(
        a,
        n,
        params.beta_daily,
        params.alpha,
        params.delta_daily,
        params.g_daily,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub date: NaiveDate,
    pub n: f64,
    pub s: f64,
    pub i: f64,
    pub r: f64,
    pub d: f64,
    pub a: f64,
    pub k: f64,
    pub y: f64,
    pub c: f64,
    pub h: f64,
    pub p: f64,
}

impl TrajectoryRow {
    pub const COLUMNS: [&'static str; 12] = [
        "date", "N", "S", "I", "R", "D", "A", "K", "Y", "C", "H", "p",
    ];

    /// Numeric column by header name.
    pub fn value(&self, column: &str) -> Option<f64> {
        Some(match column {
            "N" => self.n,
            "S" => self.s,
            "I" => self.i,
            "R" => self.r,
            "D" => self.d,
            "A" => self.a,
            "K" => self.k,
            "Y" => self.y,
            "C" => self.c,
            "H" => self.h,
            "p" => self.p,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub scenario: String,
    pub params_fingerprint: String,
    pub rows: Vec<TrajectoryRow>,
    /// Over the full solver horizon.
    pub welfare: f64,
    pub max_euler_residual: f64,
    pub terminal_capital: f64,
    pub horizon: NaiveDate,
}

impl Trajectory {
    pub fn start(&self) -> Option<NaiveDate> {
        self.rows.first().map(|r| r.date)
    }

    pub fn end(&self) -> Option<NaiveDate> {
        self.rows.last().map(|r| r.date)
    }

    pub fn row_at(&self, date: NaiveDate) -> Option<&TrajectoryRow> {
        let start = self.start()?;
        let idx = usize::try_from((date - start).num_days()).ok()?;
        self.rows.get(idx)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        TrajectoryRow::COLUMNS[1..].contains(&name).then(|| {
            self.rows
                .iter()
                .map(|r| r.value(name).expect("known column"))
                .collect()
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub solver: SolverConfig,
}

pub fn run_scenario(
    scenario: &Scenario,
    params: &ModelParams,
    settings: &RunSettings,
) -> Result<Trajectory, ScenarioError> {
    params.validate()?;
    let path = simulate_epidemic(scenario, params)?;
    let k_terminal = terminal_capital(scenario, params);
    let inputs = PlannerInputs {
        labor: path.states.iter().map(EpiState::labor).collect(),
        pop: path.states.iter().map(|s| s.n).collect(),
        tfp: path.tfp.clone(),
        hcost: path.hcost.clone(),
        shortfall: path.shortfall.clone(),
        k0: scenario.k0,
        beta: params.beta_daily,
        alpha: params.alpha,
        delta: params.delta_daily,
        terminal_capital: k_terminal,
    };
    let solution = solve(&inputs, &settings.solver).map_err(|source| {
        let date = match &source {
            PlannerError::Infeasible { day, .. }
            | PlannerError::NonPositiveConsumption { day, .. } => {
                Some(add_days(scenario.start_date, *day))
            }
            _ => None,
        };
        ScenarioError::Planner {
            scenario: scenario.name.clone(),
            date,
            source,
        }
    })?;

    let rows = (0..scenario.reported_days())
        .map(|t| {
            let st = &path.states[t];
            TrajectoryRow {
                date: st.date,
                n: st.n,
                s: st.s,
                i: st.i,
                r: st.r,
                d: st.d,
                a: path.tfp[t],
                k: solution.capital[t],
                y: solution.output[t],
                c: solution.consumption[t],
                h: path.hcost[t],
                p: path.shortfall[t],
            }
        })
        .collect();
    Ok(Trajectory {
        scenario: scenario.name.clone(),
        params_fingerprint: params.fingerprint(),
        rows,
        welfare: solution.welfare,
        max_euler_residual: solution.max_euler_residual(),
        terminal_capital: k_terminal,
        horizon: scenario.horizon,
    })
}

pub fn run_baselines(
    params: &ModelParams,
    settings: &RunSettings,
) -> Result<(Trajectory, Trajectory), ScenarioError> {
    let (a, b) = rayon::join(
        || run_scenario(&Scenario::no_pandemic(), params, settings),
        || run_scenario(&Scenario::no_intervention(), params, settings),
    );
    Ok((a?, b?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputRatio {
    pub date: NaiveDate,
    /// `Y / Y_reference`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryMetrics {
    pub scenario: String,
    pub reference: String,
    pub peak_active_infections: f64,
    pub peak_date: NaiveDate,
    pub total_deaths: f64,
    /// Largest shortfall of output against the reference, in percent.
    pub max_output_drop_pct: f64,
    pub max_output_drop_date: NaiveDate,
    pub output_ratios: Vec<OutputRatio>,
    pub welfare: f64,
    pub max_euler_residual: f64,
}

pub fn summarize(
    trajectory: &Trajectory,
    reference: &Trajectory,
    ratio_dates: &[NaiveDate],
) -> Result<SummaryMetrics, ScenarioError> {
    let (Some(first), Some(last)) = (trajectory.rows.first(), trajectory.rows.last()) else {
        return Err(ScenarioError::Misaligned("empty trajectory".into()));
    };
    let reference_row = |date: NaiveDate| {
        reference.row_at(date).ok_or_else(|| {
            ScenarioError::Misaligned(format!(
                "reference `{}` has no row for {date}",
                reference.scenario
            ))
        })
    };
    reference_row(first.date)?;
    reference_row(last.date)?;

    let mut peak = first;
    let mut drop = (f64::NEG_INFINITY, first.date);
    for row in &trajectory.rows {
        if row.i > peak.i {
            peak = row;
        }
        let pct = 100.0 * (1.0 - row.y / reference_row(row.date)?.y);
        if pct > drop.0 {
            drop = (pct, row.date);
        }
    }
    let output_ratios = ratio_dates
        .iter()
        .map(|&date| {
            let own = trajectory.row_at(date).ok_or_else(|| {
                ScenarioError::Misaligned(format!(
                    "`{}` has no row for {date}",
                    trajectory.scenario
                ))
            })?;
            Ok(OutputRatio {
                date,
                ratio: own.y / reference_row(date)?.y,
            })
        })
        .collect::<Result<_, ScenarioError>>()?;
    Ok(SummaryMetrics {
        scenario: trajectory.scenario.clone(),
        reference: reference.scenario.clone(),
        peak_active_infections: peak.i,
        peak_date: peak.date,
        total_deaths: last.d - first.d,
        max_output_drop_pct: drop.0,
        max_output_drop_date: drop.1,
        output_ratios,
        welfare: trajectory.welfare,
        max_euler_residual: trajectory.max_euler_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Start,
    Intensity,
    Duration,
}

/// One point on a sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Date(NaiveDate),
    /// Intensity as a fraction, or duration in weeks.
    Number(f64),
}

impl SweepValue {
    fn sort_key(&self) -> f64 {
        match self {
            Self::Date(d) => f64::from(d.num_days_from_ce()),
            Self::Number(x) => *x,
        }
    }

    pub fn label(&self, axis: SweepAxis) -> String {
        match (axis, self) {
            (_, Self::Date(d)) => d.to_string(),
            (SweepAxis::Intensity, Self::Number(x)) => format!("{}%", 100.0 * x),
            (SweepAxis::Duration, Self::Number(x)) => format!("{x}w"),
            (SweepAxis::Start, Self::Number(x)) => x.to_string(),
        }
    }
}

/// Fixed policy settings for the two axes not being swept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepDefaults {
    pub start: NaiveDate,
    pub intensity: f64,
    pub duration_weeks: u32,
    /// Start date used by the intensity and duration sweeps.
    pub experiment_start: NaiveDate,
}

impl Default for SweepDefaults {
    fn default() -> Self {
        Self {
            start: ymd(2020, 3, 12),
            intensity: 0.10,
            duration_weeks: 26,
            experiment_start: ymd(2020, 3, 12),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub label: String,
    pub value: SweepValue,
    pub scenario: Scenario,
    pub trajectory: Option<Trajectory>,
    pub metrics: Option<SummaryMetrics>,
    pub error: Option<String>,
}

pub fn sweep_scenarios(
    base: &Scenario,
    axis: SweepAxis,
    values: &[SweepValue],
    defaults: &SweepDefaults,
) -> Result<Vec<(SweepValue, Scenario)>, ScenarioError> {
    values
        .iter()
        .map(|&value| {
            let schedule = match (axis, value) {
                (SweepAxis::Start, SweepValue::Date(d)) => {
                    PolicySchedule::weeks(d, defaults.intensity, defaults.duration_weeks)
                }
                (SweepAxis::Intensity, SweepValue::Number(x)) => {
                    PolicySchedule::weeks(defaults.experiment_start, x, defaults.duration_weeks)
                }
                (SweepAxis::Duration, SweepValue::Number(w)) if w >= 0.0 => PolicySchedule {
                    start: defaults.experiment_start,
                    intensity: defaults.intensity,
                    duration_days: (w * 7.0).round() as u32,
                },
                _ => {
                    return Err(ScenarioError::Invalid {
                        scenario: base.name.clone(),
                        reason: format!("value {value:?} does not fit the {axis:?} axis"),
                    })
                }
            };
            let name = format!("{}-{}", axis_name(axis), value.label(axis));
            Ok((value, base.with_policy(name, schedule)))
        })
        .collect()
}

pub fn axis_name(axis: SweepAxis) -> &'static str {
    match axis {
        SweepAxis::Start => "start",
        SweepAxis::Intensity => "intensity",
        SweepAxis::Duration => "duration",
    }
}

/// Runs every sweep member in parallel. Failures are recorded per run;
/// results come back sorted by axis value.
#[allow(clippy::too_many_arguments)]
pub fn run_sweep(
    params: &ModelParams,
    base: &Scenario,
    axis: SweepAxis,
    values: &[SweepValue],
    defaults: &SweepDefaults,
    reference: &Trajectory,
    ratio_dates: &[NaiveDate],
    settings: &RunSettings,
) -> Result<Vec<SweepRun>, ScenarioError> {
    let scenarios = sweep_scenarios(base, axis, values, defaults)?;
    let mut runs: Vec<SweepRun> = scenarios
        .into_par_iter()
        .map(|(value, scenario)| {
            let outcome = run_scenario(&scenario, params, settings).and_then(|t| {
                let m = summarize(&t, reference, ratio_dates)?;
                Ok((t, m))
            });
            let (trajectory, metrics, error) = match outcome {
                Ok((t, m)) => (Some(t), Some(m), None),
                Err(e) => (None, None, Some(e.to_string())),
            };
            SweepRun {
                label: value.label(axis),
                value,
                scenario,
                trajectory,
                metrics,
                error,
            }
        })
        .collect();
    runs.sort_by(|a, b| a.value.sort_key().total_cmp(&b.value.sort_key()));
    Ok(runs)
}

pub fn sweep_start_dates(
    params: &ModelParams,
    dates: &[NaiveDate],
    reference: &Trajectory,
    ratio_dates: &[NaiveDate],
    settings: &RunSettings,
) -> Result<Vec<SweepRun>, ScenarioError> {
    let values: Vec<SweepValue> = dates.iter().map(|&d| SweepValue::Date(d)).collect();
    run_sweep(
        params,
        &Scenario::no_intervention(),
        SweepAxis::Start,
        &values,
        &SweepDefaults::default(),
        reference,
        ratio_dates,
        settings,
    )
}

pub fn sweep_intensity(
    params: &ModelParams,
    intensities: &[f64],
    reference: &Trajectory,
    ratio_dates: &[NaiveDate],
    settings: &RunSettings,
) -> Result<Vec<SweepRun>, ScenarioError> {
    let values: Vec<SweepValue> = intensities.iter().map(|&x| SweepValue::Number(x)).collect();
    run_sweep(
        params,
        &Scenario::no_intervention(),
        SweepAxis::Intensity,
        &values,
        &SweepDefaults::default(),
        reference,
        ratio_dates,
        settings,
    )
}

pub fn sweep_duration(
    params: &ModelParams,
    weeks: &[f64],
    reference: &Trajectory,
    ratio_dates: &[NaiveDate],
    settings: &RunSettings,
) -> Result<Vec<SweepRun>, ScenarioError> {
    let values: Vec<SweepValue> = weeks.iter().map(|&x| SweepValue::Number(x)).collect();
    run_sweep(
        params,
        &Scenario::no_intervention(),
        SweepAxis::Duration,
        &values,
        &SweepDefaults::default(),
        reference,
        ratio_dates,
        settings,
    )
}

/// Weekly from April 9 to May 28 2020, then June 2 and July 2.
pub fn default_start_dates() -> Vec<NaiveDate> {
    let mut dates: Vec<NaiveDate> = (0..8).map(|w| add_days(ymd(2020, 4, 9), 7 * w)).collect();
    dates.push(ymd(2020, 6, 2));
    dates.push(ymd(2020, 7, 2));
    dates
}

pub fn default_intensities() -> Vec<f64> {
    vec![0.05, 0.15, 0.25]
}

pub fn default_durations_weeks() -> Vec<f64> {
    vec![4.0, 28.0, 52.0, 76.0]
}

pub fn default_ratio_dates() -> Vec<NaiveDate> {
    vec![ymd(2030, 12, 31)]
}

/// Observed annual series the backtest is scored against.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedSeries {
    pub gdp: AnnualSeries,
    pub population: AnnualSeries,
    pub gcf: AnnualSeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BacktestSettings {
    pub first_year: i32,
    pub last_year: i32,
    pub horizon_year: i32,
    /// Largest relative GDP error accepted in any year.
    pub tolerance: f64,
    /// Cumulative trend in relative error over the window flagged as drift.
    pub drift_threshold: f64,
}

impl Default for BacktestSettings {
    fn default() -> Self {
        Self {
            first_year: 1990,
            last_year: 2010,
            horizon_year: 2040,
            tolerance: 0.10,
            drift_threshold: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestRow {
    pub year: i32,
    pub observed: f64,
    pub simulated: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestPanel {
    pub name: String,
    pub rows: Vec<BacktestRow>,
    pub max_abs_error: f64,
    pub mean_error: f64,
    /// Fitted change in relative error across the whole window.
    pub drift: f64,
    pub drift_flag: bool,
}

impl BacktestPanel {
    fn new(name: &str, rows: Vec<BacktestRow>, threshold: f64) -> Self {
        let errs: Vec<f64> = rows.iter().map(|r| r.relative_error).collect();
        let years: Vec<f64> = rows.iter().map(|r| f64::from(r.year)).collect();
        let span = years.last().copied().unwrap_or(0.0) - years.first().copied().unwrap_or(0.0);
        let drift = ols(&[&years], &errs, true)
            .map(|f| f.coefficients[1] * span)
            .unwrap_or(0.0);
        Self {
            name: name.into(),
            max_abs_error: errs.iter().fold(0.0, |m, e| m.max(e.abs())),
            mean_error: errs.iter().sum::<f64>() / errs.len().max(1) as f64,
            drift,
            drift_flag: drift.abs() > threshold,
            rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub settings: BacktestSettings,
    pub initial_capital: f64,
    pub initial_tfp: f64,
    pub gdp: BacktestPanel,
    pub population: BacktestPanel,
    pub investment: BacktestPanel,
    pub capital: BacktestPanel,
    /// Every GDP year within tolerance.
    pub gdp_within_tolerance: bool,
}

fn year_bounds(trajectory: &Trajectory, year: i32) -> Option<(usize, usize)> {
    let start = trajectory.start()?;
    let first = (ymd(year, 1, 1) - start).num_days();
    let last = (ymd(year, 12, 31) - start).num_days();
    (first >= 0 && (last as usize) < trajectory.rows.len())
        .then_some((first as usize, last as usize))
}

/// No-pandemic run from observed initial conditions, scored year by year.
pub fn backtest(
    params: &ModelParams,
    observed: &ObservedSeries,
    settings: &BacktestSettings,
    run: &RunSettings,
) -> Result<(Trajectory, BacktestReport), ScenarioError> {
    let (y0, y1) = (settings.first_year, settings.last_year);
    for (name, series) in [
        ("GDP", &observed.gdp),
        ("population", &observed.population),
        ("capital formation", &observed.gcf),
    ] {
        if series.is_empty() {
            return Err(ScenarioError::Backtest(format!(
                "observed {name} series is empty"
            )));
        }
        if series.get(y0).is_none() || series.get(y1).is_none() {
            return Err(ScenarioError::Backtest(format!(
                "observed {name} does not cover {y0}-{y1}"
            )));
        }
    }
    let delta_annual = annual_depreciation(params.delta_daily);
    let k_init = steady_state_capital(&observed.gcf, delta_annual)?;
    let capital = impute_capital(&observed.gcf, delta_annual, k_init)?;
    let k0 = capital
        .get(y0)
        .ok_or_else(|| ScenarioError::Backtest(format!("no imputed capital for {y0}")))?;
    let n0 = observed.population.get(y0).expect("checked above");
    let daily_gdp = observed.gdp.get(y0).expect("checked above") / DAYS_PER_YEAR;
    let a0 = daily_gdp / (k0.powf(params.alpha) * n0.powf(1.0 - params.alpha));

    let scenario = Scenario {
        name: format!("backtest-{y0}-{y1}"),
        start_date: ymd(y0, 1, 1),
        n0,
        i0: 0.0,
        r0: 0.0,
        d0: 0.0,
        b0: Some(0.0),
        a0,
        k0,
        schedule: None,
        end_of_interest: ymd(y1, 12, 31),
        horizon: ymd(settings.horizon_year, 12, 31),
    };
    let trajectory = run_scenario(&scenario, params, run)?;

    let mut gdp = Vec::new();
    let mut pop = Vec::new();
    let mut inv = Vec::new();
    let mut cap = Vec::new();
    let row = |year: i32, observed: f64, simulated: f64| BacktestRow {
        year,
        observed,
        simulated,
        relative_error: simulated / observed - 1.0,
    };
    for year in y0..=y1 {
        let (a, b) = year_bounds(&trajectory, year).expect("trajectory covers window");
        let days = &trajectory.rows[a..=b];
        let y_sum: f64 = days.iter().map(|r| r.y).sum();
        let i_sum: f64 = days.iter().map(|r| r.y - r.c - r.h).sum();
        let mid = trajectory
            .row_at(ymd(year, 7, 1))
            .expect("trajectory covers window");
        gdp.push(row(year, observed.gdp.get(year).expect("checked"), y_sum));
        if let Some(n) = observed.population.get(year) {
            pop.push(row(year, n, mid.n));
        }
        if let Some(g) = observed.gcf.get(year) {
            inv.push(row(year, g, i_sum));
        }
        if let Some(k) = capital.get(year) {
            cap.push(row(year, k, days[0].k));
        }
    }
    let gdp = BacktestPanel::new("gdp", gdp, settings.drift_threshold);
    let report = BacktestReport {
        settings: *settings,
        initial_capital: k0,
        initial_tfp: a0,
        gdp_within_tolerance: gdp.max_abs_error <= settings.tolerance,
        gdp,
        population: BacktestPanel::new("population", pop, settings.drift_threshold),
        investment: BacktestPanel::new("investment", inv, settings.drift_threshold),
        capital: BacktestPanel::new("capital", cap, settings.drift_threshold),
    };
    Ok((trajectory, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(mut s: Scenario) -> Scenario {
        s.end_of_interest = ymd(2021, 12, 31);
        s.horizon = ymd(2035, 12, 31);
        s
    }

    #[test]
    fn schedule_window_is_half_open() {
        let s = PolicySchedule::weeks(ymd(2020, 3, 12), 0.1, 26);
        assert_eq!(s.duration_days, 182);
        assert!(!s.is_active(ymd(2020, 3, 11)));
        assert!(s.is_active(ymd(2020, 3, 12)));
        assert!(s.is_active(ymd(2020, 9, 9)));
        assert!(!s.is_active(ymd(2020, 9, 10)));
        let none = PolicySchedule::weeks(ymd(2020, 3, 12), 0.1, 0);
        assert!(!none.is_active(ymd(2020, 3, 12)));
        assert!(PolicySchedule::weeks(ymd(2020, 1, 1), 1.0, 1)
            .validate()
            .is_err());
    }

    #[test]
    fn no_pandemic_has_no_infections() {
        let p = ModelParams::default();
        let t = run_scenario(&short(Scenario::no_pandemic()), &p, &RunSettings::default()).unwrap();
        assert!(t
            .rows
            .iter()
            .all(|r| r.i == 0.0 && r.d == 0.0 && r.h == 0.0));
        assert!(t.max_euler_residual < 1e-6);
    }

    #[test]
    fn zero_intensity_policy_is_a_no_op() {
        let p = ModelParams::default();
        let base = short(Scenario::no_intervention());
        let a = run_scenario(&base, &p, &RunSettings::default()).unwrap();
        for sched in [
            PolicySchedule::weeks(ymd(2020, 3, 12), 0.0, 26),
            PolicySchedule::weeks(ymd(2020, 3, 12), 0.1, 0),
        ] {
            let b = run_scenario(
                &base.with_policy(base.name.clone(), sched),
                &p,
                &RunSettings::default(),
            )
            .unwrap();
            assert_eq!(a.rows, b.rows);
            assert_eq!(a.welfare, b.welfare);
        }
    }

    #[test]
    fn epidemic_path_ignores_economic_inputs() {
        let p = ModelParams::default();
        let base = short(Scenario::no_intervention());
        let other = Scenario {
            k0: 1.5e14,
            ..base.clone()
        };
        let q = ModelParams {
            beta_daily: 0.9997,
            ..p
        };
        let a = simulate_epidemic(&base, &p).unwrap();
        let b = simulate_epidemic(&other, &q).unwrap();
        assert_eq!(a.states, b.states);
        assert_eq!(a.hcost, b.hcost);
    }

    #[test]
    fn summary_against_itself() {
        let p = ModelParams::default();
        let t = run_scenario(
            &short(Scenario::no_intervention()),
            &p,
            &RunSettings::default(),
        )
        .unwrap();
        let m = summarize(&t, &t, &[ymd(2021, 6, 30)]).unwrap();
        assert_eq!(m.max_output_drop_pct, 0.0);
        assert_eq!(m.output_ratios[0].ratio, 1.0);
        let last = t.rows.last().unwrap().d;
        assert_eq!(m.total_deaths, last - t.rows[0].d);
    }

    #[test]
    fn summary_rejects_uncovered_reference() {
        let p = ModelParams::default();
        let np =
            run_scenario(&short(Scenario::no_pandemic()), &p, &RunSettings::default()).unwrap();
        let mut late = short(Scenario::no_intervention());
        late.end_of_interest = ymd(2022, 6, 30);
        let t = run_scenario(&late, &p, &RunSettings::default()).unwrap();
        assert!(matches!(
            summarize(&t, &np, &[]),
            Err(ScenarioError::Misaligned(_))
        ));
    }

    #[test]
    fn sweep_values_must_match_axis() {
        let base = Scenario::no_intervention();
        let err = sweep_scenarios(
            &base,
            SweepAxis::Start,
            &[SweepValue::Number(0.1)],
            &SweepDefaults::default(),
        );
        assert!(err.is_err());
        let ok = sweep_scenarios(
            &base,
            SweepAxis::Duration,
            &[SweepValue::Number(26.0)],
            &SweepDefaults::default(),
        )
        .unwrap();
        assert_eq!(ok[0].1.schedule.unwrap().duration_days, 182);
        assert_eq!(ok[0].1.name, "duration-26w");
    }

    #[test]
    fn default_grids() {
        let d = default_start_dates();
        assert_eq!(d.first(), Some(&ymd(2020, 4, 9)));
        assert!(d.contains(&ymd(2020, 5, 21)));
        assert!(d.contains(&ymd(2020, 6, 2)));
        assert_eq!(d.last(), Some(&ymd(2020, 7, 2)));
    }

    #[test]
    fn invalid_scenarios_rejected() {
        let mut s = Scenario::no_intervention();
        s.horizon = s.end_of_interest;
        assert!(s.validate().is_err());
        let mut s = Scenario::no_intervention();
        s.i0 = 1e10;
        assert!(s.validate().is_err());
    }
}
