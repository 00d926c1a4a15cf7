//! Parameter estimation from annual macro series, daily case counts and the
//! policy trade-off panel.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::epidemic::{MortalityModel, PopGrowthParams, TradeoffModel};
use crate::ols::{ols, OlsError, OlsFit};
use crate::params::{self, ModelParams, DAYS_PER_YEAR};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibError {
    #[error("{what}: need at least {needed} usable observations, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("{what}: {source}")]
    Regression {
        what: &'static str,
        #[source]
        source: OlsError,
    },
    #[error("series years must be strictly increasing without gaps (problem at year {year})")]
    BadYears { year: i32 },
    #[error("series has {years} years but {values} values")]
    LengthMismatch { years: usize, values: usize },
    #[error("series `{series}` has no value for year {year}")]
    Misaligned { series: &'static str, year: i32 },
    #[error("quantile of an empty series")]
    EmptySeries,
    #[error("quantile level {0} outside [0, 1]")]
    BadQuantile(f64),
    #[error("invalid input: {0}")]
    Invalid(String),
}

fn regression(what: &'static str) -> impl Fn(OlsError) -> CalibError {
    move |source| CalibError::Regression { what, source }
}

/// Consecutive annual observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualSeries {
    years: Vec<i32>,
    values: Vec<f64>,
}

impl AnnualSeries {
    pub fn new(years: Vec<i32>, values: Vec<f64>) -> Result<Self, CalibError> {
        if years.len() != values.len() {
            return Err(CalibError::LengthMismatch {
                years: years.len(),
                values: values.len(),
            });
        }
        for w in years.windows(2) {
            if w[1] != w[0] + 1 {
                return Err(CalibError::BadYears { year: w[1] });
            }
        }
        Ok(Self { years, values })
    }

    pub fn from_start(first_year: i32, values: Vec<f64>) -> Self {
        let years = (first_year..).take(values.len()).collect();
        Self { years, values }
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    pub fn get(&self, year: i32) -> Option<f64> {
        let first = *self.years.first()?;
        let idx = usize::try_from(year - first).ok()?;
        self.values.get(idx).copied()
    }

    /// Restrict to `[from, to]`.
    pub fn window(&self, from: i32, to: i32) -> Self {
        let (years, values) = self
            .years
            .iter()
            .zip(&self.values)
            .filter(|(y, _)| (from..=to).contains(*y))
            .map(|(y, v)| (*y, *v))
            .unzip();
        Self { years, values }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            years: self.years.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Cumulative daily case counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSeries {
    pub dates: Vec<NaiveDate>,
    pub confirmed: Vec<f64>,
    pub recovered: Vec<f64>,
    pub deaths: Vec<f64>,
}

impl CaseSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Active infections `confirmed - recovered - deaths`.
    pub fn active(&self) -> Vec<f64> {
        (0..self.len())
            .map(|t| self.confirmed[t] - self.recovered[t] - self.deaths[t])
            .collect()
    }
}

/// Linear-interpolation quantile between order statistics.
pub fn quantile(series: &[f64], q: f64) -> Result<f64, CalibError> {
    if series.is_empty() {
        return Err(CalibError::EmptySeries);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(CalibError::BadQuantile(q));
    }
    if series.iter().any(|v| v.is_nan()) {
        return Err(CalibError::Invalid("NaN in quantile input".into()));
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationFit {
    pub a1_annual: f64,
    pub a2_annual: f64,
    pub fit: OlsFit,
}

/// `N_{t+1} = a1 N_t + a2 N_t^2` by least squares without intercept.
pub fn fit_population(series: &AnnualSeries) -> Result<PopulationFit, CalibError> {
    if series.len() < 3 {
        return Err(CalibError::InsufficientData {
            what: "population fit",
            needed: 3,
            got: series.len(),
        });
    }
    let v = series.values();
    let lag: Vec<f64> = v[..v.len() - 1].to_vec();
    let lag_sq: Vec<f64> = lag.iter().map(|n| n * n).collect();
    let next = &v[1..];
    let fit = ols(&[&lag, &lag_sq], next, false).map_err(regression("population fit"))?;
    Ok(PopulationFit {
        a1_annual: fit.coefficients[0],
        a2_annual: fit.coefficients[1],
        fit,
    })
}

/// Linear daily scaling of annual logistic coefficients.
pub fn to_daily(a1_annual: f64, a2_annual: f64) -> (f64, f64) {
    params::pop_to_daily(a1_annual, a2_annual)
}

/// Perpetual inventory: `K_{y+1} = (1 - delta) K_y + GCF_y`. The result runs
/// from the first GCF year through one year past the last.
pub fn impute_capital(
    gcf: &AnnualSeries,
    delta_annual: f64,
    k_init: f64,
) -> Result<AnnualSeries, CalibError> {
    if !(k_init > 0.0) {
        return Err(CalibError::Invalid(format!(
            "initial capital {k_init} must be positive"
        )));
    }
    let Some(&first) = gcf.years().first() else {
        return Err(CalibError::InsufficientData {
            what: "capital imputation",
            needed: 1,
            got: 0,
        });
    };
    let mut k = Vec::with_capacity(gcf.len() + 1);
    k.push(k_init);
    for &inv in gcf.values() {
        let last = *k.last().unwrap();
        k.push((1.0 - delta_annual) * last + inv);
    }
    Ok(AnnualSeries::from_start(first, k))
}

/// Steady-state starting stock `GCF_0 / (delta + g)` with `g` the mean
/// growth of investment over the first ten years.
pub fn steady_state_capital(gcf: &AnnualSeries, delta_annual: f64) -> Result<f64, CalibError> {
    let v = gcf.values();
    if v.len() < 2 {
        return Err(CalibError::InsufficientData {
            what: "steady-state capital",
            needed: 2,
            got: v.len(),
        });
    }
    let span = (v.len() - 1).min(10);
    let mean_growth = (1..=span).map(|t| v[t] / v[t - 1] - 1.0).sum::<f64>() / span as f64;
    let denom = delta_annual + mean_growth;
    if !(denom > 0.0) {
        return Err(CalibError::Invalid(format!(
            "delta + investment growth = {denom} is not positive"
        )));
    }
    Ok(v[0] / denom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfpEstimate {
    pub tfp: AnnualSeries,
    pub g_annual: f64,
    pub g_daily: f64,
    /// `ln A` on year.
    pub fit: OlsFit,
}

/// Solow residual `A = Y / (K^alpha N^(1 - alpha))` for every output year and
/// its log-linear trend.
pub fn estimate_tfp(
    output: &AnnualSeries,
    capital: &AnnualSeries,
    pop: &AnnualSeries,
    alpha: f64,
) -> Result<TfpEstimate, CalibError> {
    if output.len() < 2 {
        return Err(CalibError::InsufficientData {
            what: "TFP estimation",
            needed: 2,
            got: output.len(),
        });
    }
    let mut a = Vec::with_capacity(output.len());
    for (&year, &y) in output.years().iter().zip(output.values()) {
        let k = capital.get(year).ok_or(CalibError::Misaligned {
            series: "capital",
            year,
        })?;
        let n = pop.get(year).ok_or(CalibError::Misaligned {
            series: "population",
            year,
        })?;
        a.push(y / (k.powf(alpha) * n.powf(1.0 - alpha)));
    }
    let years: Vec<f64> = output.years().iter().map(|&y| f64::from(y)).collect();
    let log_a: Vec<f64> = a.iter().map(|v| v.ln()).collect();
    let fit = ols(&[&years], &log_a, true).map_err(regression("TFP trend"))?;
    let g_annual = fit.coefficients[1].exp_m1();
    Ok(TfpEstimate {
        tfp: AnnualSeries::from_start(output.years()[0], a),
        g_annual,
        g_daily: params::daily_growth(g_annual),
        fit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSeries {
    pub dates: Vec<NaiveDate>,
    pub b: Vec<f64>,
    pub r: Vec<f64>,
    pub m: Vec<f64>,
    /// Days without active infections.
    pub skipped: Vec<NaiveDate>,
}

/// Invert the transition equations day by day. Living population starts at
/// `n0` on the first date and follows the growth model less reported
/// deaths; susceptibles are the living population less active and
/// recovered cases.
pub fn extract_epi_rates(
    cases: &CaseSeries,
    pop_model: &PopGrowthParams,
    n0: f64,
) -> Result<RateSeries, CalibError> {
    if cases.len() < 2 {
        return Err(CalibError::InsufficientData {
            what: "rate extraction",
            needed: 2,
            got: cases.len(),
        });
    }
    let active = cases.active();
    let mut out = RateSeries {
        dates: Vec::new(),
        b: Vec::new(),
        r: Vec::new(),
        m: Vec::new(),
        skipped: Vec::new(),
    };
    let mut n = n0;
    for t in 0..cases.len() - 1 {
        let i = active[t];
        let s = n - i - cases.recovered[t];
        let died = cases.deaths[t + 1] - cases.deaths[t];
        if i > 0.0 && s > 0.0 {
            let r = (cases.recovered[t + 1] - cases.recovered[t]) / i;
            let m = died / i;
            let b = (active[t + 1] - (1.0 - r - m) * i) / (s * i);
            out.dates.push(cases.dates[t]);
            out.b.push(b);
            out.r.push(r);
            out.m.push(m);
        } else {
            out.skipped.push(cases.dates[t]);
        }
        n = n + pop_model.births(n) - died;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub intercept: f64,
    pub slope: f64,
    pub fit: OlsFit,
    /// Pairs removed because a value was not positive.
    pub dropped: usize,
}

fn fit_log_log(what: &'static str, x: &[f64], y: &[f64]) -> Result<LogLogFit, CalibError> {
    if x.len() != y.len() {
        return Err(CalibError::Invalid(format!(
            "{what}: {} regressors, {} responses",
            x.len(),
            y.len()
        )));
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    if lx.len() < 3 {
        return Err(CalibError::InsufficientData {
            what,
            needed: 3,
            got: lx.len(),
        });
    }
    let fit = ols(&[&lx], &ly, true).map_err(regression(what))?;
    Ok(LogLogFit {
        intercept: fit.coefficients[0],
        slope: fit.coefficients[1],
        dropped: x.len() - lx.len(),
        fit,
    })
}

/// `ln m = log_k1 + k2 ln b`.
pub fn fit_mortality(b: &[f64], m: &[f64]) -> Result<(MortalityModel, LogLogFit), CalibError> {
    let f = fit_log_log("mortality fit", b, m)?;
    Ok((
        MortalityModel {
            log_k1: f.intercept,
            k2: f.slope,
        },
        f,
    ))
}

/// `ln reduction = log_q1 + q2 ln shortfall`.
pub fn fit_tradeoff(
    gdp_shortfall_pct: &[f64],
    infection_reduction_pct: &[f64],
) -> Result<(TradeoffModel, LogLogFit), CalibError> {
    let f = fit_log_log("trade-off fit", gdp_shortfall_pct, infection_reduction_pct)?;
    Ok((
        TradeoffModel {
            log_q1: f.intercept,
            q2: f.slope,
        },
        f,
    ))
}

/// Everything [`calibrate`] consumes.
#[derive(Debug, Clone)]
pub struct CalibrationData {
    pub population: AnnualSeries,
    pub gdp: AnnualSeries,
    pub gcf: AnnualSeries,
    pub cases: CaseSeries,
    pub gdp_shortfall_pct: Vec<f64>,
    pub infection_reduction_pct: Vec<f64>,
}

/// Settings that are assumed rather than estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSettings {
    pub alpha: f64,
    pub depreciation_annual: f64,
    pub discount_rate_annual: f64,
    pub u: f64,
    pub h: f64,
    /// Living population on the first case date.
    pub n0_cases: f64,
    pub infection_quantile: f64,
    pub recovery_quantile: f64,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            depreciation_annual: params::annual::DEPRECIATION,
            discount_rate_annual: params::annual::DISCOUNT_RATE,
            u: 5722.078,
            h: 0.147,
            n0_cases: 7.718e9,
            infection_quantile: 0.75,
            recovery_quantile: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    pub term: String,
    pub coefficient: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTable {
    pub title: String,
    pub response: String,
    pub rows: Vec<RegressionRow>,
    pub r_squared: f64,
    pub n_obs: usize,
    pub dropped: usize,
}

impl RegressionTable {
    fn new(title: &str, response: &str, terms: &[&str], fit: &OlsFit, dropped: usize) -> Self {
        Self {
            title: title.into(),
            response: response.into(),
            rows: terms
                .iter()
                .zip(fit.coefficients.iter().zip(&fit.std_errors))
                .map(|(t, (c, s))| RegressionRow {
                    term: (*t).into(),
                    coefficient: *c,
                    std_error: *s,
                })
                .collect(),
            r_squared: fit.r_squared,
            n_obs: fit.n_obs,
            dropped,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{}\nresponse: {}\n", self.title, self.response);
        s.push_str(&format!(
            "{:<28} {:>16} {:>14}\n",
            "term", "coefficient", "std. error"
        ));
        for row in &self.rows {
            s.push_str(&format!(
                "{:<28} {:>16.6e} {:>14.4e}\n",
                row.term, row.coefficient, row.std_error
            ));
        }
        s.push_str(&format!("R^2 = {:.4}, n = {}", self.r_squared, self.n_obs));
        if self.dropped > 0 {
            s.push_str(&format!(", dropped = {}", self.dropped));
        }
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub params: ModelParams,
    pub settings: CalibrationSettings,
    pub population: RegressionTable,
    pub tfp_trend: RegressionTable,
    pub mortality: RegressionTable,
    pub tradeoff: RegressionTable,
    pub capital: AnnualSeries,
    pub tfp: AnnualSeries,
    pub g_annual: f64,
    pub rate_days: usize,
    pub skipped_days: Vec<NaiveDate>,
    pub notes: Vec<String>,
}

pub fn calibrate(
    data: &CalibrationData,
    settings: &CalibrationSettings,
) -> Result<CalibrationReport, CalibError> {
    let pop_fit = fit_population(&data.population)?;
    let (a1, a2) = to_daily(pop_fit.a1_annual, pop_fit.a2_annual);

    let k_init = steady_state_capital(&data.gcf, settings.depreciation_annual)?;
    let capital = impute_capital(&data.gcf, settings.depreciation_annual, k_init)?;
    let daily_gdp = data.gdp.map(|v| v / DAYS_PER_YEAR);
    let tfp = estimate_tfp(&daily_gdp, &capital, &data.population, settings.alpha)?;

    let pop = PopGrowthParams { a1, a2 };
    let rates = extract_epi_rates(&data.cases, &pop, settings.n0_cases)?;
    let b0 = quantile(&rates.b, settings.infection_quantile)?;
    let r = quantile(&rates.r, settings.recovery_quantile)?;
    let (mortality, mort_fit) = fit_mortality(&rates.b, &rates.m)?;
    let (tradeoff, trade_fit) =
        fit_tradeoff(&data.gdp_shortfall_pct, &data.infection_reduction_pct)?;

    let params = ModelParams {
        a1,
        a2,
        delta_daily: params::daily_depreciation(settings.depreciation_annual),
        alpha: settings.alpha,
        g_daily: tfp.g_daily,
        beta_daily: params::daily_discount_factor(settings.discount_rate_annual),
        u: settings.u,
        h: settings.h,
        r,
        b0,
        log_k1: mortality.log_k1,
        k2: mortality.k2,
        log_q1: tradeoff.log_q1,
        q2: tradeoff.q2,
    };
    params
        .validate()
        .map_err(|e| CalibError::Invalid(e.to_string()))?;

    let notes = vec![
        format!(
            "capital initialised at {:.4e} USD in {} (steady state of first-decade investment growth)",
            k_init,
            data.gcf.years()[0]
        ),
        "TFP estimated on daily output (annual GDP / 365)".into(),
        format!(
            "infection rate at the {:.0}% quantile, recovery rate at the {:.0}% quantile of {} daily estimates",
            settings.infection_quantile * 100.0,
            settings.recovery_quantile * 100.0,
            rates.b.len()
        ),
        format!("depreciation {} and discount rate {} per year are assumed", settings.depreciation_annual, settings.discount_rate_annual),
        format!("unit hospital cost {} USD and admission share {} are fixed inputs", settings.u, settings.h),
    ];

    Ok(CalibrationReport {
        params,
        settings: *settings,
        population: RegressionTable::new(
            "Logistic population growth (annual)",
            "population(t)",
            &["population(t-1)", "population(t-1)^2"],
            &pop_fit.fit,
            0,
        ),
        tfp_trend: RegressionTable::new("TFP trend", "ln A(t)", &["constant", "year"], &tfp.fit, 0),
        mortality: RegressionTable::new(
            "Mortality rate",
            "ln(mortality rate)",
            &["constant", "ln(infection rate)"],
            &mort_fit.fit,
            mort_fit.dropped,
        ),
        tradeoff: RegressionTable::new(
            "Production-infection trade-off",
            "ln(infection rate reduction %)",
            &["constant", "ln(GDP shortfall %)"],
            &trade_fit.fit,
            trade_fit.dropped,
        ),
        capital,
        tfp: tfp.tfp,
        g_annual: tfp.g_annual,
        rate_days: rates.b.len(),
        skipped_days: rates.skipped,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epidemic::{epi_step, EpiRates, EpiState};

    #[test]
    fn quantile_examples() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0], 0.5).unwrap(), 2.0);
        assert_eq!(quantile(&[3.0, 1.0], 0.75).unwrap(), 2.5);
        assert_eq!(quantile(&[5.0], 0.3).unwrap(), 5.0);
        assert_eq!(quantile(&[], 0.5), Err(CalibError::EmptySeries));
        assert!(quantile(&[1.0], 1.5).is_err());
    }

    #[test]
    fn population_fit_recovers_synthetic_logistic() {
        let mut v = vec![3.0e9];
        for _ in 0..60 {
            let n = *v.last().unwrap();
            v.push(1.03 * n - 2e-12 * n * n);
        }
        let fit = fit_population(&AnnualSeries::from_start(1960, v)).unwrap();
        assert!((fit.a1_annual - 1.03).abs() < 1e-9);
        assert!((fit.a2_annual - -2e-12).abs() / 2e-12 < 1e-9);
    }

    #[test]
    fn degenerate_population_series() {
        // N and N^2 are collinear when N never moves
        let series = AnnualSeries::from_start(2000, vec![5e9; 4]);
        assert!(matches!(
            fit_population(&series),
            Err(CalibError::Regression { .. })
        ));
        let short = AnnualSeries::from_start(2000, vec![1.0, 2.0]);
        assert!(matches!(
            fit_population(&short),
            Err(CalibError::InsufficientData { .. })
        ));
    }

    #[test]
    fn population_fit_on_stationary_logistic() {
        // a logistic path that has settled at its carrying capacity
        let cap = 0.03 / 2e-12;
        let mut v = vec![cap * 0.5];
        for _ in 0..400 {
            let n = *v.last().unwrap();
            v.push(1.03 * n - 2e-12 * n * n);
        }
        let fit = fit_population(&AnnualSeries::from_start(1600, v)).unwrap();
        let n = cap;
        let next = fit.a1_annual * n + fit.a2_annual * n * n;
        assert!((next - n).abs() / n < 1e-9);
    }

    #[test]
    fn daily_conversion_examples() {
        let (a1, a2) = to_daily(1.028, -2.282e-12);
        assert!((a1 - (1.0 + 0.028 / 365.0)).abs() < 1e-16);
        assert!((a2 - -6.252e-15).abs() < 1e-18);
        assert_eq!(to_daily(1.0, 0.0), (1.0, 0.0));
    }

    #[test]
    fn capital_imputation_examples() {
        let zero = AnnualSeries::from_start(2000, vec![0.0; 3]);
        let k = impute_capital(&zero, 0.1, 100.0).unwrap();
        assert_eq!(k.years(), &[2000, 2001, 2002, 2003]);
        let expected = [100.0, 90.0, 81.0, 72.9];
        for (a, b) in k.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let replacement = AnnualSeries::from_start(2000, vec![10.0; 5]);
        let k = impute_capital(&replacement, 0.1, 100.0).unwrap();
        assert!(k.values().iter().all(|v| (v - 100.0).abs() < 1e-12));
        assert!(impute_capital(&replacement, 0.1, 0.0).is_err());
    }

    #[test]
    fn capital_recursion_identity() {
        let gcf = AnnualSeries::from_start(1990, (0..30).map(|t| 9e12 * 1.04f64.powi(t)).collect());
        let k0 = steady_state_capital(&gcf, 0.0446).unwrap();
        let k = impute_capital(&gcf, 0.0446, k0).unwrap();
        for (t, inv) in gcf.values().iter().enumerate() {
            let lhs = k.values()[t + 1];
            assert_eq!(lhs, (1.0 - 0.0446) * k.values()[t] + inv);
        }
        assert!((k0 - 9e12 / (0.0446 + 0.04)).abs() / k0 < 1e-12);
    }

    fn synthetic_macro(g: f64) -> (AnnualSeries, AnnualSeries, AnnualSeries) {
        let years = 30;
        let k: Vec<f64> = (0..years).map(|t| 2e14 * 1.03f64.powi(t)).collect();
        let n: Vec<f64> = (0..years).map(|t| 5e9 * 1.012f64.powi(t)).collect();
        let y: Vec<f64> = (0..years as usize)
            .map(|t| 1.7 * (1.0 + g).powi(t as i32) * k[t].powf(0.3) * n[t].powf(0.7))
            .collect();
        (
            AnnualSeries::from_start(1990, y),
            AnnualSeries::from_start(1990, k),
            AnnualSeries::from_start(1990, n),
        )
    }

    #[test]
    fn tfp_growth_round_trip() {
        let (y, k, n) = synthetic_macro(0.013);
        let est = estimate_tfp(&y, &k, &n, 0.3).unwrap();
        assert!((est.g_annual - 0.013).abs() < 1e-10);
        assert!((est.g_daily - 3.55e-5).abs() / 3.55e-5 < 0.02);
        assert!((est.tfp.values()[0] - 1.7).abs() < 1e-10);
    }

    #[test]
    fn tfp_constant_inputs_give_zero_growth() {
        let flat = |v: f64| AnnualSeries::from_start(2000, vec![v; 10]);
        let est = estimate_tfp(&flat(1e13), &flat(3e13), &flat(7e9), 0.3).unwrap();
        assert!(est.g_annual.abs() < 1e-12);
    }

    #[test]
    fn tfp_scales_with_output() {
        let (y, k, n) = synthetic_macro(0.01);
        let a = estimate_tfp(&y, &k, &n, 0.3).unwrap();
        let b = estimate_tfp(&y.map(|v| 2.0 * v), &k, &n, 0.3).unwrap();
        for (x, z) in a.tfp.values().iter().zip(b.tfp.values()) {
            assert!((z / x - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tfp_requires_aligned_years() {
        let (y, k, n) = synthetic_macro(0.01);
        let short_k = k.window(1990, 2000);
        assert!(matches!(
            estimate_tfp(&y, &short_k, &n, 0.3),
            Err(CalibError::Misaligned {
                series: "capital",
                year: 2001
            })
        ));
    }

    fn cases_from_model(rates: EpiRates, pop: PopGrowthParams, days: usize) -> (CaseSeries, f64) {
        let start = NaiveDate::from_ymd_opt(2020, 1, 22).unwrap();
        let n0 = 7.7e9;
        let mut s = EpiState::seeded(start, n0, 500.0, 30.0, 17.0);
        let mut cs = CaseSeries {
            dates: vec![],
            confirmed: vec![],
            recovered: vec![],
            deaths: vec![],
        };
        for _ in 0..days {
            cs.dates.push(s.date);
            cs.confirmed.push(s.i + s.r + s.d);
            cs.recovered.push(s.r);
            cs.deaths.push(s.d);
            s = epi_step(&s, &rates, &pop).unwrap();
        }
        (cs, n0)
    }

    #[test]
    fn rate_extraction_round_trip() {
        let rates = EpiRates {
            b: 2e-11,
            r: 0.021,
            m: 0.006,
        };
        for pop in [
            PopGrowthParams::NONE,
            PopGrowthParams {
                a1: 1.0000767,
                a2: -6.252e-15,
            },
        ] {
            let (cases, n0) = cases_from_model(rates, pop, 120);
            let ex = extract_epi_rates(&cases, &pop, n0).unwrap();
            assert_eq!(ex.b.len(), 119);
            for t in 0..ex.b.len() {
                assert!(
                    (ex.b[t] - 2e-11).abs() / 2e-11 < 1e-9,
                    "b day {t}: {}",
                    ex.b[t]
                );
                assert!((ex.r[t] - 0.021).abs() / 0.021 < 1e-9);
                assert!((ex.m[t] - 0.006).abs() / 0.006 < 1e-9);
            }
        }
    }

    #[test]
    fn recovery_rate_is_a_ratio() {
        let d = |n| NaiveDate::from_ymd_opt(2020, 3, n).unwrap();
        let cases = CaseSeries {
            dates: vec![d(1), d(2)],
            confirmed: vec![100.0, 103.0],
            recovered: vec![0.0, 2.1],
            deaths: vec![0.0, 0.0],
        };
        let ex = extract_epi_rates(&cases, &PopGrowthParams::NONE, 1e6).unwrap();
        assert!((ex.r[0] - 0.021).abs() < 1e-15);
    }

    #[test]
    fn days_without_infections_are_skipped() {
        let d = |n| NaiveDate::from_ymd_opt(2020, 3, n).unwrap();
        let cases = CaseSeries {
            dates: vec![d(1), d(2), d(3)],
            confirmed: vec![0.0, 10.0, 12.0],
            recovered: vec![0.0, 0.0, 1.0],
            deaths: vec![0.0, 0.0, 0.0],
        };
        let ex = extract_epi_rates(&cases, &PopGrowthParams::NONE, 1e6).unwrap();
        assert_eq!(ex.skipped, vec![d(1)]);
        assert_eq!(ex.dates, vec![d(2)]);
    }

    #[test]
    fn log_log_fits_recover_exact_power_laws() {
        let b: Vec<f64> = (1..40).map(|i| 1e-12 * f64::from(i)).collect();
        let m: Vec<f64> = b.iter().map(|v| 10f64.exp() * v.sqrt()).collect();
        let (mm, f) = fit_mortality(&b, &m).unwrap();
        assert!((mm.log_k1 - 10.0).abs() < 1e-9);
        assert!((mm.k2 - 0.5).abs() < 1e-9);
        assert_eq!(f.dropped, 0);

        let x: Vec<f64> = (1..30).map(|i| 0.5 * f64::from(i)).collect();
        let y: Vec<f64> = x.iter().map(|v| 3f64.exp() * v.powf(0.3)).collect();
        let (t, _) = fit_tradeoff(&x, &y).unwrap();
        assert!((t.log_q1 - 3.0).abs() < 1e-9);
        assert!((t.q2 - 0.3).abs() < 1e-9);
    }

    #[test]
    fn log_log_fit_drops_nonpositive_pairs() {
        let b = [1e-12, 2e-12, 0.0, 4e-12, -1e-12];
        let m = [1e-3, 2e-3, 5e-3, 3e-3, 1e-3];
        let (_, f) = fit_mortality(&b, &m).unwrap();
        assert_eq!(f.dropped, 2);
        assert_eq!(f.fit.n_obs, 3);
    }

    #[test]
    fn degenerate_fits_rejected() {
        assert!(matches!(
            fit_mortality(&[1e-11; 5], &[1e-3; 5]),
            Err(CalibError::Regression { .. })
        ));
        assert!(matches!(
            fit_tradeoff(&[5.0], &[58.0]),
            Err(CalibError::InsufficientData { .. })
        ));
    }

    #[test]
    fn series_validation() {
        assert!(AnnualSeries::new(vec![2000, 2002], vec![1.0, 2.0]).is_err());
        assert!(AnnualSeries::new(vec![2000, 2001], vec![1.0]).is_err());
        let s = AnnualSeries::new(vec![2000, 2001, 2002], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.get(2001), Some(2.0));
        assert_eq!(s.get(1999), None);
        assert_eq!(s.window(2001, 2005).values(), &[2.0, 3.0]);
    }
}
