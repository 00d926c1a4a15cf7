//! Run configuration: parameter overrides, scenarios, sweep grids, paths.

use std::path::PathBuf;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationSettings;
use crate::params::{ModelParams, ParamsOverride};
use crate::planner::SolverConfig;
use crate::scenario::{
    default_durations_weeks, default_intensities, default_ratio_dates, default_start_dates,
    BacktestSettings, RunSettings, Scenario, SweepDefaults,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepGrids {
    pub start_dates: Vec<NaiveDate>,
    /// Fractions of output foregone.
    pub intensities: Vec<f64>,
    pub durations_weeks: Vec<f64>,
    pub fixed: SweepDefaults,
}

impl Default for SweepGrids {
    fn default() -> Self {
        Self {
            start_dates: default_start_dates(),
            intensities: default_intensities(),
            durations_weeks: default_durations_weeks(),
            fixed: SweepDefaults::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub data_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: ParamsOverride,
    pub solver: SolverConfig,
    pub calibration: CalibrationSettings,
    /// Extra named scenarios, selectable alongside the presets.
    pub scenarios: Vec<Scenario>,
    pub sweeps: SweepGrids,
    /// Dates at which output is compared with the reference run.
    pub ratio_dates: Vec<NaiveDate>,
    pub backtest: BacktestSettings,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ParamsOverride::default(),
            solver: SolverConfig::default(),
            calibration: CalibrationSettings::default(),
            scenarios: Vec::new(),
            sweeps: SweepGrids::default(),
            ratio_dates: default_ratio_dates(),
            backtest: BacktestSettings::default(),
            paths: Paths::default(),
        }
    }
}

impl RunConfig {
    /// Overrides applied on top of `base`.
    pub fn params_over(&self, base: ModelParams) -> ModelParams {
        self.params.apply(base)
    }

    pub fn run_settings(&self) -> RunSettings {
        RunSettings {
            solver: self.solver,
        }
    }

    /// Preset or configured scenario by name.
    pub fn scenario(&self, name: &str) -> Option<Scenario> {
        self.scenarios
            .iter()
            .find(|s| s.name == name)
            .cloned()
            .or_else(|| Scenario::preset(name))
    }

    pub fn scenario_names(&self) -> Vec<String> {
        Scenario::preset_names()
            .iter()
            .map(|s| (*s).to_owned())
            .chain(self.scenarios.iter().map(|s| s.name.clone()))
            .collect()
    }

    /// The shipped default document: every override spelled out.
    pub fn documented_default() -> Self {
        let p = ModelParams::default();
        Self {
            params: ParamsOverride {
                a1: Some(p.a1),
                a2: Some(p.a2),
                delta_daily: Some(p.delta_daily),
                alpha: Some(p.alpha),
                g_daily: Some(p.g_daily),
                beta_daily: Some(p.beta_daily),
                u: Some(p.u),
                h: Some(p.h),
                r: Some(p.r),
                b0: Some(p.b0),
                log_k1: Some(p.log_k1),
                k2: Some(p.k2),
                log_q1: Some(p.log_q1),
                q2: Some(p.q2),
            },
            ..Self::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(
            c.params_over(ModelParams::default()),
            ModelParams::default()
        );
    }

    #[test]
    fn misspelled_key_is_named() {
        let text = r#"{"sweeps": {"intensitys": [0.1]}}"#;
        let mut de = serde_json::Deserializer::from_str(text);
        let err = serde_path_to_error::deserialize::<_, RunConfig>(&mut de).unwrap_err();
        assert_eq!(err.path().to_string(), "sweeps.intensitys");
        assert!(err.inner().to_string().contains("intensitys"));
    }

    #[test]
    fn documented_default_round_trips() {
        let d = RunConfig::documented_default();
        let text = serde_json::to_string(&d).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
        assert_eq!(
            back.params_over(ModelParams::default()),
            ModelParams::default()
        );
    }

    #[test]
    fn configured_scenarios_are_found() {
        let mut c = RunConfig::default();
        let mut s = Scenario::no_intervention();
        s.name = "custom".into();
        c.scenarios.push(s);
        assert!(c.scenario("custom").is_some());
        assert!(c.scenario("no-pandemic").is_some());
        assert!(c.scenario("nope").is_none());
        assert_eq!(c.scenario_names().len(), 3);
    }
}
