//! Calibrated model constants at daily resolution.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::economy::EconParams;
use crate::epidemic::{MortalityModel, PopGrowthParams, TradeoffModel};

pub const DAYS_PER_YEAR: f64 = 365.0;

/// Annual values the daily defaults are derived from.
pub mod annual {
    pub const POP_A1: f64 = 1.028;
    pub const POP_A2: f64 = -2.282e-12;
    pub const DEPRECIATION: f64 = 0.0446;
    pub const DISCOUNT_RATE: f64 = 0.08;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("parameter `{name}` = {value} violates {rule}")]
    Invalid {
        name: &'static str,
        value: f64,
        rule: &'static str,
    },
}

/// Every constant the simulator needs, expressed per day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub a1: f64,
    pub a2: f64,
    pub delta_daily: f64,
    pub alpha: f64,
    pub g_daily: f64,
    pub beta_daily: f64,
    /// USD per hospital admission.
    pub u: f64,
    /// Hospital admissions per confirmed case.
    pub h: f64,
    pub r: f64,
    pub b0: f64,
    pub log_k1: f64,
    pub k2: f64,
    pub log_q1: f64,
    pub q2: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        let (a1, a2) = pop_to_daily(annual::POP_A1, annual::POP_A2);
        Self {
            a1,
            a2,
            delta_daily: daily_depreciation(annual::DEPRECIATION),
            alpha: 0.3,
            g_daily: 3.55e-5,
            beta_daily: daily_discount_factor(annual::DISCOUNT_RATE),
            u: 5722.078,
            h: 0.147,
            r: 0.02099,
            b0: 2.041e-11,
            log_k1: 12.561,
            k2: 0.717,
            log_q1: 3.677,
            q2: 0.238,
        }
    }
}

/// Linear per-day scaling of the annual logistic coefficients.
pub fn pop_to_daily(a1_annual: f64, a2_annual: f64) -> (f64, f64) {
    (
        1.0 + (a1_annual - 1.0) / DAYS_PER_YEAR,
        a2_annual / DAYS_PER_YEAR,
    )
}

pub fn daily_depreciation(annual: f64) -> f64 {
    1.0 - (1.0 - annual).powf(1.0 / DAYS_PER_YEAR)
}

pub fn annual_depreciation(daily: f64) -> f64 {
    1.0 - (1.0 - daily).powf(DAYS_PER_YEAR)
}

pub fn daily_discount_factor(annual_rate: f64) -> f64 {
    (1.0 + annual_rate).powf(-1.0 / DAYS_PER_YEAR)
}

pub fn daily_growth(annual: f64) -> f64 {
    (annual.ln_1p() / DAYS_PER_YEAR).exp_m1()
}

pub fn annual_growth(daily: f64) -> f64 {
    (daily.ln_1p() * DAYS_PER_YEAR).exp_m1()
}

fn check(name: &'static str, value: f64, ok: bool, rule: &'static str) -> Result<(), ParamError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ParamError::Invalid { name, value, rule })
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        check("a1", self.a1, self.a1 >= 1.0, "a1 >= 1")?;
        check("a2", self.a2, self.a2 <= 0.0, "a2 <= 0")?;
        check(
            "delta_daily",
            self.delta_daily,
            self.delta_daily > 0.0 && self.delta_daily < 1.0,
            "0 < delta < 1",
        )?;
        check(
            "alpha",
            self.alpha,
            self.alpha > 0.0 && self.alpha < 1.0,
            "0 < alpha < 1",
        )?;
        check("g_daily", self.g_daily, self.g_daily >= 0.0, "g >= 0")?;
        check(
            "beta_daily",
            self.beta_daily,
            self.beta_daily > 0.0 && self.beta_daily < 1.0,
            "0 < beta < 1",
        )?;
        check("u", self.u, self.u >= 0.0, "u >= 0")?;
        check("h", self.h, (0.0..=1.0).contains(&self.h), "0 <= h <= 1")?;
        check("r", self.r, (0.0..=1.0).contains(&self.r), "0 <= r <= 1")?;
        check("b0", self.b0, self.b0 >= 0.0, "b0 >= 0")?;
        check("log_k1", self.log_k1, true, "finite")?;
        check(
            "k2",
            self.k2,
            self.k2 > 0.0 && self.k2 <= 1.0,
            "0 < k2 <= 1",
        )?;
        check("log_q1", self.log_q1, true, "finite")?;
        check("q2", self.q2, self.q2 > 0.0 && self.q2 < 1.0, "0 < q2 < 1")?;
        Ok(())
    }

    pub fn pop(&self) -> PopGrowthParams {
        PopGrowthParams {
            a1: self.a1,
            a2: self.a2,
        }
    }

    pub fn mortality(&self) -> MortalityModel {
        MortalityModel {
            log_k1: self.log_k1,
            k2: self.k2,
        }
    }

    pub fn tradeoff(&self) -> TradeoffModel {
        TradeoffModel {
            log_q1: self.log_q1,
            q2: self.q2,
        }
    }

    pub fn econ(&self) -> EconParams {
        EconParams {
            alpha: self.alpha,
            g_daily: self.g_daily,
            delta_daily: self.delta_daily,
            u: self.u,
            h: self.h,
        }
    }

    /// SHA-256 over the canonical JSON encoding; identifies the parameter set
    /// a trajectory was produced with.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("params serialize");
        hex::encode(Sha256::digest(&json))
    }
}

/// Partial parameter document; unset fields keep the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsOverride {
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    pub delta_daily: Option<f64>,
    pub alpha: Option<f64>,
    pub g_daily: Option<f64>,
    pub beta_daily: Option<f64>,
    pub u: Option<f64>,
    pub h: Option<f64>,
    pub r: Option<f64>,
    pub b0: Option<f64>,
    pub log_k1: Option<f64>,
    pub k2: Option<f64>,
    pub log_q1: Option<f64>,
    pub q2: Option<f64>,
}

impl ParamsOverride {
    pub fn apply(&self, base: ModelParams) -> ModelParams {
        ModelParams {
            a1: self.a1.unwrap_or(base.a1),
            a2: self.a2.unwrap_or(base.a2),
            delta_daily: self.delta_daily.unwrap_or(base.delta_daily),
            alpha: self.alpha.unwrap_or(base.alpha),
            g_daily: self.g_daily.unwrap_or(base.g_daily),
            beta_daily: self.beta_daily.unwrap_or(base.beta_daily),
            u: self.u.unwrap_or(base.u),
            h: self.h.unwrap_or(base.h),
            r: self.r.unwrap_or(base.r),
            b0: self.b0.unwrap_or(base.b0),
            log_k1: self.log_k1.unwrap_or(base.log_k1),
            k2: self.k2.unwrap_or(base.k2),
            log_q1: self.log_q1.unwrap_or(base.log_q1),
            q2: self.q2.unwrap_or(base.q2),
        }
    }
}
