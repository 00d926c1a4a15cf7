//! SIR dynamics with deaths and logistic population growth.
//!
//! Compartments are real-valued. One call to [`epi_step`] advances the state
//! by one calendar day:
//!
//! ```text
//! N' = a1 N + a2 N^2 - m I
//! S' = S + (a1 - 1) N + a2 N^2 - F        F = min(b S I, S)
//! I' = I + F - r I - m I
//! R' = R + r I
//! D' = D + m I
//! ```
//!
//! Births enter `S`; deaths leave `N`. `N - (S + I + R)` is therefore a
//! conserved quantity of the map.

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EpiError {
    #[error("compartment {name} = {value} is negative or not finite")]
    InvalidState { name: &'static str, value: f64 },
    #[error("invalid rates: {0}")]
    InvalidRates(String),
    #[error("invalid population growth parameters: {0}")]
    InvalidPopGrowth(String),
    #[error("GDP shortfall must be a nonnegative percentage, got {0}")]
    NegativeShortfall(f64),
    #[error("infection-rate reduction must lie in [0, 100], got {0}")]
    ReductionOutOfRange(f64),
    #[error("date overflow after {0}")]
    DateOverflow(NaiveDate),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpiState {
    pub date: NaiveDate,
    pub n: f64,
    pub s: f64,
    pub i: f64,
    pub r: f64,
    pub d: f64,
}

impl EpiState {
    /// Initial state with every living person not infected or recovered
    /// counted as susceptible.
    pub fn seeded(date: NaiveDate, n: f64, i: f64, r: f64, d: f64) -> Self {
        Self {
            date,
            n,
            s: n - i - r,
            i,
            r,
            d,
        }
    }

    pub fn validate(&self) -> Result<(), EpiError> {
        for (name, value) in [
            ("N", self.n),
            ("S", self.s),
            ("I", self.i),
            ("R", self.r),
            ("D", self.d),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(EpiError::InvalidState { name, value });
            }
        }
        Ok(())
    }

    /// Persons in the labour force.
    pub fn labor(&self) -> f64 {
        self.s + self.r
    }

    /// `N - (S + I + R)`, constant along any trajectory.
    pub fn conservation_gap(&self) -> f64 {
        self.n - (self.s + self.i + self.r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpiRates {
    /// New infections per susceptible-infected pair per day.
    pub b: f64,
    /// Fraction of active infections recovering per day.
    pub r: f64,
    /// Fraction of active infections dying per day.
    pub m: f64,
}

impl EpiRates {
    pub fn validate(&self) -> Result<(), EpiError> {
        let ok = self.b.is_finite()
            && self.b >= 0.0
            && (0.0..=1.0).contains(&self.r)
            && (0.0..=1.0).contains(&self.m)
            && self.r + self.m <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(EpiError::InvalidRates(format!(
                "b={} r={} m={} (need b >= 0, r, m in [0,1], r + m <= 1)",
                self.b, self.r, self.m
            )))
        }
    }
}

/// Daily logistic growth `N' = a1 N + a2 N^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopGrowthParams {
    pub a1: f64,
    pub a2: f64,
}

impl PopGrowthParams {
    pub const NONE: Self = Self { a1: 1.0, a2: 0.0 };

    pub fn validate(&self) -> Result<(), EpiError> {
        if self.a1.is_finite() && self.a2.is_finite() && self.a1 >= 1.0 && self.a2 <= 0.0 {
            Ok(())
        } else {
            Err(EpiError::InvalidPopGrowth(format!(
                "a1={} a2={} (need a1 >= 1, a2 <= 0)",
                self.a1, self.a2
            )))
        }
    }

    /// Net births over one day for a population of `n`.
    pub fn births(&self, n: f64) -> f64 {
        (self.a1 - 1.0) * n + self.a2 * n * n
    }

    /// Population size where births vanish.
    pub fn carrying_capacity(&self) -> Option<f64> {
        (self.a2 < 0.0).then(|| (self.a1 - 1.0) / -self.a2)
    }
}

/// Mortality as a power of the infection rate, `m = exp(log_k1) * b^k2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MortalityModel {
    pub log_k1: f64,
    pub k2: f64,
}

impl MortalityModel {
    /// Zero when `b` is zero; the log model is undefined there.
    pub fn rate(&self, b: f64) -> f64 {
        if b > 0.0 {
            (self.log_k1 + self.k2 * b.ln()).exp()
        } else {
            0.0
        }
    }
}

/// Percentage cut in the infection rate bought by a percentage GDP
/// shortfall, `exp(log_q1) * x^q2`, capped at 100.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffModel {
    pub log_q1: f64,
    pub q2: f64,
}

impl TradeoffModel {
    pub fn reduction_pct(&self, gdp_shortfall_pct: f64) -> Result<f64, EpiError> {
        policy_to_infection_reduction(gdp_shortfall_pct, self)
    }
}

pub fn policy_to_infection_reduction(
    gdp_shortfall_pct: f64,
    t: &TradeoffModel,
) -> Result<f64, EpiError> {
    if !(gdp_shortfall_pct >= 0.0) {
        return Err(EpiError::NegativeShortfall(gdp_shortfall_pct));
    }
    if gdp_shortfall_pct == 0.0 {
        return Ok(0.0);
    }
    Ok((t.log_q1.exp() * gdp_shortfall_pct.powf(t.q2)).min(100.0))
}

/// Rates in force when the base infection rate `b0` is cut by
/// `reduction_pct` percent.
pub fn effective_rates(
    b0: f64,
    reduction_pct: f64,
    mm: &MortalityModel,
    r: f64,
) -> Result<EpiRates, EpiError> {
    if !(0.0..=100.0).contains(&reduction_pct) {
        return Err(EpiError::ReductionOutOfRange(reduction_pct));
    }
    let b = b0 * (1.0 - reduction_pct / 100.0);
    Ok(EpiRates {
        b,
        r,
        m: mm.rate(b),
    })
}

/// Advance the epidemic one day.
pub fn epi_step(
    state: &EpiState,
    rates: &EpiRates,
    pop: &PopGrowthParams,
) -> Result<EpiState, EpiError> {
    state.validate()?;
    rates.validate()?;
    pop.validate()?;
    let date = state
        .date
        .checked_add_days(Days::new(1))
        .ok_or(EpiError::DateOverflow(state.date))?;
    let EpiState { n, s, i, r, d, .. } = *state;
    let births = pop.births(n);
    let new_infections = (rates.b * s * i).min(s);
    let recoveries = rates.r * i;
    let deaths = rates.m * i;
    Ok(EpiState {
        date,
        n: n + births - deaths,
        s: s + births - new_infections,
        i: i + new_infections - recoveries - deaths,
        r: r + recoveries,
        d: d + deaths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, 22).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn hand_evaluated_step() {
        let s0 = EpiState {
            date: day(),
            n: 1010.0,
            s: 1000.0,
            i: 10.0,
            r: 0.0,
            d: 0.0,
        };
        let rates = EpiRates {
            b: 1e-4,
            r: 0.02,
            m: 0.01,
        };
        let s1 = epi_step(&s0, &rates, &PopGrowthParams::NONE).unwrap();
        assert!(close(s1.s, 999.0, 1e-14));
        assert!(close(s1.i, 10.7, 1e-14));
        assert!(close(s1.r, 0.2, 1e-14));
        assert!(close(s1.d, 0.1, 1e-14));
        assert!(close(s1.n, 1009.9, 1e-14));
        assert_eq!(s1.date, NaiveDate::from_ymd_opt(2020, 1, 23).unwrap());
    }

    #[test]
    fn no_infections_no_growth_is_fixed_point() {
        let s0 = EpiState {
            date: day(),
            n: 500.0,
            s: 300.0,
            i: 0.0,
            r: 150.0,
            d: 7.0,
        };
        let rates = EpiRates {
            b: 0.3,
            r: 0.1,
            m: 0.05,
        };
        let s1 = epi_step(&s0, &rates, &PopGrowthParams::NONE).unwrap();
        assert_eq!(
            (s1.n, s1.s, s1.i, s1.r, s1.d),
            (500.0, 300.0, 0.0, 150.0, 7.0)
        );
    }

    #[test]
    fn zero_transmission_decays_geometrically() {
        let rates = EpiRates {
            b: 0.0,
            r: 0.02099,
            m: 0.006,
        };
        let mut s = EpiState::seeded(day(), 1e6, 100.0, 0.0, 0.0);
        s = epi_step(&s, &rates, &PopGrowthParams::NONE).unwrap();
        assert!(close(s.i, 97.301, 1e-12));
        for t in 2..=400 {
            s = epi_step(&s, &rates, &PopGrowthParams::NONE).unwrap();
            let expected = 100.0 * (1.0 - 0.02099 - 0.006_f64).powi(t);
            assert!(close(s.i, expected, 1e-12), "t={t}: {} vs {expected}", s.i);
        }
    }

    #[test]
    fn new_infections_are_clamped_at_susceptibles() {
        let s0 = EpiState::seeded(day(), 100.0, 50.0, 0.0, 0.0);
        let rates = EpiRates {
            b: 1.0,
            r: 0.1,
            m: 0.1,
        };
        let s1 = epi_step(&s0, &rates, &PopGrowthParams::NONE).unwrap();
        assert_eq!(s1.s, 0.0);
        assert!(close(s1.i, 50.0 + 50.0 - 10.0, 1e-14));
    }

    #[test]
    fn invalid_inputs_rejected() {
        let mut s0 = EpiState::seeded(day(), 100.0, 1.0, 0.0, 0.0);
        let good = EpiRates {
            b: 0.01,
            r: 0.1,
            m: 0.0,
        };
        let bad = EpiRates {
            b: 0.01,
            r: 0.7,
            m: 0.5,
        };
        assert!(matches!(
            epi_step(&s0, &bad, &PopGrowthParams::NONE),
            Err(EpiError::InvalidRates(_))
        ));
        let shrinking = PopGrowthParams { a1: 0.9, a2: 0.0 };
        assert!(epi_step(&s0, &good, &shrinking).is_err());
        s0.s = -1.0;
        assert_eq!(
            epi_step(&s0, &good, &PopGrowthParams::NONE),
            Err(EpiError::InvalidState {
                name: "S",
                value: -1.0
            })
        );
    }

    #[test]
    fn tradeoff_matches_published_claims() {
        let t = TradeoffModel {
            log_q1: 3.677,
            q2: 0.238,
        };
        let five = t.reduction_pct(5.0).unwrap();
        let ten = t.reduction_pct(10.0).unwrap();
        assert!((five - 57.977).abs() < 1e-2, "{five}");
        assert!((ten - 68.376).abs() < 1e-2, "{ten}");
        assert_eq!(t.reduction_pct(0.0).unwrap(), 0.0);
        assert_eq!(t.reduction_pct(1e9).unwrap(), 100.0);
        assert!(matches!(
            t.reduction_pct(-1.0),
            Err(EpiError::NegativeShortfall(_))
        ));
    }

    #[test]
    fn effective_rates_examples() {
        let mm = MortalityModel {
            log_k1: 12.561,
            k2: 0.717,
        };
        let base = effective_rates(2.041e-11, 0.0, &mm, 0.02099).unwrap();
        assert_eq!(base.b, 2.041e-11);
        assert!((base.m - 6.1706e-3).abs() < 1e-6, "{}", base.m);
        let none = effective_rates(2.041e-11, 100.0, &mm, 0.02099).unwrap();
        assert_eq!((none.b, none.m), (0.0, 0.0));
        let cut = effective_rates(2.041e-11, 58.0, &mm, 0.02099).unwrap();
        assert!((cut.b - 8.5722e-12).abs() < 1e-15);
        assert!((cut.m - 3.31e-3).abs() < 2e-5, "{}", cut.m);
        assert_eq!(cut.r, 0.02099);
        assert!(effective_rates(2.041e-11, 101.0, &mm, 0.02).is_err());
    }

    #[test]
    fn carrying_capacity_of_published_model() {
        let (a1, a2) = crate::params::pop_to_daily(1.028, -2.282e-12);
        let cap = PopGrowthParams { a1, a2 }.carrying_capacity().unwrap();
        assert!((cap - 0.028 / 2.282e-12).abs() / cap < 1e-9);
        assert_eq!(PopGrowthParams::NONE.carrying_capacity(), None);
    }

    proptest! {
        #[test]
        fn conservation_and_monotonicity(
            n in 1e3f64..1e10,
            i_frac in 0.0f64..0.5,
            r_frac in 0.0f64..0.4,
            bn in 0.0f64..0.6,
            r in 0.0f64..0.3,
            m in 0.0f64..0.05,
            growth in 0.0f64..1e-4,
            steps in 1usize..400,
        ) {
            let i = n * i_frac;
            let rr = n * r_frac;
            let mut s = EpiState::seeded(day(), n, i, rr, 0.0);
            let rates = EpiRates { b: bn / n, r, m };
            let pop = PopGrowthParams { a1: 1.0 + growth, a2: -growth / (5.0 * n) };
            let gap0 = s.conservation_gap();
            for _ in 0..steps {
                let next = epi_step(&s, &rates, &pop).unwrap();
                prop_assert!(next.d >= s.d);
                prop_assert!(next.r >= s.r);
                prop_assert!(next.s >= 0.0 && next.i >= 0.0 && next.n >= 0.0);
                let gap = next.conservation_gap();
                prop_assert!((gap - gap0).abs() <= 1e-6 * next.n.max(1.0));
                s = next;
            }
        }

        #[test]
        fn mortality_strictly_increasing(b in 1e-14f64..1e-6, f in 1.0001f64..10.0) {
            let mm = MortalityModel { log_k1: 12.561, k2: 0.717 };
            prop_assert!(mm.rate(b * f) > mm.rate(b));
        }

        #[test]
        fn tradeoff_increasing_and_concave(x in 0.01f64..50.0, h in 0.01f64..1.0) {
            let t = TradeoffModel { log_q1: 3.677, q2: 0.238 };
            let f = |v: f64| t.reduction_pct(v).unwrap();
            prop_assume!(f(x + 2.0 * h) < 100.0);
            prop_assert!(f(x + h) > f(x));
            prop_assert!(f(x + 2.0 * h) - 2.0 * f(x + h) + f(x) < 0.0);
            prop_assert!(f(x) <= 100.0);
        }
    }
}
