//! Production, technology growth, direct pandemic costs and capital
//! accumulation. All flows are per day; capital is a stock in USD.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EconError {
    #[error(
        "infeasible allocation: consumption {consumption} + hospital cost {hospital} exceeds available resources {available}"
    )]
    Infeasible {
        consumption: f64,
        hospital: f64,
        available: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconState {
    /// Total factor productivity.
    pub a: f64,
    /// Physical capital, USD.
    pub k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconParams {
    pub alpha: f64,
    pub g_daily: f64,
    pub delta_daily: f64,
    pub u: f64,
    pub h: f64,
}

/// Cobb-Douglas output `(1 - p) A K^alpha L^(1 - alpha)`.
pub fn production(a: f64, k: f64, labor: f64, p: f64, alpha: f64) -> f64 {
    if labor <= 0.0 || k <= 0.0 {
        return 0.0;
    }
    (1.0 - p) * a * k.powf(alpha) * labor.powf(1.0 - alpha)
}

/// Marginal product of capital, `alpha Y / K`.
pub fn marginal_product_capital(a: f64, k: f64, labor: f64, p: f64, alpha: f64) -> f64 {
    if labor <= 0.0 {
        return 0.0;
    }
    alpha * (1.0 - p) * a * k.powf(alpha - 1.0) * labor.powf(1.0 - alpha)
}

pub fn tfp_step(a: f64, g_daily: f64) -> f64 {
    a * (1.0 + g_daily)
}

/// Hospital admissions cost `u h b S I`.
pub fn hospital_cost(u: f64, h: f64, b: f64, s: f64, i: f64) -> f64 {
    u * h * b * s * i
}

/// `K' = (1 - delta) K + Y - C - H`.
pub fn capital_step(k: f64, delta_daily: f64, y: f64, c: f64, h: f64) -> Result<f64, EconError> {
    let available = (1.0 - delta_daily) * k + y;
    if c + h > available {
        return Err(EconError::Infeasible {
            consumption: c,
            hospital: h,
            available,
        });
    }
    Ok(available - c - h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn production_examples() {
        assert_eq!(production(1.0, 1.0, 1.0, 0.0, 0.3), 1.0);
        assert!((production(1.0, 1.0, 1.0, 0.1, 0.3) - 0.9).abs() < 1e-15);
        assert!((production(2.0, 16.0, 1.0, 0.0, 0.25) - 4.0).abs() < 1e-14);
        assert_eq!(production(2.0, 16.0, 0.0, 0.0, 0.25), 0.0);
    }

    #[test]
    fn tfp_examples() {
        assert_eq!(tfp_step(1.0, 0.0), 1.0);
        assert!((tfp_step(1.880, 3.55e-5) - 1.880_066_74).abs() < 1e-10);
        let mut a = 1.7;
        for _ in 0..365 {
            a = tfp_step(a, 3.55e-5);
        }
        assert!((a - 1.7 * (1.0 + 3.55e-5_f64).powi(365)).abs() < 1e-12);
    }

    #[test]
    fn hospital_cost_examples() {
        assert_eq!(hospital_cost(5722.0, 0.147, 0.0, 7e9, 1e6), 0.0);
        assert!((hospital_cost(5722.0, 0.147, 1e-4, 1000.0, 10.0) - 841.134).abs() < 1e-9);
        let big = hospital_cost(5722.078, 0.147, 2.041e-11, 7e9, 1e6);
        assert!((big - 1.2017e8).abs() / 1.2017e8 < 1e-4, "{big}");
    }

    #[test]
    fn capital_step_examples() {
        assert_eq!(capital_step(100.0, 0.0, 10.0, 10.0, 0.0).unwrap(), 100.0);
        assert!((capital_step(100.0, 0.01, 0.0, 0.0, 0.0).unwrap() - 99.0).abs() < 1e-12);
        assert!((capital_step(100.0, 0.02, 20.0, 5.0, 3.0).unwrap() - 110.0).abs() < 1e-12);
        assert!(matches!(
            capital_step(100.0, 0.02, 20.0, 200.0, 3.0),
            Err(EconError::Infeasible { .. })
        ));
    }

    #[test]
    fn marginal_product_matches_finite_difference() {
        let (a, k, l, p, alpha) = (1.9, 2.8e14, 7.7e9, 0.1, 0.3);
        let h = k * 1e-6;
        let fd =
            (production(a, k + h, l, p, alpha) - production(a, k - h, l, p, alpha)) / (2.0 * h);
        let mpk = marginal_product_capital(a, k, l, p, alpha);
        assert!((fd - mpk).abs() / mpk < 1e-8);
    }

    proptest! {
        #[test]
        fn production_constant_returns(
            a in 0.1f64..5.0, k in 1.0f64..1e15, l in 1.0f64..1e10,
            p in 0.0f64..0.9, lambda in 0.01f64..100.0,
        ) {
            let y = production(a, k, l, p, 0.3);
            let scaled = production(a, lambda * k, lambda * l, p, 0.3);
            prop_assert!((scaled - lambda * y).abs() <= 1e-12 * scaled.abs());
        }

        #[test]
        fn production_monotone(
            a in 0.1f64..5.0, k in 1.0f64..1e15, l in 1.0f64..1e10, p in 0.0f64..0.8,
        ) {
            let y = production(a, k, l, p, 0.3);
            prop_assert!(production(a * 1.01, k, l, p, 0.3) > y);
            prop_assert!(production(a, k * 1.01, l, p, 0.3) > y);
            prop_assert!(production(a, k, l * 1.01, p, 0.3) > y);
            prop_assert!(production(a, k, l, p + 0.01, 0.3) < y);
        }

        #[test]
        fn capital_step_is_exact(
            k in 0.0f64..1e15, d in 0.0f64..0.1, y in 0.0f64..1e12, cf in 0.0f64..0.5, hf in 0.0f64..0.4,
        ) {
            let avail = (1.0 - d) * k + y;
            let (c, h) = (cf * avail, hf * avail);
            let next = capital_step(k, d, y, c, h).unwrap();
            prop_assert!((next + c + h - y - (1.0 - d) * k).abs() <= 1e-15 * avail.max(1.0) * 4.0);
        }

        #[test]
        fn hospital_cost_multilinear(b in 0.0f64..1e-9, s in 0.0f64..1e10, i in 0.0f64..1e9) {
            let base = hospital_cost(5722.078, 0.147, b, s, i);
            for doubled in [
                hospital_cost(5722.078, 0.147, 2.0 * b, s, i),
                hospital_cost(5722.078, 0.147, b, 2.0 * s, i),
                hospital_cost(5722.078, 0.147, b, s, 2.0 * i),
            ] {
                prop_assert!((doubled - 2.0 * base).abs() <= 1e-14 * doubled.abs().max(1e-300));
            }
        }
    }
}
