//! Finite-horizon social planner.
//!
//! Chooses consumption `C_0 .. C_{T-1}` to maximise
//! `sum_t beta^t N_t ln(C_t / N_t)` subject to
//! `K_{t+1} = (1 - delta) K_t + Y_t(K_t) - C_t - H_t`, with `K_0` given and
//! `K_T` pinned to a terminal value. Labour, population, TFP, hospital costs
//! and the policy shortfall are exogenous paths.
//!
//! Welfare is strictly concave in the interior capital path `K_1 .. K_{T-1}`
//! and its Hessian is tridiagonal, so the optimum is found by damped Newton
//! steps; each linear solve is one forward elimination followed by a backward
//! substitution from the terminal date. At the optimum every interior date
//! satisfies the Euler condition
//! `c_{t+1} / c_t = beta (1 - delta + MPK_{t+1})` with `c = C / N`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::economy::{marginal_product_capital, production};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("invalid planner inputs: {0}")]
    InvalidInputs(String),
    #[error("no feasible path with positive consumption: {reason} (day {day})")]
    Infeasible { day: usize, reason: String },
    #[error("consumption must be positive, got {value} on day {day}")]
    NonPositiveConsumption { day: usize, value: f64 },
    #[error("Euler residual undefined at day {t} for horizon {horizon}")]
    BoundaryDate { t: usize, horizon: usize },
    #[error("solver stopped after {iterations} iterations with Euler residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerInputs {
    /// Workers `S_t + R_t`.
    pub labor: Vec<f64>,
    /// Living population `N_t`.
    pub pop: Vec<f64>,
    pub tfp: Vec<f64>,
    /// Direct pandemic cost, USD per day.
    pub hcost: Vec<f64>,
    /// Fraction of output foregone to policy.
    pub shortfall: Vec<f64>,
    pub k0: f64,
    pub beta: f64,
    pub alpha: f64,
    pub delta: f64,
    /// Required capital stock after the last decision day.
    pub terminal_capital: f64,
}

impl PlannerInputs {
    pub fn horizon(&self) -> usize {
        self.labor.len()
    }

    pub fn validate(&self) -> Result<(), PlannerError> {
        let t = self.horizon();
        let bad = |msg: String| Err(PlannerError::InvalidInputs(msg));
        if t == 0 {
            return bad("horizon must be at least one day".into());
        }
        for (name, len) in [
            ("pop", self.pop.len()),
            ("tfp", self.tfp.len()),
            ("hcost", self.hcost.len()),
            ("shortfall", self.shortfall.len()),
        ] {
            if len != t {
                return bad(format!("{name} has length {len}, expected {t}"));
            }
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta {} outside (0, 1)", self.beta));
        }
        if !(self.k0 > 0.0 && self.k0.is_finite()) {
            return bad(format!("K0 {} must be positive", self.k0));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad(format!("delta {} outside (0, 1]", self.delta));
        }
        if !(self.terminal_capital >= 0.0 && self.terminal_capital.is_finite()) {
            return bad(format!("terminal capital {}", self.terminal_capital));
        }
        for day in 0..t {
            let ok = self.labor[day] >= 0.0
                && self.pop[day] > 0.0
                && self.tfp[day] > 0.0
                && self.hcost[day] >= 0.0
                && (0.0..1.0).contains(&self.shortfall[day])
                && self.labor[day].is_finite()
                && self.pop[day].is_finite()
                && self.tfp[day].is_finite()
                && self.hcost[day].is_finite();
            if !ok {
                return bad(format!("path values out of range on day {day}"));
            }
        }
        Ok(())
    }

    pub fn output(&self, t: usize, k: f64) -> f64 {
        production(self.tfp[t], k, self.labor[t], self.shortfall[t], self.alpha)
    }

    pub fn mpk(&self, t: usize, k: f64) -> f64 {
        marginal_product_capital(self.tfp[t], k, self.labor[t], self.shortfall[t], self.alpha)
    }

    /// Gross return on one unit of capital held into day `t`.
    pub fn gross_return(&self, t: usize, k: f64) -> f64 {
        1.0 - self.delta + self.mpk(t, k)
    }

    /// Resources to split between consumption and next-day capital.
    pub fn resources(&self, t: usize, k: f64) -> f64 {
        (1.0 - self.delta) * k + self.output(t, k) - self.hcost[t]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Largest interior Euler residual accepted.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerSolution {
    pub consumption: Vec<f64>,
    /// `K_0 .. K_T`.
    pub capital: Vec<f64>,
    pub output: Vec<f64>,
    pub welfare: f64,
    /// Residual for each interior day `0 .. T-2`.
    pub euler_residuals: Vec<f64>,
    pub iterations: usize,
}

impl PlannerSolution {
    pub fn max_euler_residual(&self) -> f64 {
        self.euler_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Discounted, population-weighted log utility of per-capita consumption.
pub fn welfare(consumption: &[f64], pop: &[f64], beta: f64) -> Result<f64, PlannerError> {
    if consumption.len() != pop.len() {
        return Err(PlannerError::InvalidInputs(format!(
            "consumption has {} days, population {}",
            consumption.len(),
            pop.len()
        )));
    }
    let mut discount = 1.0;
    let mut total = 0.0;
    for (day, (&c, &n)) in consumption.iter().zip(pop).enumerate() {
        if !(c > 0.0) {
            return Err(PlannerError::NonPositiveConsumption { day, value: c });
        }
        total += discount * n * (c / n).ln();
        discount *= beta;
    }
    Ok(total)
}

/// `|(c_{t+1} / c_t) / (beta (1 - delta + MPK_{t+1})) - 1|`.
pub fn euler_residual(
    solution: &PlannerSolution,
    inputs: &PlannerInputs,
    t: usize,
) -> Result<f64, PlannerError> {
    let horizon = inputs.horizon();
    if t + 1 >= horizon || solution.consumption.len() != horizon {
        return Err(PlannerError::BoundaryDate { t, horizon });
    }
    Ok(residual_at(
        inputs,
        &solution.consumption,
        &solution.capital,
        t,
    ))
}

fn residual_at(inputs: &PlannerInputs, c: &[f64], k: &[f64], t: usize) -> f64 {
    let growth = (c[t + 1] / inputs.pop[t + 1]) / (c[t] / inputs.pop[t]);
    let ret = inputs.beta * inputs.gross_return(t + 1, k[t + 1]);
    (growth / ret - 1.0).abs()
}

/// Capital stock on the balanced growth path for the given day-`T` TFP and
/// labour: per-capita consumption grows at `(1 + g)^(1 / (1 - alpha))` and
/// the Euler condition holds with that growth.
pub fn balanced_path_capital(
    tfp: f64,
    labor: f64,
    beta: f64,
    alpha: f64,
    delta: f64,
    g_daily: f64,
) -> f64 {
    let growth = (1.0 + g_daily).powf(1.0 / (1.0 - alpha));
    let mpk = growth / beta - 1.0 + delta;
    (alpha * tfp * labor.powf(1.0 - alpha) / mpk).powf(1.0 / (1.0 - alpha))
}

fn consumption_path(inputs: &PlannerInputs, k: &[f64]) -> Vec<f64> {
    (0..inputs.horizon())
        .map(|t| inputs.resources(t, k[t]) - k[t + 1])
        .collect()
}

fn check_feasible(inputs: &PlannerInputs) -> Result<(), PlannerError> {
    let horizon = inputs.horizon();
    let mut k = inputs.k0;
    for t in 0..horizon {
        k = inputs.resources(t, k);
        if !(k > 0.0) && t + 1 < horizon {
            return Err(PlannerError::Infeasible {
                day: t,
                reason: "hospital costs exhaust capital and output even with zero consumption"
                    .into(),
            });
        }
    }
    if !(k > inputs.terminal_capital) {
        return Err(PlannerError::Infeasible {
            day: horizon - 1,
            reason: format!(
                "terminal capital {:e} exceeds the largest attainable stock {:e}",
                inputs.terminal_capital, k
            ),
        });
    }
    Ok(())
}

fn path_is_feasible(k: &[f64], c: &[f64]) -> bool {
    k.iter().all(|&x| x > 0.0 && x.is_finite()) && c.iter().all(|&x| x > 0.0 && x.is_finite())
}

/// Geometric interpolation between `K_0` and `K_T`.
fn interpolated_guess(inputs: &PlannerInputs) -> Vec<f64> {
    let horizon = inputs.horizon();
    let k_end = inputs.terminal_capital.max(inputs.k0 * 1e-6);
    let ratio = (k_end / inputs.k0).ln();
    let mut k: Vec<f64> = (0..=horizon)
        .map(|t| inputs.k0 * (ratio * t as f64 / horizon as f64).exp())
        .collect();
    k[horizon] = inputs.terminal_capital;
    k
}

/// Path consuming a fixed share `eps` of resources every day but the last.
fn proportional_path(inputs: &PlannerInputs, eps: f64) -> Vec<f64> {
    let horizon = inputs.horizon();
    let mut k = Vec::with_capacity(horizon + 1);
    k.push(inputs.k0);
    for t in 0..horizon - 1 {
        let next = (1.0 - eps) * inputs.resources(t, k[t]);
        k.push(next);
    }
    k.push(inputs.terminal_capital);
    k
}

fn initial_guess(inputs: &PlannerInputs) -> Vec<f64> {
    let k = interpolated_guess(inputs);
    if path_is_feasible(&k[..inputs.horizon()], &consumption_path(inputs, &k)) {
        return k;
    }
    // Last-day consumption falls as eps grows; bisect for the share that
    // leaves exactly K_T, then consume half of it.
    let last = |eps: f64| {
        let k = proportional_path(inputs, eps);
        let t = inputs.horizon() - 1;
        inputs.resources(t, k[t]) - inputs.terminal_capital
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    if last(hi) > 0.0 {
        return proportional_path(inputs, 0.5);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if last(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    proportional_path(inputs, 0.5 * lo)
}

/// Solves `A x = rhs` for symmetric tridiagonal `A` with diagonal `diag` and
/// off-diagonal `off` (`off[j]` couples `j` and `j + 1`).
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    let mut denom = diag[0];
    if n > 1 {
        c_prime[0] = off[0] / denom;
    }
    d_prime[0] = rhs[0] / denom;
    for j in 1..n {
        denom = diag[j] - off[j - 1] * c_prime[j - 1];
        if j + 1 < n {
            c_prime[j] = off[j] / denom;
        }
        d_prime[j] = (rhs[j] - off[j - 1] * d_prime[j - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d_prime[n - 1];
    for j in (0..n - 1).rev() {
        x[j] = d_prime[j] - c_prime[j] * x[j + 1];
    }
    x
}

struct Evaluation {
    consumption: Vec<f64>,
    welfare: f64,
    magnitude: f64,
}

fn evaluate(inputs: &PlannerInputs, k: &[f64]) -> Option<Evaluation> {
    let consumption = consumption_path(inputs, k);
    if !path_is_feasible(&k[..inputs.horizon()], &consumption) {
        return None;
    }
    let mut discount = 1.0;
    let mut welfare = 0.0;
    let mut magnitude = 0.0;
    for (t, &c) in consumption.iter().enumerate() {
        let term = discount * inputs.pop[t] * (c / inputs.pop[t]).ln();
        welfare += term;
        magnitude += term.abs();
        discount *= inputs.beta;
    }
    Some(Evaluation {
        consumption,
        welfare,
        magnitude,
    })
}

fn max_residual(inputs: &PlannerInputs, c: &[f64], k: &[f64]) -> f64 {
    (0..inputs.horizon().saturating_sub(1))
        .map(|t| residual_at(inputs, c, k, t))
        .fold(0.0, f64::max)
}

pub fn solve(
    inputs: &PlannerInputs,
    config: &SolverConfig,
) -> Result<PlannerSolution, PlannerError> {
    inputs.validate()?;
    check_feasible(inputs)?;
    let horizon = inputs.horizon();

    let mut k = initial_guess(inputs);
    let mut eval = evaluate(inputs, &k).ok_or_else(|| PlannerError::Infeasible {
        day: 0,
        reason: "could not construct a feasible starting path".into(),
    })?;
    let mut iterations = 0;

    if horizon > 1 {
        let unknowns = horizon - 1;
        let mut weights = Vec::with_capacity(horizon);
        let mut discount = 1.0;
        for t in 0..horizon {
            weights.push(discount * inputs.pop[t]);
            discount *= inputs.beta;
        }
        let mut grad = vec![0.0; unknowns];
        let mut diag = vec![0.0; unknowns];
        let mut off = vec![0.0; unknowns.saturating_sub(1)];

        loop {
            let residual = max_residual(inputs, &eval.consumption, &k);
            if residual < 1e-13 || iterations >= config.max_iterations {
                break;
            }
            iterations += 1;
            let c = &eval.consumption;
            // Unknown j holds K_{j+1}.
            for j in 0..unknowns {
                let t = j + 1;
                let ret = inputs.gross_return(t, k[t]);
                let dret = (inputs.alpha - 1.0) * inputs.mpk(t, k[t]) / k[t];
                let prev = weights[t - 1] / c[t - 1];
                let cur = weights[t] / c[t];
                grad[j] = cur * ret - prev;
                // negated Hessian, positive definite
                diag[j] = prev / c[t - 1] + cur * ret * ret / c[t] - cur * dret;
                if j + 1 < unknowns {
                    off[j] = -cur * ret / c[t];
                }
            }
            let step = solve_tridiagonal(&diag, &off, &grad);
            let slope: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();
            let roundoff = 1e-12 * eval.magnitude;

            let mut scale = 1.0;
            let mut accepted = None;
            for _ in 0..80 {
                let mut trial = k.clone();
                for j in 0..unknowns {
                    trial[j + 1] += scale * step[j];
                }
                if let Some(next) = evaluate(inputs, &trial) {
                    if next.welfare >= eval.welfare + 1e-4 * scale * slope - roundoff {
                        accepted = Some((trial, next));
                        break;
                    }
                }
                scale *= 0.5;
            }
            match accepted {
                Some((trial, next)) => {
                    let moved = trial
                        .iter()
                        .zip(&k)
                        .any(|(a, b)| (a - b).abs() > 1e-15 * b.abs());
                    k = trial;
                    eval = next;
                    if !moved {
                        break;
                    }
                }
                None => break,
            }
        }
    }

    let residuals: Vec<f64> = (0..horizon.saturating_sub(1))
        .map(|t| residual_at(inputs, &eval.consumption, &k, t))
        .collect();
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if worst > config.tolerance {
        return Err(PlannerError::NotConverged {
            iterations,
            residual: worst,
        });
    }
    let output = (0..horizon).map(|t| inputs.output(t, k[t])).collect();
    Ok(PlannerSolution {
        consumption: eval.consumption,
        capital: k,
        output,
        welfare: eval.welfare,
        euler_residuals: residuals,
        iterations,
    })
}

/// Raise consumption on day `t` by `fraction` of itself and take the
/// difference out of day `t + 1` consumption so that `K_{t+2}` is unchanged.
/// Returns the perturbed consumption and capital paths, or `None` when the
/// perturbation is infeasible.
pub fn rebalanced_perturbation(
    solution: &PlannerSolution,
    inputs: &PlannerInputs,
    t: usize,
    fraction: f64,
) -> Option<(Vec<f64>, Vec<f64>)> {
    if t + 1 >= inputs.horizon() {
        return None;
    }
    let mut c = solution.consumption.clone();
    let mut k = solution.capital.clone();
    let shift = c[t] * fraction;
    c[t] += shift;
    k[t + 1] -= shift;
    if !(k[t + 1] > 0.0) {
        return None;
    }
    c[t + 1] = inputs.resources(t + 1, k[t + 1]) - k[t + 2];
    (c[t] > 0.0 && c[t + 1] > 0.0).then_some((c, k))
}
