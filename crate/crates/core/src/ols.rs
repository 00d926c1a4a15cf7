//! Ordinary least squares via Householder QR.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OlsError {
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("regressor {column} has {got} rows, response has {expected}")]
    LengthMismatch {
        column: usize,
        got: usize,
        expected: usize,
    },
    #[error("design matrix is rank deficient (column {column} is collinear with earlier columns)")]
    RankDeficient { column: usize },
    #[error("non-finite value in regression data")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    /// Intercept first when one was requested, then one per regressor.
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Centered with an intercept, uncentered without.
    pub r_squared: f64,
    pub n_obs: usize,
}

/// Regress `response` on the given regressor columns.
pub fn ols(regressors: &[&[f64]], response: &[f64], intercept: bool) -> Result<OlsFit, OlsError> {
    let n = response.len();
    let k = regressors.len() + usize::from(intercept);
    if k == 0 || n < k {
        return Err(OlsError::TooFewObservations {
            needed: k.max(1),
            got: n,
        });
    }
    for (column, col) in regressors.iter().enumerate() {
        if col.len() != n {
            return Err(OlsError::LengthMismatch {
                column,
                got: col.len(),
                expected: n,
            });
        }
    }
    if response
        .iter()
        .chain(regressors.iter().flat_map(|c| c.iter()))
        .any(|v| !v.is_finite())
    {
        return Err(OlsError::NonFinite);
    }

    let x = DMatrix::from_fn(n, k, |row, col| {
        if intercept {
            if col == 0 {
                1.0
            } else {
                regressors[col - 1][row]
            }
        } else {
            regressors[col][row]
        }
    });
    let y = DVector::from_column_slice(response);

    // Scale columns so the rank test is independent of units.
    let norms: Vec<f64> = (0..k).map(|j| x.column(j).norm()).collect();
    if let Some(column) = norms.iter().position(|&v| v == 0.0) {
        return Err(OlsError::RankDeficient { column });
    }
    let mut scaled = x.clone();
    for (j, norm) in norms.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / norm);
    }
    let qr = scaled.qr();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)].abs() < 1e-10 {
            return Err(OlsError::RankDeficient { column: j });
        }
    }
    let qty = qr.q().transpose() * &y;
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or(OlsError::RankDeficient { column: k - 1 })?;
    let scaled_beta = &r_inv * qty;
    let coefficients: Vec<f64> = (0..k).map(|j| scaled_beta[j] / norms[j]).collect();

    let fitted = &x * DVector::from_column_slice(&coefficients);
    let ssr: f64 = (&y - fitted).iter().map(|e| e * e).sum();
    let sst: f64 = if intercept {
        let mean = y.mean();
        y.iter().map(|v| (v - mean) * (v - mean)).sum()
    } else {
        y.iter().map(|v| v * v).sum()
    };
    let r_squared = if sst > 0.0 {
        (1.0 - ssr / sst).clamp(0.0, 1.0)
    } else {
        1.0
    };

    let dof = n - k;
    let std_errors = if dof == 0 {
        vec![f64::INFINITY; k]
    } else {
        let sigma2 = ssr / dof as f64;
        // (X'X)^-1 = D^-1 R^-1 R^-T D^-1 with D the column norms
        (0..k)
            .map(|j| {
                let row = r_inv.row(j);
                (sigma2 * row.dot(&row)).sqrt() / norms[j]
            })
            .collect()
    };

    Ok(OlsFit {
        coefficients,
        std_errors,
        r_squared,
        n_obs: n,
    })
}
