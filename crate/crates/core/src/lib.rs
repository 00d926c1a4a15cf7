//! Pandemic dynamics inside a neoclassical growth economy.
//!
//! The epidemic runs first as a discrete SIR system with deaths and logistic
//! births; a social planner then chooses consumption against the resulting
//! labour, hospital-cost and policy paths. Calibration routines rebuild every
//! constant from the bundled datasets, and the scenario engine runs the
//! baselines, policy sweeps and a historical backtest.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
pub mod config;
pub mod economy;
pub mod epidemic;
pub mod io;
pub mod ols;
pub mod params;
pub mod planner;
pub mod report;
pub mod scenario;

pub use params::ModelParams;
pub use scenario::{run_scenario, Scenario, Trajectory};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] io::IoError),
    #[error(transparent)]
    Calibration(#[from] calibration::CalibError),
    #[error(transparent)]
    Scenario(#[from] scenario::ScenarioError),
    #[error(transparent)]
    Report(#[from] report::ReportError),
    #[error(transparent)]
    Params(#[from] params::ParamError),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
