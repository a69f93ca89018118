//! Crate-wide error type.

use crate::fluids::Phase;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{phase} pressure {p:.6e} Pa outside evaluation window [{lo:.6e}, {hi:.6e}] Pa")]
    PressureOutOfWindow { phase: Phase, p: f64, lo: f64, hi: f64 },

    #[error("saturation coordinate {name} = {value} outside [0, 1]")]
    SaturationOutOfRange { name: &'static str, value: f64 },

    #[error("(s1, s3) = ({s1}, {s3}) lies outside the ternary diagram")]
    OutsideTernary { s1: f64, s3: f64 },

    #[error("degenerate total mobility at (s1, s3) = ({s1}, {s3}), p2 = {p2:.6e} Pa: all phases immobile")]
    DegenerateMobility { s1: f64, s3: f64, p2: f64 },

    #[error("ODE step size underflow at t = {t:.6}: {detail}")]
    OdeStepFailure { t: f64, detail: String },

    #[error("total-differential residual {spread:.3e} Pa exceeds tolerance {tol:.3e} Pa: data are path-dependent")]
    TdViolation { spread: f64, tol: f64 },

    #[error("two-phase data violate the TD-compatibility condition: residual {residual:.3e} Pa exceeds {tol:.3e} Pa")]
    IncompatibleData { residual: f64, tol: f64 },

    #[error("{what} did not converge after {iters} iterations (last residual {residual:.3e})")]
    NonConvergence { what: String, iters: usize, residual: f64 },

    #[error("stability condition violated: {0}")]
    Unstable(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("finite-element solve failed: {0}")]
    Fem(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
