use thiserror::Error;

/// Errors produced anywhere in the simulation and estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("propagator did not converge: error estimate {estimate:.3e} above tolerance {tolerance:.3e} after {depth} refinements")]
    ConvergenceFailure {
        estimate: f64,
        tolerance: f64,
        depth: usize,
    },

    #[error("maximum slope {0:.3e} is degenerate")]
    DegenerateSlope(f64),

    #[error("quadrature failed near omega = {omega:.6e} rad/s: error estimate {estimate:.3e} (target {target:.3e})")]
    QuadratureFailure {
        omega: f64,
        estimate: f64,
        target: f64,
    },

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("noise calibration failed: {reason} (best relative residual {best_residual:.3e})")]
    CalibrationFailure { reason: String, best_residual: f64 },

    #[error("field estimate unresolvable: {0} candidates consistent with the measured slope")]
    Unresolvable(usize),

    #[error("measured signal {0} is outside [-1, 1] beyond the noise allowance")]
    OutOfRange(f64),

    #[error("adiabaticity {a:.4} exceeds limit {limit} at scale factor k = {k}")]
    AdiabaticityViolation { k: f64, a: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
