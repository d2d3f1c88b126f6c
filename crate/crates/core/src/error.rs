use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge: estimated error {estimate:e} > tolerance {tol:e}")]
    Quadrature { estimate: f64, tol: f64 },

    /// The ODE integrator could not take a step at the required accuracy.
    #[error("integrator step underflow at t = {time:e} s (step {step:e} s)")]
    StepUnderflow { time: f64, step: f64 },

    /// No velocity inside the requested bounds satisfies the gate condition.
    #[error("no calibration in [{v_min}, {v_max}] m/s; nearest candidates: {candidates:?}")]
    Calibration { v_min: f64, v_max: f64, candidates: Vec<f64> },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
