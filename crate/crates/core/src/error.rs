use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("body `{body}`: invalid {field} = {value}")]
    InvalidConstant {
        body: String,
        field: &'static str,
        value: f64,
    },

    #[error("body `{0}` listed more than once")]
    DuplicateBody(String),

    #[error("unknown body `{0}`")]
    UnknownBody(String),

    #[error("body `{body}` does not orbit `{center}`")]
    NotOrbiting { body: String, center: String },

    #[error("invalid system model: {0}")]
    InvalidModel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Raised when the particle comes closer than the singularity floor to a body.
    #[error("singularity: distance {distance:e} to body {body} below floor")]
    Singularity { body: usize, distance: f64 },

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("maximum number of steps ({max_steps}) exceeded at t = {t}")]
    MaxSteps { max_steps: usize, t: f64 },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("degenerate projection onto the orbital plane of M2")]
    DegenerateProjection,

    #[error("Kepler equation did not converge (M = {mean_anomaly}, e = {eccentricity})")]
    KeplerDivergence {
        mean_anomaly: f64,
        eccentricity: f64,
    },

    #[error("could not bracket collinear Lagrange point {0}")]
    LagrangeBracket(u8),

    #[error("Newton corrector did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonMaxIterations { iterations: usize, residual: f64 },

    #[error("singular corrector matrix")]
    SingularCorrector,

    #[error("continuation step underflow at parameter {param}")]
    StepUnderflow { param: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad configuration or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singularity { .. }
                | Error::StepSizeUnderflow { .. }
                | Error::MaxSteps { .. }
                | Error::NonFinite { .. }
                | Error::KeplerDivergence { .. }
                | Error::LagrangeBracket(_)
                | Error::NewtonMaxIterations { .. }
                | Error::SingularCorrector
                | Error::StepUnderflow { .. }
                | Error::DegenerateProjection
        )
    }
}
