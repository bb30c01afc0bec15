use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Error, Debug)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow evaluating {what}: the positive axis of E_alpha is not supported beyond the series regime")]
    MlOverflow { what: String },

    #[error("series truncated without convergence ({detail}); partial value {partial}")]
    Truncation { partial: f64, detail: String },

    #[error("quadrature failed to converge ({detail}); partial estimate {partial}")]
    Quadrature { partial: f64, detail: String },

    #[error("cross-check failure: {detail} (routes gave {a} and {b})")]
    CrossCheck { a: f64, b: f64, detail: String },

    #[error("transform is not evaluable on the Talbot contour (real-axis image only)")]
    NotComplexEvaluable,

    #[error("condition violation: {0}")]
    Condition(String),

    #[error("inversion quality: {0}")]
    InversionQuality(String),

    #[error("density reconstruction: {0}")]
    DensityReconstruction(String),

    #[error("operator assembly: {0}")]
    Assembly(String),

    #[error("eigensystem: {0}")]
    Eigen(String),

    #[error("boundary mass too large: {0}")]
    BoundaryMass(String),

    #[error("config error ({key}): {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
