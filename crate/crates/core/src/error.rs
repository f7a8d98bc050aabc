use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e} ({context})")]
    Quadrature {
        achieved: f64,
        requested: f64,
        context: String,
    },

    #[error("evaluation routes disagree: {route_a:.15e} vs {route_b:.15e} (relative {relative:.3e})")]
    Consistency {
        route_a: f64,
        route_b: f64,
        relative: f64,
    },

    #[error("non-finite values produced at t = {t}")]
    Overflow { t: f64 },

    #[error("hypothesis not certified: {0}")]
    Hypothesis(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
