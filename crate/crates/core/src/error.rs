use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample is empty")]
    EmptySample,

    #[error("observation {index} is not strictly positive: {value}")]
    NonPositive { index: usize, value: f64 },

    #[error("observation {index} is not finite")]
    NonFinite { index: usize },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("result overflows f64 range: {0}")]
    Overflow(String),

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("dominant eigenvalue {0:e} is not positive")]
    NotPositive(f64),

    #[error("dominant eigenvalue is not unique in modulus (indefinite spectrum)")]
    Indefinite,

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("quadrature did not reach tolerance (error estimate {estimate:e})")]
    Quadrature { estimate: f64 },

    #[error("minimization failed: {0}")]
    Minimization(String),

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("{0}")]
    InvalidConfig(String),

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by bad user input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::EmptySample
                | Error::NonPositive { .. }
                | Error::NonFinite { .. }
                | Error::Domain(_)
                | Error::InvalidConfig(_)
                | Error::Parse { .. }
                | Error::Io { .. }
                | Error::Csv(_)
                | Error::Degenerate(_)
        )
    }
}
