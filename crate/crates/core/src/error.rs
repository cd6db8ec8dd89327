use thiserror::Error;

use crate::model::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid delay system: {0}")]
    InvalidSystem(ValidationReport),

    #[error("invalid argument `{arg}`: {reason}")]
    InvalidArgument { arg: &'static str, reason: String },

    #[error("discretized state matrix is not Hurwitz (spectral abscissa {abscissa:e})")]
    NotHurwitz { abscissa: f64 },

    #[error("characteristic matrix is numerically singular at s = {re} + {im}i")]
    SingularShift { re: f64, im: f64 },

    #[error("R0 = sum of system matrices is numerically singular (condition estimate {cond:e}); zero is a characteristic root")]
    SingularR0 { cond: f64 },

    #[error("dense reference of dimension {dim} exceeds the limit {limit}")]
    CapacityExceeded { dim: usize, limit: usize },

    #[error("projected matrix has {count} eigenvalue(s) mapping to the closed right half-plane; rightmost root estimate {re} + {im}i")]
    ProjectedUnstable { count: usize, re: f64, im: f64 },

    #[error("residual {residual:e} above tolerance {tol:e} at the iteration cap k = {k}")]
    BudgetExhausted { k: usize, residual: f64, tol: f64 },

    #[error("projected matrix G_2k is numerically singular")]
    SingularProjection,

    #[error("starting block R0^-1 B deflated to zero columns")]
    ZeroStart,

    #[error("delay {tau} is not a multiple of the step {step}")]
    GridMismatch { tau: f64, step: f64 },

    #[error("horizon too short: |K(T)| = {tail:e} exceeds 1e-8 * max |K| = {bound:e}")]
    HorizonTooShort { tail: f64, bound: f64 },

    #[error("eigenvalue iteration failed to converge for a {dim}x{dim} matrix")]
    NoConvergence { dim: usize },

    #[error("Sylvester block solve is singular to working precision")]
    IllConditionedSpectrum,

    #[error("{0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
