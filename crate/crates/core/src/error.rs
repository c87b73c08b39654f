use alloc::vec::Vec;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    Domain { what: &'static str, value: f64 },
    /// Invalid model or solver configuration (e.g. a CFL violation).
    Config(&'static str),
    /// The operation does not apply to this cost variant.
    UnsupportedCost(&'static str),
    /// Hamilton's ODE produced a non-monotone costate or left its domain.
    Integration { u0: f64, step: usize },
    /// No initial height reproduces the requested point.
    Shooting { t: f64, u: f64, residual: f64 },
    /// NaN or infinity appeared during a grid march.
    Numerical { level: usize },
    /// A state trajectory left the computational domain.
    DomainCap { t: f64, u: f64 },
    /// An iterative method stopped before meeting its tolerance.
    NoConvergence { iterations: usize, residual: f64 },
    /// A regularisation sequence did not settle; carries the successive gaps.
    NotCauchy { gaps: Vec<f64>, tolerance: f64 },
    /// Too many simulated paths produced non-finite wealth.
    Flagged { flagged: usize, n_paths: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => write!(f, "domain error: {what} (got {value})"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::UnsupportedCost(msg) => write!(f, "unsupported cost variant: {msg}"),
            Error::Integration { u0, step } => {
                write!(f, "characteristic from u0={u0} failed at step {step}")
            }
            Error::Shooting { t, u, residual } => {
                write!(f, "shooting failed at (t={t}, u={u}), residual {residual:e}")
            }
            Error::Numerical { level } => write!(f, "non-finite value at time level {level}"),
            Error::DomainCap { t, u } => write!(f, "state u={u} at t={t} left the grid"),
            Error::NoConvergence { iterations, residual } => {
                write!(f, "no convergence after {iterations} iterations (residual {residual:e})")
            }
            Error::NotCauchy { gaps, tolerance } => {
                write!(f, "regularised paths not Cauchy at tolerance {tolerance:e}; gaps {gaps:?}")
            }
            Error::Flagged { flagged, n_paths } => {
                write!(f, "{flagged} of {n_paths} paths produced non-finite wealth")
            }
        }
    }
}

impl core::error::Error for Error {}
