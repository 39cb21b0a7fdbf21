//! The crate-wide error type.
//!
//! Every variant maps to a stable machine-readable code and to one of the
//! CLI exit classes (validation vs internal), so the binary never has to
//! pattern-match on messages.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, MmlError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MmlError {
    #[error("n_max = {requested} exceeds the configured capacity of {limit}")]
    Capacity { requested: usize, limit: usize },

    #[error("{what} = {value} is outside the available range 1..={max}")]
    OutOfRange { what: &'static str, value: f64, max: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("coefficient invariant violated: {0}")]
    CoefficientInvariant(String),

    #[error("log-gamma pole at z = {0}")]
    Pole(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergence: {what} (discrepancy {discrepancy:e} > tolerance {tolerance:e})")]
    NonConvergence { what: String, discrepancy: f64, tolerance: f64 },

    #[error("coefficient table has n_max = {available}, evaluation needs n_max >= {required}")]
    InsufficientCoefficients { required: usize, available: usize },

    #[error(
        "evaluation budget of {cap} exceeded: {panels_done} of {panels_total} panels done \
         ({evals_done} evaluations, partial value {partial_re:+e}{partial_im:+e}i)"
    )]
    BudgetExceeded {
        cap: usize,
        panels_done: usize,
        panels_total: usize,
        evals_done: usize,
        partial_re: f64,
        partial_im: f64,
    },

    #[error("evaluation failed at t = {t}: {source}")]
    AtPoint { t: f64, source: Box<MmlError> },

    #[error("quadrature cannot resolve the oscillation: {0}")]
    Resolution(String),

    #[error("no stationary point of the phase inside the support")]
    NoStationaryPoint,

    #[error("stationary point {xi0} lies within {gap:e} of the support edge")]
    BoundaryStationaryPoint { xi0: f64, gap: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("budget error: {0}")]
    Budget(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl MmlError {
    /// Stable code used in machine-readable error records.
    pub fn code(&self) -> &'static str {
        match self {
            MmlError::Capacity { .. } => "CAPACITY",
            MmlError::OutOfRange { .. } => "OUT_OF_RANGE",
            MmlError::Parse(_) => "PARSE_ERROR",
            MmlError::CoefficientInvariant(_) => "COEFF_INVARIANT",
            MmlError::Pole(_) => "POLE",
            MmlError::Domain(_) => "DOMAIN",
            MmlError::NonConvergence { .. } => "NON_CONVERGENCE",
            MmlError::InsufficientCoefficients { .. } => "INSUFFICIENT_COEFFICIENTS",
            MmlError::BudgetExceeded { .. } => "BUDGET_EXCEEDED",
            MmlError::AtPoint { source, .. } => source.code(),
            MmlError::Resolution(_) => "RESOLUTION",
            MmlError::NoStationaryPoint => "NO_STATIONARY_POINT",
            MmlError::BoundaryStationaryPoint { .. } => "BOUNDARY_STATIONARY_POINT",
            MmlError::DegenerateFit(_) => "DEGENERATE_FIT",
            MmlError::Validation(_) => "VALIDATION",
            MmlError::Budget(_) => "BUDGET",
            MmlError::Io(_) => "IO_ERROR",
        }
    }

    /// True for errors caused by the caller's input rather than by a
    /// numerical failure inside the library.
    pub fn is_validation(&self) -> bool {
        match self {
            MmlError::AtPoint { source, .. } => source.is_validation(),
            MmlError::Parse(_)
            | MmlError::CoefficientInvariant(_)
            | MmlError::Validation(_)
            | MmlError::OutOfRange { .. }
            | MmlError::Domain(_)
            | MmlError::Capacity { .. }
            | MmlError::Budget(_)
            | MmlError::BudgetExceeded { .. }
            | MmlError::InsufficientCoefficients { .. }
            | MmlError::Pole(_)
            | MmlError::NoStationaryPoint
            | MmlError::BoundaryStationaryPoint { .. } => true,
            _ => false,
        }
    }

    pub(crate) fn at(self, t: f64) -> Self {
        MmlError::AtPoint { t, source: Box::new(self) }
    }
}

impl From<std::io::Error> for MmlError {
    fn from(e: std::io::Error) -> Self {
        MmlError::Io(e.to_string())
    }
}
