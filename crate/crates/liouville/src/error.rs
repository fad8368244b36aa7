use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pole of the gamma function at {0}")]
    PoleError(String),
    #[error("numerical failure: {0}")]
    NumericalError(String),
    #[error("stereographic projection of the north pole")]
    NorthPoleError,
    #[error("coincident points")]
    CoincidentPointsError,
    #[error("invalid mesh resolution: {0}")]
    InvalidResolution(String),
    #[error("non-finite integrand value at node {0}")]
    DivergentIntegrand(String),
    #[error("growth bound violated: {0}")]
    GrowthViolation(String),
    #[error("time {t} beyond the horizon 1/(4c) = {horizon}")]
    HorizonExceeded { t: f64, horizon: f64 },
    #[error("critical point not bracketed: {0}")]
    RootNotBracketed(String),
    #[error("charges are not neutral: w = {0}")]
    NotNeutral(String),
    #[error("insertion {index} has Re(alpha) <= -1/(2b)")]
    SingularInsertion { index: usize },
    #[error("convergence condition violated: {0}")]
    ConvergenceConditionViolated(String),
    #[error("gamma factor (r = {r}, j = {j}) sits on a pole")]
    PoleInFactor { r: usize, j: usize },
    #[error("Upsilon denominator {index} vanishes")]
    DenominatorZero { index: usize },
    #[error("outside the continuation region: {0}")]
    RegionViolated(String),
    #[error("coincident insertions")]
    CoincidentInsertions,
    #[error("point maps to infinity")]
    PoleOfMap,
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("evaluation at an insertion point")]
    EvaluationAtInsertion,
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::PoleError(_) => "PoleError",
            Error::NumericalError(_) => "NumericalError",
            Error::NorthPoleError => "NorthPoleError",
            Error::CoincidentPointsError => "CoincidentPointsError",
            Error::InvalidResolution(_) => "InvalidResolution",
            Error::DivergentIntegrand(_) => "DivergentIntegrand",
            Error::GrowthViolation(_) => "GrowthViolation",
            Error::HorizonExceeded { .. } => "HorizonExceeded",
            Error::RootNotBracketed(_) => "RootNotBracketed",
            Error::NotNeutral(_) => "NotNeutral",
            Error::SingularInsertion { .. } => "SingularInsertion",
            Error::ConvergenceConditionViolated(_) => "ConvergenceConditionViolated",
            Error::PoleInFactor { .. } => "PoleInFactor",
            Error::DenominatorZero { .. } => "DenominatorZero",
            Error::RegionViolated(_) => "RegionViolated",
            Error::CoincidentInsertions => "CoincidentInsertions",
            Error::PoleOfMap => "PoleOfMap",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::EvaluationAtInsertion => "EvaluationAtInsertion",
            Error::Invalid(_) => "Invalid",
        }
    }

    /// Validation problems are the caller's fault; everything else is numerical.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NorthPoleError
                | Error::CoincidentPointsError
                | Error::InvalidResolution(_)
                | Error::HorizonExceeded { .. }
                | Error::NotNeutral(_)
                | Error::SingularInsertion { .. }
                | Error::ConvergenceConditionViolated(_)
                | Error::RegionViolated(_)
                | Error::CoincidentInsertions
                | Error::PoleOfMap
                | Error::EvaluationAtInsertion
                | Error::Invalid(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
