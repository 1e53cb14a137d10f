//! Error type shared by all engine modules.
//!
//! Every fallible operation returns `Result<T, CoreError>`. Variants carry a
//! short context string; callers that can recover match on the variant, the
//! CLI maps variants onto exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("series variables differ: {0} vs {1}")]
    VariableMismatch(String, String),

    #[error("division by a series with no known nonzero term")]
    DivisionByZeroSeries,

    #[error("leading coefficient admits no exact root: {0}")]
    NonInvertibleLeadingTerm(String),

    #[error("exponent lattice denominator would exceed 8: {0}")]
    LatticeOverflow(String),

    #[error("composition diverges: inner series has nonpositive valuation and outer is not polynomial")]
    DivergentComposition,

    #[error("series is not invertible for reversion: {0}")]
    NotInvertible(String),

    #[error("substitution hits a pole: {0}")]
    PoleHit(String),

    #[error("total-derivative reduction left an irreducible remainder: {0}")]
    ReductionStuck(String),

    #[error("operator minimization failed: {0}")]
    MinimizationFailed(String),

    #[error("independently computed routes disagree: {0}")]
    RouteDisagreement(String),

    #[error("requested order exceeds computed data: {0}")]
    InsufficientOrder(String),

    #[error("decoupling limit left a divergent or mismatched term: {0}")]
    LimitMismatch(String),

    #[error("series regrouping does not close: {0}")]
    RegroupMismatch(String),

    #[error("parameters fit no asymptotic region by the requested margin: {0}")]
    AmbiguousRegion(String),

    #[error("adaptive integrator exceeded its step budget: {0}")]
    StiffnessFailure(String),

    #[error("monodromy trace sits on a branch point: {0}")]
    BranchAmbiguity(String),

    #[error("invalid argument: {0}")]
    DomainError(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
