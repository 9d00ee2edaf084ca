use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("jet specs differ")]
    IncompatibleSpec,
    #[error("invalid jet spec: {0}")]
    InvalidSpec(String),
    #[error("division by a jet with zero constant term")]
    DivisionSingularity,
    #[error("{function} is undefined at constant term {value}")]
    ElementaryDomain { function: &'static str, value: f64 },
    #[error("requested order {order} exceeds cap {cap}")]
    OrderExceedsCap { order: u32, cap: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("state outside domain: {0}")]
    DomainViolation(String),
    #[error("reparameterization failed: {0}")]
    Reparameterization(String),
    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },
    #[error("quadrature did not reach tolerance (estimate {estimate:e})")]
    Quadrature { estimate: f64 },
    #[error("trajectory escaped the domain at t = {t}")]
    Escape { t: f64 },
    #[error("oracle fit failed: {0}")]
    OracleFailure(String),
    #[error("branch degeneracy: {0}")]
    BranchDegeneracy(String),
    #[error("no zero found: {0}")]
    NoZeroFound(String),
    #[error("nondegeneracy failure: {0}")]
    Nondegeneracy(String),
    #[error("epsilon {0} is below the floor")]
    DegenerateEpsilon(f64),
    #[error("Newton iteration failed: {0}")]
    NotConverged(String),
    #[error("unsupported matrix shape: {0}")]
    UnsupportedShape(String),
    #[error("no eigenvalue crossing: {0}")]
    NoCrossing(String),
    #[error("section crossing not transversal: {0}")]
    NotTransversal(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
