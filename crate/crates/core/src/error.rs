use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("measure has zero mass")]
    ZeroMass,
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("mass mismatch: {left} vs {right}")]
    MassMismatch { left: f64, right: f64 },
    #[error("barycenter mismatch: {left} vs {right}")]
    BarycenterMismatch { left: f64, right: f64 },
    #[error("invalid atom: {0}")]
    InvalidAtom(String),
    #[error("subtraction leaves negative mass {mass} at {x}")]
    NegativeMass { x: f64, mass: f64 },
    #[error("source is not dominated by target in the convex-positive order")]
    NotDominated,
    #[error("measures are not in convex order")]
    NotInConvexOrder,
    #[error("closed set is empty")]
    EmptySet,
    #[error("point {x} lies outside the hull [{lo}, {hi}]")]
    OutsideHull { x: f64, lo: f64, hi: f64 },
    #[error("lift error: {0}")]
    MassError(String),
    #[error("order violation: {0}")]
    OrderViolation(String),
    #[error("p = {0} is not a slab boundary of the lift")]
    BoundaryMismatch(f64),
    #[error("invalid cost: {0}")]
    InvalidCost(String),
    #[error("LP dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("LP is {0}")]
    LpStatus(&'static str),
    #[error("{failed} of {total} paths did not hit the barrier within the step cap")]
    MaxStepsExceeded { failed: usize, total: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
