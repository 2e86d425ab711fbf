use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid metric pair: {0}")]
    InvalidMetric(String),

    #[error("point {0} lies on the diagonal and cannot be a generator")]
    DiagonalGenerator(usize),

    #[error("non-finite coordinate in birth-death point ({birth}, {death})")]
    NonFiniteCoordinate { birth: f64, death: f64 },

    #[error("birth-death point ({birth}, {death}) must satisfy birth < death")]
    InvalidBirthDeath { birth: f64, death: f64 },

    #[error("essential (infinite) bars are not supported")]
    EssentialBar,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("generator index {index} outside ground space of rank {rank}")]
    UnknownGenerator { index: usize, rank: usize },

    #[error("point ({birth}, {death}) is not a generator of the ground space")]
    UnknownPoint { birth: f64, death: f64 },

    #[error("jump profile produced a non-finite rate at distance {0}")]
    NonFiniteRate(f64),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("jump measure is not symmetric: {0}")]
    AsymmetricMeasure(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid quadrature over rank {rank} exceeds the cost guard (max rank {max}); use monte-carlo quadrature")]
    CostGuard { rank: usize, max: usize },

    #[error("invalid quadrature spec: {0}")]
    InvalidQuadrature(String),

    #[error("series did not reach tolerance {tol} within {budget} terms")]
    SeriesBudget { tol: f64, budget: usize },

    #[error("series support exceeded {0} lattice points")]
    SupportBudget(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mixture measure: {0}")]
    InvalidMixture(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
