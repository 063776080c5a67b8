use thiserror::Error;

use crate::Vector;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite {0}")]
    NonFinite(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("regularizer incompatible with domain: {0}")]
    Incompatible(String),

    #[error("point is not feasible: {0}")]
    Infeasible(String),

    #[error("map pool is not conservative (entry {index})")]
    NotConservative { index: usize },

    #[error("heterogeneous pool: {0}")]
    Heterogeneous(String),

    #[error("extragradient did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        best: Vector,
        residual: f64,
        iterations: usize,
    },

    #[error("round {got} recorded out of order, expected {expected}")]
    OutOfOrder { expected: usize, got: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
