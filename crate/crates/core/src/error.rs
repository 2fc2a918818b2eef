use thiserror::Error;

use crate::network::Violation;

/// Errors produced by the zdnet library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("structure mismatch: {0}")]
    Structure(String),

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("{outcomes} outcomes exceeds the exact-computation cap of {cap}")]
    TooLarge { outcomes: u128, cap: u128 },

    #[error("numerical integrity violated: {0}")]
    Numerical(String),

    #[error("network failed validation: {}", join_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("node {0} out of range")]
    NodeOutOfRange(usize),

    #[error("delay profile infeasible: zero-delay rule violated at node {node} (b = 0 but h = {h} <= m = {m})")]
    Infeasible { node: usize, h: usize, m: usize },

    #[error("class error: {0}")]
    Class(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("Blahut-Arimoto did not converge in {iterations} iterations (bracket [{lower}, {upper}])")]
    IterationLimit {
        iterations: usize,
        lower: f64,
        upper: f64,
    },

    #[error("code error: {0}")]
    Code(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
