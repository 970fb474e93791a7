use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid instance: {}", join_violations(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("allocation violates the OFDMA property on subcarrier {subcarrier}")]
    NotOfdma { subcarrier: usize },

    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("instance has no {0}")]
    MissingField(&'static str),

    #[error("shape requirement not met: {0}")]
    Shape(String),

    #[error("weight matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },

    #[error("unbalanced transportation instance: supply {supply} != demand {demand}")]
    Unbalanced { supply: u64, demand: u64 },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("enumeration of {required} assignments exceeds budget {budget}")]
    EnumerationBudgetExceeded { required: f64, budget: u64 },

    #[error("3DM size {size} exceeds the exact-solver bound {bound}")]
    SizeBoundExceeded { size: usize, bound: usize },

    #[error("invalid 3DM instance: {0}")]
    InvalidThreeDm(String),

    #[error("chosen triples do not form a match")]
    NotAMatch,

    #[error("invalid ratio c = {num}/{den}: {reason}")]
    InvalidRatio { num: u64, den: u64, reason: String },

    #[error("{0}")]
    Unsupported(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
