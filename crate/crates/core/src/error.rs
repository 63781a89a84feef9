use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("tree has {tree} leaves but the instance has {instance} points")]
    SizeMismatch { tree: usize, instance: usize },
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("operation requires a binary tree")]
    NotBinary,
    #[error("need at least {needed} leaves, got {got}")]
    TooFewLeaves { needed: usize, got: usize },
    #[error("parameter {name} = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("exact search needs {needed} states, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("{candidates} candidates exceed the budget of {budget}; try a larger eps")]
    GridExplosion { candidates: u128, budget: u128 },
    #[error("n = {n} exceeds the exhaustive-search guard of {max}")]
    GuardExceeded { n: usize, max: usize },
    #[error("weights are not complementary at ({i}, {j}): w_s + w_d = {sum}")]
    NotComplementary { i: usize, j: usize, sum: f64 },
    #[error("malformed partition: {0}")]
    MalformedPartition(String),
    #[error("malformed contracted tree: {0}")]
    MalformedContraction(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
