//! Hierarchical clustering under the Revenue, Dissimilarity and
//! hierarchical-correlation (HCC) objectives.
//!
//! The crate covers objective evaluation, constant-sketch tree reductions
//! (star and comb conversions of a contracted tree), a graph-partition
//! oracle with exact and heuristic backends, approximation schemes driven by
//! that oracle, worst-case HCC algorithms, and brute-force oracles for small
//! inputs.
//!
//! All weighted code is generic over [`Weight`] (`f32`, `f64`,
//! `Ratio<i64>`); the aliases below fix the common choices.

#![allow(clippy::needless_range_loop)]

pub mod baselines;
pub mod epras;
pub mod error;
pub mod gen;
pub mod harness;
pub mod hcc;
pub mod instance;
pub mod io;
pub mod lca;
pub mod objective;
pub mod partition;
pub mod rng;
pub mod scalar;
pub mod sketch;
pub mod tree;

pub use error::{Error, Result};
pub use instance::{not_all_small, Channel, Instance};
pub use lca::{lca_size_table, LcaSizeTable};
pub use objective::{
    eval_dissimilarity, eval_hcc, eval_objective, eval_revenue, lca_weighted_sum, Objective, ObjectiveReport,
};
pub use scalar::Weight;
pub use tree::{HcTree, NodeId, NodeKind, TreeBuilder, Violation};

/// Exact rational weights.
pub type Rational = num_rational::Ratio<i64>;

/// Double-precision instance, the default everywhere.
pub type InstanceF64 = Instance<f64>;
/// Single-precision instance.
pub type InstanceF32 = Instance<f32>;
/// Exact instance for identity checks.
pub type ExactInstance = Instance<Rational>;

pub type ReportF64 = ObjectiveReport<f64>;
pub type ExactReport = ObjectiveReport<Rational>;
