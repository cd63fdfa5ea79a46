//! Market model: scenario lattices, payoffs, prior families, utilities and
//! the JSON document format that carries them.
//!
//! A scenario lattice is a finite tree (optionally merged into a DAG when
//! recombination is enabled) of non-negative price vectors indexed by time
//! `0..=T`.  The set of successors of a node is the support of the one-step
//! market at that node; a [`PriorFamily`] attaches to every non-terminal node
//! the finite list of probability vectors over its successors used by the
//! robust utility layer.

mod doc;
mod lattice;
mod payoff;
mod prior;
mod utility;

pub use doc::{load_model, save_model, Model};
pub use lattice::{Lattice, Node, RawNode};
pub use payoff::PayoffSpec;
pub use prior::PriorFamily;
pub use utility::{Utility1d, UtilityProfile};

use thiserror::Error;

/// Probability vectors must sum to one within this absolute tolerance.
pub const PROB_TOL: f64 = 1e-12;
/// Two price vectors are considered the same support point when they agree
/// within this relative tolerance.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Price increments `y_i − current` with coordinates below the support
/// tolerance (relative to the overall price scale) snapped to exact zero.
/// Keeps successors that merely echo the current price from masquerading as
/// arbitrage directions or unbounded hedging opportunities.
pub(crate) fn snapped_increments(support: &[Vec<f64>], current: &[f64]) -> Vec<Vec<f64>> {
    let scale = support
        .iter()
        .flat_map(|y| y.iter())
        .chain(current.iter())
        .fold(0.0f64, |a, &x| a.max(x.abs()));
    let eps = SUPPORT_TOL * (1.0 + scale);
    support
        .iter()
        .map(|y| {
            y.iter()
                .zip(current.iter())
                .map(|(a, b)| {
                    let v = a - b;
                    if v.abs() <= eps {
                        0.0
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("horizon must be ≥ 1")]
    HorizonZero,
    #[error("dimension must be ≥ 1")]
    DimensionZero,
    #[error("negative price at node {node}")]
    NegativePrice { node: String },
    #[error("price at node {node} has {got} coordinates, expected {expected}")]
    PriceDimension {
        node: String,
        got: usize,
        expected: usize,
    },
    #[error("non-finite price at node {node}")]
    NonFinitePrice { node: String },
    #[error("duplicate node id {id}")]
    DuplicateId { id: String },
    #[error("dangling successor id {succ} at node {node}")]
    DanglingSuccessor { node: String, succ: String },
    #[error("successor {succ} of node {node} must be one time step ahead")]
    TimeInconsistent { node: String, succ: String },
    #[error("node {node} lies at time {time}, beyond horizon {horizon}")]
    BeyondHorizon {
        node: String,
        time: u32,
        horizon: u32,
    },
    #[error("terminal node {node} must not have successors")]
    TerminalWithSuccessors { node: String },
    #[error("non-terminal node {node} has no successors")]
    NoSuccessors { node: String },
    #[error("expected exactly one node at time 0, found {count}")]
    RootCount { count: usize },
    #[error("root_price does not match the price of the time-0 node")]
    RootPriceMismatch,
    #[error("node {node} is unreachable from the root")]
    Unreachable { node: String },
    #[error("node {node} has {count} predecessors; a lattice must be a tree unless recombine is set")]
    MultiplePredecessors { node: String, count: usize },
    #[error("duplicate successor prices at node {node}; merging requires a terminal-price payoff and the recombine flag")]
    AmbiguousDuplicate { node: String },
    #[error("probability mass {mass} ≠ 1 at node {node}")]
    ProbabilityMass { mass: f64, node: String },
    #[error("negative probability entry at node {node}")]
    NegativeProbability { node: String },
    #[error("prior vector at node {node} has {got} entries, expected {expected}")]
    PriorLength {
        node: String,
        got: usize,
        expected: usize,
    },
    #[error("prior family attached to unknown or terminal node {node}")]
    PriorBadNode { node: String },
    #[error("prior family missing for node {node}")]
    PriorMissing { node: String },
    #[error("empty prior list at node {node}")]
    PriorEmpty { node: String },
    #[error("payoff missing for terminal path {leaf}")]
    PayoffMissing { leaf: String },
    #[error("payoff table references unknown terminal node {id}")]
    PayoffUnknownLeaf { id: String },
    #[error("payoff kind {kind} requires dimension {expected}, model has {got}")]
    PayoffDimension {
        kind: String,
        expected: usize,
        got: usize,
    },
    #[error("utility: {0}")]
    Utility(String),
    #[error("recombination requires a terminal-price payoff")]
    RecombineNeedsPricePayoff,
    #[error("recombination together with prior families is not supported")]
    RecombineWithPriors,
    #[error("generator: {0}")]
    Generator(String),
}

pub(crate) fn prices_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b.iter())
            .all(|(x, y)| (x - y).abs() <= SUPPORT_TOL * (1.0 + x.abs().max(y.abs())))
}
