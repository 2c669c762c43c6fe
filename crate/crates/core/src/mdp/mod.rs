//! Finite controlled Markov processes: state grids, feasible actions,
//! stochastic kernels, labels and the one-step Bellman operators.

mod actions;
mod bellman;
pub mod config;
mod grid;
mod kernel;
mod model;
mod policy;
mod sets;

pub use actions::ActionSet;
pub use bellman::{
    bellman_max, bellman_min, bellman_selector, value_under_initial_distribution, Backup,
};
pub use grid::StateGrid;
pub use kernel::{normalize_exact, Factor1d, LiftedKernel, SeparableKernel, TransitionKernel};
pub use model::{GridModel, Labeling, Mdp, MdpBuilder};
pub use policy::MarkovPolicy;
pub use sets::StateSet;

use thiserror::Error;

/// Row sums must be within this distance of one before renormalisation.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Kernels with at least this many states store explicit rows sparsely.
pub const DENSE_STATE_LIMIT: usize = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("state {0} has no feasible action")]
    NoFeasibleAction(usize),
    #[error("row ({state}, action {action}) sums to {sum}")]
    RowSum { state: usize, action: usize, sum: f64 },
    #[error("row ({state}, action {action}) has a negative or non-finite entry")]
    BadProbability { state: usize, action: usize },
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("action {action} is not feasible at state {state}")]
    InfeasibleAction { state: usize, action: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("not a probability distribution: {0}")]
    NotADistribution(String),
    #[error("model is not labelled")]
    Unlabelled,
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("{0}")]
    Io(String),
}
