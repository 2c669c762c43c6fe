//! Optimal probabilities of temporal-logic events over finite controlled
//! Markov processes.
//!
//! The crate is organised bottom-up:
//!
//! * [`mdp`] holds the finite model (state grid, feasible actions, kernel,
//!   labels) and the three one-step Bellman operators.
//! * [`ltl`] parses LTL text, classifies it into the safe / co-safe / bounded
//!   fragments and translates co-safe formulae into DFAs by progression.
//! * [`automata`] is the deterministic automaton type and its file format.
//! * [`product`] composes a labelled model with an automaton.
//! * [`reach`] and [`persistence`] are the dynamic-programming engines.
//! * [`montecarlo`] samples paths for statistical cross-checks.
//! * [`powernet`] builds the two-subnetwork power model and runs the case study.

pub mod automata;
pub mod ltl;
pub mod mdp;
pub mod montecarlo;
pub mod output;
pub mod persistence;
pub mod powernet;
pub mod product;
pub mod reach;

use thiserror::Error;

/// Umbrella error for callers that drive the whole pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] mdp::ModelError),
    #[error(transparent)]
    Ltl(#[from] ltl::LtlError),
    #[error(transparent)]
    Automaton(#[from] automata::AutomatonError),
    #[error(transparent)]
    Product(#[from] product::ProductError),
    #[error(transparent)]
    Reach(#[from] reach::ReachError),
    #[error(transparent)]
    Persistence(#[from] persistence::PersistenceError),
    #[error(transparent)]
    Simulation(#[from] montecarlo::SimError),
    #[error(transparent)]
    Powernet(#[from] powernet::PowernetError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Load a model configuration file and build its kernel.
pub fn load_model(path: &std::path::Path) -> Result<mdp::GridModel, Error> {
    let text = std::fs::read_to_string(path)?;
    let dir = path.parent().unwrap_or(std::path::Path::new("."));
    let cfg = mdp::config::parse(&text, dir)?;
    match &cfg.kernel {
        mdp::config::KernelSource::Builtin { name, params } if name == "powernet" => {
            Ok(powernet::from_config(&cfg, params)?)
        }
        mdp::config::KernelSource::Builtin { name, .. } => Err(mdp::ModelError::Config {
            line: 0,
            msg: format!("unknown builtin kernel {name}"),
        }
        .into()),
        mdp::config::KernelSource::File(_) => Ok(cfg.build_from_file()?),
    }
}
