//! Path sampling and Monte-Carlo estimates of event probabilities.
//!
//! Path `i` draws from its own ChaCha8 stream seeded with `seed ^ i`, so a
//! batch does not depend on how paths are spread over threads.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::automata::{Acceptance, DetAutomaton};
use crate::mdp::{MarkovPolicy, Mdp, StateSet};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("controller chose infeasible action {action} in state {state} at step {step}")]
    InfeasibleAction { step: usize, state: usize, action: usize },
    #[error("invalid simulation settings: {0}")]
    Config(String),
    #[error("{0} acceptance cannot be decided on finite paths")]
    Unsupported(&'static str),
    #[error("path dump failed: {0}")]
    Io(String),
}

/// Chooses actions along a single path.
pub trait Controller {
    /// Called before the first step of every path.
    fn reset(&mut self, x0: usize);
    fn act(&mut self, t: usize, x: usize) -> usize;
}

#[derive(Debug, Clone, Copy)]
pub struct MarkovController<'a>(pub &'a MarkovPolicy);

impl Controller for MarkovController<'_> {
    fn reset(&mut self, _x0: usize) {}

    fn act(&mut self, t: usize, x: usize) -> usize {
        self.0.action(t, x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    State(usize),
    Distribution(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub num_paths: usize,
    pub horizon: usize,
    pub initial: InitialState,
}

impl SimConfig {
    fn check(&self, n_states: usize) -> Result<(), SimError> {
        if self.num_paths == 0 {
            return Err(SimError::Config("at least one path is needed".into()));
        }
        if self.horizon == 0 {
            return Err(SimError::Config("horizon must be at least 1".into()));
        }
        match &self.initial {
            InitialState::State(x) if *x >= n_states => {
                Err(SimError::Config(format!("initial state {x} out of range")))
            }
            InitialState::Distribution(p) => {
                let sum: f64 = p.iter().sum();
                if p.len() != n_states || p.iter().any(|v| !(*v >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                    Err(SimError::Config("initial distribution is not a distribution".into()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// States `x_0..=x_T` and actions `u_0..u_{T-1}`; shorter when stopped early.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Wald standard error `sqrt(p (1 - p) / N)`.
    pub std_error: f64,
    pub hits: usize,
    pub paths: usize,
}

impl Estimate {
    fn from_hits(hits: usize, paths: usize) -> Self {
        let p = hits as f64 / paths as f64;
        Self {
            mean: p,
            std_error: (p * (1.0 - p) / paths as f64).sqrt(),
            hits,
            paths,
        }
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

fn path_rng(seed: u64, i: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ i as u64)
}

fn draw_initial(initial: &InitialState, rng: &mut ChaCha8Rng) -> usize {
    match initial {
        InitialState::State(x) => *x,
        InitialState::Distribution(p) => {
            let u: f64 = rng.random();
            let mut cum = 0.0;
            for (x, &w) in p.iter().enumerate() {
                cum += w;
                if u < cum {
                    return x;
                }
            }
            p.iter().rposition(|&w| w > 0.0).unwrap_or(0)
        }
    }
}

/// Run one path. `observe(t, x)` is called on every visited state and may end
/// the path by returning `false`.
fn run_path<C: Controller>(
    mdp: &Mdp,
    ctrl: &mut C,
    cfg: &SimConfig,
    i: usize,
    steps: usize,
    mut observe: impl FnMut(usize, usize) -> bool,
) -> Result<Path, SimError> {
    let mut rng = path_rng(cfg.seed, i);
    let mut x = draw_initial(&cfg.initial, &mut rng);
    ctrl.reset(x);
    let mut path = Path {
        states: vec![x],
        actions: Vec::new(),
    };
    for t in 0..steps {
        if !observe(t, x) {
            return Ok(path);
        }
        let a = ctrl.act(t, x);
        let k = mdp
            .actions
            .position(x, a)
            .ok_or(SimError::InfeasibleAction { step: t, state: x, action: a })?;
        x = mdp.kernel.sample(&mdp.actions, x, k, &mut rng);
        path.actions.push(a);
        path.states.push(x);
    }
    observe(steps, x);
    Ok(path)
}

fn run_batch<C, F, T>(mdp: &Mdp, ctrl: &C, cfg: &SimConfig, per_path: F) -> Result<Vec<T>, SimError>
where
    C: Controller + Clone + Send + Sync,
    F: Fn(&mut C, usize) -> Result<T, SimError> + Sync,
    T: Send,
{
    cfg.check(mdp.n_states())?;
    (0..cfg.num_paths)
        .into_par_iter()
        .map(|i| {
            let mut c = ctrl.clone();
            per_path(&mut c, i)
        })
        .collect()
}

/// Sample `cfg.num_paths` paths of `cfg.horizon` steps.
pub fn sample_paths<C>(mdp: &Mdp, ctrl: &C, cfg: &SimConfig) -> Result<Vec<Path>, SimError>
where
    C: Controller + Clone + Send + Sync,
{
    run_batch(mdp, ctrl, cfg, |c, i| {
        run_path(mdp, c, cfg, i, cfg.horizon, |_, _| true)
    })
}

/// Fraction of paths that reach `goal` within `n` steps without leaving
/// `safe` before.
pub fn estimate_until<C>(
    mdp: &Mdp,
    safe: &StateSet,
    goal: &StateSet,
    n: usize,
    ctrl: &C,
    cfg: &SimConfig,
) -> Result<Estimate, SimError>
where
    C: Controller + Clone + Send + Sync,
{
    if n > cfg.horizon {
        return Err(SimError::Config(format!("event horizon {n} exceeds simulation horizon {}", cfg.horizon)));
    }
    let hits = run_batch(mdp, ctrl, cfg, |c, i| {
        let mut hit = false;
        run_path(mdp, c, cfg, i, n, |_, x| {
            if goal.contains(x) {
                hit = true;
                return false;
            }
            safe.contains(x)
        })?;
        Ok(hit)
    })?;
    Ok(Estimate::from_hits(hits.iter().filter(|&&h| h).count(), cfg.num_paths))
}

/// Fraction of paths whose label trace drives `automaton` into a final state
/// within `n` steps. The automaton state at step `k` has read the labels of
/// `x_0 .. x_{k-1}`.
pub fn estimate_dfa_acceptance<C>(
    mdp: &Mdp,
    automaton: &DetAutomaton,
    n: usize,
    ctrl: &C,
    cfg: &SimConfig,
) -> Result<Estimate, SimError>
where
    C: Controller + Clone + Send + Sync,
{
    let finals = match automaton.acceptance() {
        Acceptance::Reach(f) | Acceptance::BoundedReach { finals: f, .. } => f.clone(),
        other => return Err(SimError::Unsupported(other.kind())),
    };
    let labeling = mdp
        .labeling()
        .map_err(|e| SimError::Config(e.to_string()))?;
    if n > cfg.horizon {
        return Err(SimError::Config(format!("event horizon {n} exceeds simulation horizon {}", cfg.horizon)));
    }
    let hits = run_batch(mdp, ctrl, cfg, |c, i| {
        let mut q = automaton.initial();
        let mut hit = finals.contains(&q);
        run_path(mdp, c, cfg, i, n, |t, x| {
            if hit || t == n {
                return false;
            }
            q = automaton.next(q, labeling.letter(x));
            hit = finals.contains(&q);
            !hit
        })?;
        Ok(hit)
    })?;
    Ok(Estimate::from_hits(hits.iter().filter(|&&h| h).count(), cfg.num_paths))
}

/// CSV with header `path_id,step,state_index,action_index`; the final state
/// of each path has an empty action.
pub fn write_path_dump<W: Write>(paths: &[Path], out: W) -> Result<(), SimError> {
    let io = |e: csv::Error| SimError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path_id", "step", "state_index", "action_index"]).map_err(io)?;
    for (id, p) in paths.iter().enumerate() {
        for (t, x) in p.states.iter().enumerate() {
            let action = p.actions.get(t).map(|a| a.to_string()).unwrap_or_default();
            w.write_record([id.to_string(), t.to_string(), x.to_string(), action]).map_err(io)?;
        }
    }
    w.flush().map_err(|e| SimError::Io(e.to_string()))
}
