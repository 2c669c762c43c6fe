//! Running a planned task and writing its artifacts.

use std::path::{Path, PathBuf};

use stochctl::mdp::{GridModel, MarkovPolicy, StateSet};
use stochctl::output;
use stochctl::persistence::{
    buchi_on_sets, buchi_value, persistence_truncated, persistence_value, BuchiMode, PersistenceOptions,
};
use stochctl::reach::{
    reach_bounded, reach_unbounded, safety_bounded, safety_unbounded, truncated_reach, Direction,
    ExcessiveCertificate, ReachSpec, Status, UnboundedOptions, ValueResult,
};

use crate::route::{Plan, Task};
use crate::Failure;

/// Truncation data for unbounded reach and persistence.
pub struct Truncation {
    pub cert: ExcessiveCertificate,
    pub eps: f64,
    /// Exclusion set and the bound assumed on it (persistence only).
    pub exclusion: Option<(StateSet, f64)>,
}

pub struct SolveOptions {
    pub direction: Direction,
    pub tol: f64,
    /// Sweep budget of the unbounded engines.
    pub max_iters: usize,
    pub truncation: Option<Truncation>,
}

pub enum Residuals {
    Single(Vec<f64>),
    Phased(Vec<(u8, usize, f64)>),
}

/// Engine output mapped back to the question asked.
pub struct Solution {
    /// Value at `(x, q^s)` per base state.
    pub values: Vec<f64>,
    /// Automaton state reported in the `q` column.
    pub q: usize,
    pub bound: Option<f64>,
    pub status: &'static str,
    pub diverged: bool,
    pub residuals: Residuals,
    pub policy: Option<PolicyTable>,
}

/// Optimal decision rules in engine state indices.
pub struct PolicyTable {
    pub policy: MarkovPolicy,
    pub indifferent: Vec<Vec<bool>>,
    /// Automaton states per base state; 1 on the base model.
    pub q_count: usize,
    /// Automaton state written for base-model rules.
    pub q: usize,
}

impl PolicyTable {
    fn from_result(r: &ValueResult, q_count: usize, q: usize) -> Self {
        Self {
            policy: r.policy.clone(),
            indifferent: r.indifferent.clone(),
            q_count,
            q,
        }
    }

    /// Rows `(x, q, action)` at time `t`.
    pub fn rows(&self, t: usize) -> Vec<(usize, usize, Option<usize>)> {
        let rule = self.policy.rule(t);
        let ties = &self.indifferent[t.min(self.indifferent.len().saturating_sub(1))];
        (0..rule.len())
            .map(|s| {
                let a = (!ties[s]).then_some(rule[s] as usize);
                if self.q_count == 1 {
                    (s, self.q, a)
                } else {
                    (s / self.q_count, s % self.q_count, a)
                }
            })
            .collect()
    }
}

fn status_name(status: Status, negated: bool) -> &'static str {
    match (status, negated) {
        (Status::LowerEstimate, true) => "upper-estimate",
        (s, _) => s.as_str(),
    }
}

fn unbounded(opts: &SolveOptions) -> UnboundedOptions {
    UnboundedOptions {
        tol: opts.tol,
        max_iters: opts.max_iters,
        ..Default::default()
    }
}

fn persistence_opts(opts: &SolveOptions) -> PersistenceOptions {
    PersistenceOptions {
        tol: opts.tol,
        phase_cap: opts.max_iters,
    }
}

fn max_only(dir: Direction, what: &str) -> Result<(), Failure> {
    match dir {
        Direction::Max => Ok(()),
        Direction::Min => Err(Failure::Unsupported(format!(
            "minimal {what} probabilities are not supported; only --direction max"
        ))),
    }
}

fn no_truncation(opts: &SolveOptions, what: &str) -> Result<(), Failure> {
    match opts.truncation {
        Some(_) => Err(Failure::Invalid(format!("--cert does not apply to {what}"))),
        None => Ok(()),
    }
}

pub fn solve(plan: &Plan, opts: &SolveOptions) -> Result<Solution, Failure> {
    // a negated task answers the complement, so optimise the other way
    let dir = if plan.negated { opts.direction.flip() } else { opts.direction };
    let mut sol = match &plan.task {
        Task::Safety { safe, horizon, q } => {
            let base = plan.base();
            no_truncation(opts, "safety tasks")?;
            let r = match horizon {
                Some(n) => safety_bounded(base, safe, dir, *n).map_err(stochctl::Error::from)?,
                None => safety_unbounded(base, safe, dir, unbounded(opts)).map_err(stochctl::Error::from)?,
            };
            from_value(&r, *q, 1, plan.negated)
        }
        Task::Reach { product, horizon } => {
            let (goal, safe) = match product.target_sets().map_err(stochctl::Error::from)? {
                stochctl::product::TargetSets::Reach { goal, safe, .. } => (goal, safe),
                stochctl::product::TargetSets::Buchi { .. } => unreachable!("planned as reach"),
            };
            let spec = ReachSpec::new(safe, goal, dir).map_err(stochctl::Error::from)?;
            let r = match (horizon, &opts.truncation) {
                (Some(n), None) => reach_bounded(&product.mdp, &spec, *n).map_err(stochctl::Error::from)?,
                (Some(_), Some(_)) => return Err(Failure::Invalid("--cert needs --horizon inf".into())),
                (None, None) => reach_unbounded(&product.mdp, &spec, unbounded(opts)).map_err(stochctl::Error::from)?,
                (None, Some(t)) => {
                    if t.exclusion.is_some() {
                        return Err(Failure::Invalid("--exclude applies to persistence only".into()));
                    }
                    truncated_reach(&product.mdp, &spec, &t.cert, t.eps, unbounded(opts))
                        .map_err(stochctl::Error::from)?
                }
            };
            let mut sol = from_value(&r, product.automaton.initial(), product.q_count(), plan.negated);
            sol.values = product.initial_values(&r.values);
            sol
        }
        Task::Persistence { safe } => {
            let base = plan.base();
            max_only(dir, "persistence")?;
            match &opts.truncation {
                None => {
                    let r = persistence_value(base, safe, persistence_opts(opts)).map_err(stochctl::Error::from)?;
                    let mut sol = from_value(&r.value, 0, 1, plan.negated);
                    sol.residuals = Residuals::Phased(r.phase_log());
                    sol
                }
                Some(t) => {
                    let (exclusion, bound) = t
                        .exclusion
                        .clone()
                        .unwrap_or_else(|| (StateSet::empty(base.n_states()), 0.0));
                    let r = persistence_truncated(base, safe, &t.cert, &exclusion, t.eps, bound, persistence_opts(opts))
                        .map_err(stochctl::Error::from)?;
                    from_value(&r, 0, 1, plan.negated)
                }
            }
        }
        Task::Buchi { finals } => {
            max_only(dir, "repeated-reachability")?;
            no_truncation(opts, "repeated reachability")?;
            let r = buchi_on_sets(plan.base(), finals, &BuchiMode::Optimize, persistence_opts(opts))
                .map_err(stochctl::Error::from)?;
            bracket(r, 0)
        }
        Task::BuchiProduct { product } => {
            max_only(dir, "repeated-reachability")?;
            no_truncation(opts, "repeated reachability")?;
            let r = buchi_value(product, &BuchiMode::Optimize, persistence_opts(opts)).map_err(stochctl::Error::from)?;
            let mut sol = bracket(r.clone(), product.automaton.initial());
            sol.values = product.initial_values(&r.lower);
            sol
        }
    };
    if plan.negated {
        for v in &mut sol.values {
            *v = 1.0 - *v;
        }
    }
    Ok(sol)
}

fn from_value(r: &ValueResult, q: usize, q_count: usize, negated: bool) -> Solution {
    Solution {
        values: r.values.clone(),
        q,
        bound: r.error_bound,
        status: status_name(r.status, negated),
        diverged: r.status == Status::Diverged,
        residuals: Residuals::Single(r.residuals.clone()),
        policy: Some(PolicyTable::from_result(r, q_count, q)),
    }
}

/// Repeated reachability is reported by its lower bracket; the bracket width
/// is the bound.
fn bracket(r: stochctl::persistence::BuchiResult, q: usize) -> Solution {
    let width = r.width();
    log::info!("upper bracket at the first state: {}", r.upper.first().copied().unwrap_or(f64::NAN));
    Solution {
        values: r.lower,
        q,
        bound: Some(width),
        status: r.status.as_str(),
        diverged: r.status == Status::Diverged,
        residuals: Residuals::Single(Vec::new()),
        policy: None,
    }
}

impl Solution {
    /// Write `value.csv` and `residuals.csv` into `dir`.
    pub fn write(&self, model: &GridModel, dir: &Path) -> Result<Vec<PathBuf>, Failure> {
        let mut files = Vec::new();
        let path = dir.join("value.csv");
        let out = output::create(&path).map_err(|e| Failure::io(&path, e))?;
        output::write_values(out, &model.grid, self.values.iter().enumerate().map(|(x, &v)| (x, self.q, v)))
            .map_err(|e| Failure::io(&path, e))?;
        files.push(path);
        let path = dir.join("residuals.csv");
        let out = output::create(&path).map_err(|e| Failure::io(&path, e))?;
        match &self.residuals {
            Residuals::Single(r) => output::write_residuals(out, r),
            Residuals::Phased(log) => output::write_phase_residuals(out, log),
        }
        .map_err(|e| Failure::io(&path, e))?;
        files.push(path);
        Ok(files)
    }

    pub fn summary(&self, value: f64) -> String {
        let bound = self.bound.map_or("none".to_string(), |b| b.to_string());
        format!("value={value} bound={bound} status={}", self.status)
    }
}
