//! Constrained reachability and safety by dynamic programming.

mod absorbing;
mod excessive;

pub use absorbing::{
    absorbing_analysis, absorbing_chain, contraction_error_bound, AbsorbenceReport, AbsorbenceVerdict,
    DEFAULT_ABSORBING_CAP, MASS_TOLERANCE,
};
pub use excessive::{truncated_reach, verify_excessive, CertMode, ExcessiveCertificate, ExcessiveVerdict};

use thiserror::Error;

use crate::mdp::{bellman_max, bellman_min, Backup, MarkovPolicy, Mdp, ModelError, StateSet};

/// Action values closer than this count as a tie when reporting policies.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Allowed violation of the monotone-convergence checks.
pub const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ReachError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("state set over {got} states, model has {expected}")]
    SetSize { expected: usize, got: usize },
    #[error("absorbence analysis is not contractive ({0:?})")]
    NotContractive(AbsorbenceVerdict),
    #[error("excessive certificate rejected: {0}")]
    CertificateRejected(String),
    #[error("goal set meets the sublevel set {{g <= 1}} at state {0}")]
    GoalMeetsSublevel(usize),
    #[error("epsilon must lie in (0, 1], got {0}")]
    BadEpsilon(f64),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("truncated safe set is not contractive; certificate inconsistent with model")]
    TruncationNotContractive,
    #[error("iterate {iter} moved the wrong way at state {state} by {delta:e}")]
    Monotonicity { iter: usize, state: usize, delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Max,
    Min,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Max => Direction::Min,
            Direction::Min => Direction::Max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Finite horizon: the values are exact.
    Exact,
    Converged,
    /// Minimum over an unbounded horizon without a contraction certificate:
    /// the iterates may undershoot the true value.
    LowerEstimate,
    /// Iteration budget exhausted before the residual fell below tolerance.
    Diverged,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Exact => "exact",
            Status::Converged => "converged",
            Status::LowerEstimate => "lower-estimate",
            Status::Diverged => "diverged",
        }
    }
}

/// Reach `goal` while staying in `safe`. Overlap is resolved in favour of
/// the goal.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachSpec {
    safe: StateSet,
    goal: StateSet,
    pub direction: Direction,
}

impl ReachSpec {
    pub fn new(safe: StateSet, goal: StateSet, direction: Direction) -> Result<Self, ReachError> {
        if safe.universe() != goal.universe() {
            return Err(ReachError::SetSize {
                expected: goal.universe(),
                got: safe.universe(),
            });
        }
        Ok(Self {
            safe: safe.difference(&goal),
            goal,
            direction,
        })
    }

    pub fn safe(&self) -> &StateSet {
        &self.safe
    }

    pub fn goal(&self) -> &StateSet {
        &self.goal
    }

    /// States that are neither safe nor goal.
    pub fn unsafe_set(&self) -> StateSet {
        self.safe.union(&self.goal).complement()
    }

    fn check(&self, mdp: &Mdp) -> Result<(), ReachError> {
        if self.goal.universe() != mdp.n_states() {
            return Err(ReachError::SetSize {
                expected: mdp.n_states(),
                got: self.goal.universe(),
            });
        }
        Ok(())
    }
}

/// Values, policy and convergence record of a DP run.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueResult {
    pub values: Vec<f64>,
    /// Time-varying for finite horizons (rule `k` applies at time `k`),
    /// stationary otherwise.
    pub policy: MarkovPolicy,
    /// Per rule, states where the choice of action does not matter.
    pub indifferent: Vec<Vec<bool>>,
    pub iterations: usize,
    /// Sup-norm change of each sweep.
    pub residuals: Vec<f64>,
    pub error_bound: Option<f64>,
    pub status: Status,
}

impl ValueResult {
    /// Successive residual ratios, an empirical contraction modulus.
    pub fn beta_estimates(&self) -> Vec<Option<f64>> {
        (0..self.residuals.len())
            .map(|i| {
                (i > 0 && self.residuals[i - 1] > 0.0).then(|| self.residuals[i] / self.residuals[i - 1])
            })
            .collect()
    }
}

fn optimise(mdp: &Mdp, f: &[f64], dir: Direction, restrict: Option<&StateSet>) -> Result<Backup, ReachError> {
    Ok(match dir {
        Direction::Max => bellman_max(mdp, f, restrict)?,
        Direction::Min => bellman_min(mdp, f, restrict)?,
    })
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// One step `1_G + 1_S * T f` with the optimising decision rule.
pub fn dp_step(mdp: &Mdp, spec: &ReachSpec, f: &[f64]) -> Result<Backup, ReachError> {
    spec.check(mdp)?;
    let mut b = optimise(mdp, f, spec.direction, None)?;
    for x in 0..mdp.n_states() {
        b.values[x] = if spec.goal.contains(x) {
            1.0
        } else if spec.safe.contains(x) {
            clamp01(b.values[x])
        } else {
            0.0
        };
    }
    Ok(b)
}

fn indifference(b: &Backup, relevant: &StateSet) -> Vec<bool> {
    b.spread
        .iter()
        .enumerate()
        .map(|(x, &s)| !relevant.contains(x) || s <= TIE_TOLERANCE)
        .collect()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Check `next >= prev` (or `<=` when `increasing` is false) within slack.
fn check_monotone(prev: &[f64], next: &[f64], increasing: bool, iter: usize) -> Result<(), ReachError> {
    for (x, (&p, &n)) in prev.iter().zip(next).enumerate() {
        let delta = if increasing { p - n } else { n - p };
        if delta > MONOTONE_SLACK {
            return Err(ReachError::Monotonicity { iter, state: x, delta });
        }
    }
    Ok(())
}

/// Decision rule for states where nothing is decided: lowest feasible action.
fn default_rule(mdp: &Mdp) -> Vec<u32> {
    (0..mdp.n_states()).map(|x| mdp.actions.feasible(x)[0]).collect()
}

fn time_ordered(mdp: &Mdp, mut sweeps: Vec<(Vec<u32>, Vec<bool>)>) -> (MarkovPolicy, Vec<Vec<bool>>) {
    if sweeps.is_empty() {
        let n = mdp.n_states();
        return (MarkovPolicy::TimeVarying(vec![default_rule(mdp)]), vec![vec![true; n]]);
    }
    // the last sweep decides the first step
    sweeps.reverse();
    let (rules, ties) = sweeps.into_iter().unzip();
    (MarkovPolicy::TimeVarying(rules), ties)
}

/// `n`-step constrained reachability from `1_G`.
pub fn reach_bounded(mdp: &Mdp, spec: &ReachSpec, n: u32) -> Result<ValueResult, ReachError> {
    spec.check(mdp)?;
    let mut f = spec.goal.indicator();
    let mut sweeps = Vec::with_capacity(n as usize);
    let mut residuals = Vec::with_capacity(n as usize);
    for k in 0..n as usize {
        let b = dp_step(mdp, spec, &f)?;
        check_monotone(&f, &b.values, true, k + 1)?;
        residuals.push(sup_diff(&f, &b.values));
        sweeps.push((b.argbest.clone(), indifference(&b, &spec.safe)));
        f = b.values;
    }
    let (policy, indifferent) = time_ordered(mdp, sweeps);
    Ok(ValueResult {
        values: f,
        policy,
        indifferent,
        iterations: n as usize,
        residuals,
        error_bound: Some(0.0),
        status: Status::Exact,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnboundedOptions {
    pub tol: f64,
    pub max_iters: usize,
    /// Run the absorbence analysis of the safe set to certify the result.
    pub certify: bool,
    pub cap: usize,
}

impl Default for UnboundedOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 100_000,
            certify: true,
            cap: DEFAULT_ABSORBING_CAP,
        }
    }
}

fn certificate(
    mdp: &Mdp,
    safe: &StateSet,
    opts: &UnboundedOptions,
) -> Result<Option<AbsorbenceReport>, ReachError> {
    if !opts.certify {
        return Ok(None);
    }
    let report = absorbing_analysis(mdp, safe, opts.cap)?;
    Ok((report.verdict == AbsorbenceVerdict::Contractive).then_some(report))
}

/// Unbounded constrained reachability by value iteration from `1_G`.
pub fn reach_unbounded(
    mdp: &Mdp,
    spec: &ReachSpec,
    opts: UnboundedOptions,
) -> Result<ValueResult, ReachError> {
    spec.check(mdp)?;
    if !(opts.tol > 0.0) {
        return Err(ReachError::BadTolerance(opts.tol));
    }
    let mut f = spec.goal.indicator();
    let mut residuals = Vec::new();
    let mut last = None;
    let mut converged = false;
    for k in 0..opts.max_iters {
        let b = dp_step(mdp, spec, &f)?;
        check_monotone(&f, &b.values, true, k + 1)?;
        let r = sup_diff(&f, &b.values);
        residuals.push(r);
        f = b.values.clone();
        last = Some(b);
        if r < opts.tol {
            converged = true;
            break;
        }
    }
    let last = match last {
        Some(b) => b,
        None => dp_step(mdp, spec, &f)?,
    };
    let iterations = residuals.len();
    let cert = certificate(mdp, &spec.safe, &opts)?;
    let error_bound = match &cert {
        Some(report) => Some(contraction_error_bound(report, iterations)?),
        None => None,
    };
    let status = if !converged {
        Status::Diverged
    } else if spec.direction == Direction::Min && cert.is_none() {
        Status::LowerEstimate
    } else {
        Status::Converged
    };
    Ok(ValueResult {
        values: f,
        indifferent: vec![indifference(&last, &spec.safe)],
        policy: MarkovPolicy::Stationary(last.argbest),
        iterations,
        residuals,
        error_bound,
        status,
    })
}

fn safety_step(mdp: &Mdp, safe: &StateSet, dir: Direction, f: &[f64]) -> Result<Backup, ReachError> {
    let mut b = optimise(mdp, f, dir, Some(safe))?;
    for x in 0..mdp.n_states() {
        b.values[x] = if safe.contains(x) { clamp01(b.values[x]) } else { 0.0 };
    }
    Ok(b)
}

fn check_set(mdp: &Mdp, set: &StateSet) -> Result<(), ReachError> {
    if set.universe() != mdp.n_states() {
        return Err(ReachError::SetSize {
            expected: mdp.n_states(),
            got: set.universe(),
        });
    }
    Ok(())
}

/// Probability of staying in `safe` for `n` steps, iterating from `1_S`.
pub fn safety_bounded(mdp: &Mdp, safe: &StateSet, dir: Direction, n: u32) -> Result<ValueResult, ReachError> {
    check_set(mdp, safe)?;
    let mut f = safe.indicator();
    let mut sweeps = Vec::with_capacity(n as usize);
    let mut residuals = Vec::with_capacity(n as usize);
    for k in 0..n as usize {
        let b = safety_step(mdp, safe, dir, &f)?;
        check_monotone(&f, &b.values, false, k + 1)?;
        residuals.push(sup_diff(&f, &b.values));
        sweeps.push((b.argbest.clone(), indifference(&b, safe)));
        f = b.values;
    }
    let (policy, indifferent) = time_ordered(mdp, sweeps);
    Ok(ValueResult {
        values: f,
        policy,
        indifferent,
        iterations: n as usize,
        residuals,
        error_bound: Some(0.0),
        status: Status::Exact,
    })
}

/// Probability of staying in `safe` forever; the iterates decrease to the value.
pub fn safety_unbounded(
    mdp: &Mdp,
    safe: &StateSet,
    dir: Direction,
    opts: UnboundedOptions,
) -> Result<ValueResult, ReachError> {
    check_set(mdp, safe)?;
    if !(opts.tol > 0.0) {
        return Err(ReachError::BadTolerance(opts.tol));
    }
    let mut f = safe.indicator();
    let mut residuals = Vec::new();
    let mut last = None;
    let mut converged = false;
    for k in 0..opts.max_iters {
        let b = safety_step(mdp, safe, dir, &f)?;
        check_monotone(&f, &b.values, false, k + 1)?;
        let r = sup_diff(&f, &b.values);
        residuals.push(r);
        f = b.values.clone();
        last = Some(b);
        if r < opts.tol {
            converged = true;
            break;
        }
    }
    let last = match last {
        Some(b) => b,
        None => safety_step(mdp, safe, dir, &f)?,
    };
    let iterations = residuals.len();
    let cert = certificate(mdp, safe, &opts)?;
    let error_bound = match &cert {
        Some(report) => Some(contraction_error_bound(report, iterations)?),
        None => None,
    };
    Ok(ValueResult {
        values: f,
        indifferent: vec![indifference(&last, safe)],
        policy: MarkovPolicy::Stationary(last.argbest),
        iterations,
        residuals,
        error_bound,
        status: if converged { Status::Converged } else { Status::Diverged },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::MdpBuilder;

    fn chain() -> Mdp {
        let mut b = MdpBuilder::new(2, 1);
        b.set_row(0, 0, &[(0, 0.7), (1, 0.3)]).unwrap();
        b.set_row(1, 0, &[(1, 1.0)]).unwrap();
        b.build().unwrap()
    }

    fn chain_spec(dir: Direction) -> ReachSpec {
        ReachSpec::new(
            StateSet::from_indices(2, [0]),
            StateSet::from_indices(2, [1]),
            dir,
        )
        .unwrap()
    }

    #[test]
    fn two_steps_of_the_chain() {
        let m = chain();
        let r = reach_bounded(&m, &chain_spec(Direction::Max), 2).unwrap();
        // paths s->g and s->s->g
        let oracle = 0.3 + 0.7 * 0.3;
        assert!((r.values[0] - oracle).abs() < 1e-15);
        assert_eq!(r.values[1], 1.0);
        assert_eq!(r.status, Status::Exact);
    }

    #[test]
    fn horizon_zero_and_empty_safe_set() {
        let m = chain();
        let r = reach_bounded(&m, &chain_spec(Direction::Max), 0).unwrap();
        assert_eq!(r.values, vec![0.0, 1.0]);
        let spec = ReachSpec::new(StateSet::empty(2), StateSet::from_indices(2, [1]), Direction::Max).unwrap();
        for n in 0..4 {
            assert_eq!(reach_bounded(&m, &spec, n).unwrap().values, vec![0.0, 1.0]);
        }
    }

    #[test]
    fn unbounded_chain_reaches_one() {
        let m = chain();
        let r = reach_unbounded(&m, &chain_spec(Direction::Max), UnboundedOptions::default()).unwrap();
        let closed_form = 0.3 / (1.0 - 0.7);
        assert!((r.values[0] - closed_form).abs() < 1e-8);
        assert_eq!(r.status, Status::Converged);
        let bound = r.error_bound.unwrap();
        assert!((1.0 - r.values[0]) <= bound + 1e-15);
    }

    #[test]
    fn min_without_certificate_is_a_lower_estimate() {
        let m = chain();
        let opts = UnboundedOptions {
            certify: false,
            ..Default::default()
        };
        let r = reach_unbounded(&m, &chain_spec(Direction::Min), opts).unwrap();
        assert_eq!(r.status, Status::LowerEstimate);
        assert_eq!(r.error_bound, None);
        let r = reach_unbounded(&m, &chain_spec(Direction::Min), UnboundedOptions::default()).unwrap();
        assert_eq!(r.status, Status::Converged);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let m = chain();
        let opts = UnboundedOptions {
            max_iters: 3,
            ..Default::default()
        };
        let r = reach_unbounded(&m, &chain_spec(Direction::Max), opts).unwrap();
        assert_eq!(r.status, Status::Diverged);
        assert_eq!(r.residuals.len(), 3);
    }

    #[test]
    fn survival_of_a_leaky_state() {
        let m = chain();
        let s = StateSet::from_indices(2, [0]);
        for n in 0..6u32 {
            let r = safety_bounded(&m, &s, Direction::Max, n).unwrap();
            assert!((r.values[0] - 0.7f64.powi(n as i32)).abs() < 1e-15);
            assert_eq!(r.values[1], 0.0);
        }
        let mut b = MdpBuilder::new(1, 1);
        b.set_row(0, 0, &[(0, 1.0)]).unwrap();
        let lone = b.build().unwrap();
        let r = safety_bounded(&lone, &StateSet::full(1), Direction::Min, 9).unwrap();
        assert_eq!(r.values, vec![1.0]);
    }

    #[test]
    fn goal_overlap_is_normalised() {
        let spec = ReachSpec::new(StateSet::full(3), StateSet::from_indices(3, [2]), Direction::Max).unwrap();
        assert_eq!(spec.safe().iter().collect::<Vec<_>>(), vec![0, 1]);
        assert!(spec.unsafe_set().is_empty());
    }
}
