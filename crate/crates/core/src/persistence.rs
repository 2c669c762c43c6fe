//! Persistence (eventually always `S`) and repeated reachability.
//!
//! The max-persistence value is the limit of `T*^n V` where `V` is the
//! max-safety value of `S`. Since `V = 1_S T* V <= T* V`, the sweeps increase
//! point-wise towards the limit.

use thiserror::Error;

use crate::automata::Acceptance;
use crate::mdp::{bellman_max, MarkovPolicy, Mdp, ModelError, StateSet};
use crate::product::ProductModel;
use crate::reach::{
    absorbing_chain, reach_unbounded, safety_unbounded, verify_excessive, CertMode, Direction,
    ExcessiveCertificate, ReachError, ReachSpec, Status, UnboundedOptions, ValueResult,
};

/// Growth of a phase-2 sweep below `-MONOTONE_SLACK` aborts the run. Phase 1
/// stops above the exact safety value by at most its last residual, so that
/// residual is added to the slack.
pub const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum PersistenceError {
    #[error(transparent)]
    Reach(#[from] ReachError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("phase-2 sweep {iter} decreased state {state} by {delta:e}")]
    Monotonicity { iter: usize, state: usize, delta: f64 },
    #[error("expected Büchi acceptance, got {0}")]
    NotBuchi(&'static str),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("epsilon must lie in (0, 1], got {0}")]
    BadEpsilon(f64),
    #[error("excessive certificate rejected: {0}")]
    CertificateRejected(String),
    #[error("truncation needs a certificate for a fixed decision rule")]
    SelectorRequired,
    #[error("state {0} of the exclusion set lies in {{g <= 1}}")]
    ExclusionMeetsSublevel(usize),
    #[error("absorbing parts of the exclusion complement and of S differ at state {0}")]
    SimplicityMismatch(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistenceOptions {
    pub tol: f64,
    /// Sweep budget of each phase.
    pub phase_cap: usize,
}

impl Default for PersistenceOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            phase_cap: 10_000,
        }
    }
}

impl PersistenceOptions {
    fn reach_options(&self) -> UnboundedOptions {
        UnboundedOptions {
            tol: self.tol,
            max_iters: self.phase_cap,
            certify: false,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceResult {
    /// Phase-2 result; its residuals are the phase-2 residuals.
    pub value: ValueResult,
    /// Phase-1 max-safety result.
    pub safety: ValueResult,
    /// `|T* v - v|` at the returned vector.
    pub invariance_residual: f64,
}

impl PersistenceResult {
    /// `(phase, iteration, residual)` rows of both phases.
    pub fn phase_log(&self) -> Vec<(u8, usize, f64)> {
        let one = self.safety.residuals.iter().enumerate().map(|(i, &r)| (1u8, i + 1, r));
        let two = self.value.residuals.iter().enumerate().map(|(i, &r)| (2u8, i + 1, r));
        one.chain(two).collect()
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Max-probability of eventually staying in `safe` forever.
pub fn persistence_value(
    mdp: &Mdp,
    safe: &StateSet,
    opts: PersistenceOptions,
) -> Result<PersistenceResult, PersistenceError> {
    if !(opts.tol > 0.0) {
        return Err(PersistenceError::BadTolerance(opts.tol));
    }
    let safety = safety_unbounded(mdp, safe, Direction::Max, opts.reach_options())?;
    let mut v = safety.values.clone();
    let slack = MONOTONE_SLACK + safety.residuals.last().copied().unwrap_or(0.0);
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut last = bellman_max(mdp, &v, None)?;
    for iter in 1..=opts.phase_cap {
        let next: Vec<f64> = last.values.iter().map(|p| p.clamp(0.0, 1.0)).collect();
        for (x, (&p, &n)) in v.iter().zip(&next).enumerate() {
            if p - n > slack {
                return Err(PersistenceError::Monotonicity { iter, state: x, delta: p - n });
            }
        }
        let r = sup_diff(&v, &next);
        residuals.push(r);
        v = next;
        last = bellman_max(mdp, &v, None)?;
        if r < opts.tol {
            converged = true;
            break;
        }
    }
    let invariance_residual = sup_diff(&last.values, &v);
    let status = match (safety.status, converged) {
        (Status::Converged, true) => Status::Converged,
        _ => Status::Diverged,
    };
    let indifferent = vec![last.spread.iter().map(|&s| s <= crate::reach::TIE_TOLERANCE).collect()];
    Ok(PersistenceResult {
        value: ValueResult {
            values: v,
            policy: MarkovPolicy::Stationary(last.argbest),
            indifferent,
            iterations: residuals.len(),
            residuals,
            error_bound: None,
            status,
        },
        safety,
        invariance_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum BuchiMode {
    /// Probability under a fixed decision rule; exact by complementation.
    Evaluate(Vec<u32>),
    /// Bounds on the max-probability over Markov policies.
    Optimize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuchiResult {
    /// Equal to `upper` when evaluating a fixed rule.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub status: Status,
}

impl BuchiResult {
    pub fn width(&self) -> f64 {
        sup_diff(&self.lower, &self.upper)
    }
}

fn combine(a: Status, b: Status) -> Status {
    if a == Status::Converged && b == Status::Converged {
        Status::Converged
    } else {
        Status::Diverged
    }
}

/// Probability of visiting `finals` infinitely often.
///
/// Under a fixed rule it is `1 - P(eventually always outside F)`. Optimising
/// does not commute with the complement, so the optimal value is bracketed by
/// `max(M*(eventually always F), 1 - M*(eventually always not F))` from
/// below and by `M*(eventually F)` from above.
pub fn buchi_on_sets(
    mdp: &Mdp,
    finals: &StateSet,
    mode: &BuchiMode,
    opts: PersistenceOptions,
) -> Result<BuchiResult, PersistenceError> {
    let outside = finals.complement();
    match mode {
        BuchiMode::Evaluate(rule) => {
            let chain = mdp.under_policy(rule)?;
            let p = persistence_value(&chain, &outside, opts)?;
            let v: Vec<f64> = p.value.values.iter().map(|x| 1.0 - x).collect();
            Ok(BuchiResult {
                lower: v.clone(),
                upper: v,
                status: p.value.status,
            })
        }
        BuchiMode::Optimize => {
            let avoid = persistence_value(mdp, &outside, opts)?;
            let stay = persistence_value(mdp, finals, opts)?;
            let spec = ReachSpec::new(StateSet::full(mdp.n_states()), finals.clone(), Direction::Max)?;
            let reach = reach_unbounded(mdp, &spec, opts.reach_options())?;
            let lower = avoid
                .value
                .values
                .iter()
                .zip(&stay.value.values)
                .map(|(a, s)| (1.0 - a).max(*s))
                .collect();
            let status = combine(combine(avoid.value.status, stay.value.status), reach.status);
            Ok(BuchiResult {
                lower,
                upper: reach.values,
                status,
            })
        }
    }
}

/// Repeated reachability of the Büchi condition of a product model.
pub fn buchi_value(
    product: &ProductModel,
    mode: &BuchiMode,
    opts: PersistenceOptions,
) -> Result<BuchiResult, PersistenceError> {
    let acc = product.automaton.acceptance();
    let Acceptance::Buchi(f) = acc else {
        return Err(PersistenceError::NotBuchi(acc.kind()));
    };
    let qn = product.q_count();
    let finals = StateSet::from_predicate(product.mdp.n_states(), |s| f.contains(&(s % qn)));
    buchi_on_sets(&product.mdp, &finals, mode, opts)
}

/// Persistence through the reach problem `A U B` with `B = {g <= eps}` and
/// `A` the complement of `B` and the exclusion set `exclusion`. The reported
/// bound is `max(eps, exclusion_bound)`, where `exclusion_bound` must bound
/// the persistence value on the exclusion set.
pub fn persistence_truncated(
    mdp: &Mdp,
    safe: &StateSet,
    cert: &ExcessiveCertificate,
    exclusion: &StateSet,
    eps: f64,
    exclusion_bound: f64,
    opts: PersistenceOptions,
) -> Result<ValueResult, PersistenceError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(PersistenceError::BadEpsilon(eps));
    }
    if !matches!(cert.mode, CertMode::Selector(_)) {
        return Err(PersistenceError::SelectorRequired);
    }
    let verdict = verify_excessive(mdp, cert);
    if !verdict.passed {
        return Err(PersistenceError::CertificateRejected(verdict.reason.unwrap_or_default()));
    }
    let sub = cert.sublevel(1.0);
    if let Some(x) = exclusion.intersection(&sub).iter().next() {
        return Err(PersistenceError::ExclusionMeetsSublevel(x));
    }
    let n = mdp.n_states();
    let (e_chain, _) = absorbing_chain(mdp, &exclusion.complement(), n + 1);
    let (s_chain, _) = absorbing_chain(mdp, safe, n + 1);
    let (e_lim, s_lim) = (e_chain.last().unwrap(), s_chain.last().unwrap());
    if let Some(x) = (0..n).find(|&x| e_lim.contains(x) != s_lim.contains(x)) {
        return Err(PersistenceError::SimplicityMismatch(x));
    }
    log::info!("exclusion-set persistence bound {exclusion_bound} taken as given");

    let goal = cert.sublevel(eps);
    let avoid = goal.union(exclusion).complement();
    let spec = ReachSpec::new(avoid, goal, Direction::Max)?;
    let mut result = reach_unbounded(
        mdp,
        &spec,
        UnboundedOptions {
            certify: true,
            ..opts.reach_options()
        },
    )?;
    result.error_bound = Some(eps.max(exclusion_bound));
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::MdpBuilder;

    fn fork() -> Mdp {
        let mut b = MdpBuilder::new(3, 1);
        b.set_row(0, 0, &[(1, 0.5), (2, 0.5)]).unwrap();
        b.set_row(1, 0, &[(1, 1.0)]).unwrap();
        b.set_row(2, 0, &[(2, 1.0)]).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn fork_into_safe_trap() {
        let m = fork();
        let s = StateSet::from_indices(3, [1]);
        let r = persistence_value(&m, &s, PersistenceOptions::default()).unwrap();
        assert_eq!(r.safety.values, vec![0.0, 1.0, 0.0]);
        // two equally likely paths, one of them stays in S
        assert!((r.value.values[0] - 0.5).abs() < 1e-9);
        assert_eq!(r.value.status, Status::Converged);
        assert!(r.invariance_residual < 1e-9);
    }

    #[test]
    fn zero_safety_means_zero_persistence() {
        let m = fork();
        let s = StateSet::from_indices(3, [0]);
        let r = persistence_value(&m, &s, PersistenceOptions::default()).unwrap();
        assert!(r.safety.values.iter().all(|&v| v == 0.0));
        assert!(r.value.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn buchi_on_absorbing_and_empty_sets() {
        let m = fork();
        let f = StateSet::from_indices(3, [1]);
        let r = buchi_on_sets(&m, &f, &BuchiMode::Optimize, PersistenceOptions::default()).unwrap();
        assert!(r.width() < 1e-9);
        assert!((r.lower[0] - 0.5).abs() < 1e-9);
        let r = buchi_on_sets(&m, &StateSet::empty(3), &BuchiMode::Optimize, PersistenceOptions::default()).unwrap();
        assert!(r.upper.iter().all(|&v| v == 0.0));
        let r = buchi_on_sets(&m, &f, &BuchiMode::Evaluate(vec![0; 3]), PersistenceOptions::default()).unwrap();
        assert!((r.lower[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn bad_inputs() {
        let m = fork();
        let s = StateSet::from_indices(3, [1]);
        let opts = PersistenceOptions { tol: 0.0, ..Default::default() };
        assert_eq!(persistence_value(&m, &s, opts), Err(PersistenceError::BadTolerance(0.0)));
        let cert = ExcessiveCertificate {
            g: vec![2.0, 0.0, 2.0],
            mode: CertMode::Uniform,
            target: StateSet::full(3),
        };
        let e = StateSet::empty(3);
        let run = |c: &ExcessiveCertificate, e: &StateSet, eps| {
            persistence_truncated(&m, &s, c, e, eps, 0.0, PersistenceOptions::default())
        };
        assert_eq!(run(&cert, &e, 0.5), Err(PersistenceError::SelectorRequired));
        let cert = ExcessiveCertificate {
            mode: CertMode::Selector(vec![0; 3]),
            ..cert
        };
        assert_eq!(run(&cert, &e, 1.5), Err(PersistenceError::BadEpsilon(1.5)));
        assert_eq!(
            run(&cert, &StateSet::from_indices(3, [1]), 0.5),
            Err(PersistenceError::ExclusionMeetsSublevel(1))
        );
        let r = run(&cert, &StateSet::from_indices(3, [2]), 1.0).unwrap();
        assert!((r.values[0] - 0.5).abs() < 1e-12);
        assert_eq!(r.error_bound, Some(1.0));
    }
}
