use super::{safety_step, Direction, ReachError};
use crate::mdp::{Mdp, StateSet};

/// A row keeps a set when it puts at least `1 - MASS_TOLERANCE` on it.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Default limit on chain steps and on the search for `m(S)`.
pub const DEFAULT_ABSORBING_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbsorbenceVerdict {
    /// No weakly absorbing subset: the safe-set operator is a contraction.
    Contractive,
    NonContractive,
    CapReached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbenceReport {
    /// `S_0 = S, S_1, ...` up to and including the first repeated set.
    pub chain: Vec<StateSet>,
    /// Limit of the chain (the largest weakly absorbing subset).
    pub limit: StateSet,
    /// First `n` with `beta_n < 1`, found from safety sweeps.
    pub m: Option<usize>,
    /// `beta_m = max over S of the m-step max-safety value`.
    pub beta: Option<f64>,
    pub verdict: AbsorbenceVerdict,
    /// Whether the empty-limit and finite-`m` characterisations agree.
    pub consistent: bool,
}

/// Shrink `S` to the states that can keep the chain inside the previous set
/// with probability one, and independently search for the first horizon at
/// which every state of `S` leaks mass.
pub fn absorbing_analysis(mdp: &Mdp, safe: &StateSet, cap: usize) -> Result<AbsorbenceReport, ReachError> {
    if safe.universe() != mdp.n_states() {
        return Err(ReachError::SetSize {
            expected: mdp.n_states(),
            got: safe.universe(),
        });
    }
    let cap = cap.max(1);
    let (chain, stabilized) = absorbing_chain(mdp, safe, cap);
    let limit = chain.last().unwrap().clone();

    // beta_n = sup over S of V_n, the n-step max-safety value
    let mut m = None;
    let mut beta = None;
    let mut v = safe.indicator();
    let sup = |v: &[f64]| safe.iter().map(|x| v[x]).fold(0.0, f64::max);
    // with a nonempty limit the values on it stay at one; do not search past
    // the chain in that case
    let search = if limit.is_empty() { cap } else { chain.len() };
    for n in 0..=search {
        let b = sup(&v);
        if b < 1.0 - MASS_TOLERANCE {
            m = Some(n);
            beta = Some(b);
            break;
        }
        let next = safety_step(mdp, safe, Direction::Max, &v)?.values;
        if next == v {
            // fixed point with value one somewhere: no finite m
            break;
        }
        v = next;
    }

    let verdict = if !stabilized {
        AbsorbenceVerdict::CapReached
    } else if limit.is_empty() {
        AbsorbenceVerdict::Contractive
    } else {
        AbsorbenceVerdict::NonContractive
    };
    let consistent = !stabilized || limit.is_empty() == m.is_some();
    if !consistent {
        log::warn!("absorbence chain and beta search disagree");
    }
    Ok(AbsorbenceReport {
        chain,
        limit,
        m,
        beta,
        verdict,
        consistent,
    })
}

/// `S_0 = S`, `S_{n+1}` = states of `S` with an action keeping mass one on
/// `S_n`. Stops at the first repeat or after `cap` steps; the flag tells which.
pub fn absorbing_chain(mdp: &Mdp, safe: &StateSet, cap: usize) -> (Vec<StateSet>, bool) {
    let mut chain = vec![safe.clone()];
    while chain.len() <= cap {
        let cur = chain.last().unwrap();
        let mass = mdp.sweep(&cur.indicator());
        let next = StateSet::from_predicate(mdp.n_states(), |x| {
            safe.contains(x) && {
                let off = mdp.actions.offset(x);
                (0..mdp.actions.feasible(x).len()).any(|k| mass[off + k] >= 1.0 - MASS_TOLERANCE)
            }
        });
        let same = &next == cur;
        chain.push(next);
        if same {
            return (chain, true);
        }
    }
    (chain, false)
}

/// `beta^floor(n / m)`: distance bound between the `n`-sweep iterate and the
/// unbounded value on the safe set.
pub fn contraction_error_bound(report: &AbsorbenceReport, n: usize) -> Result<f64, ReachError> {
    if report.verdict != AbsorbenceVerdict::Contractive {
        return Err(ReachError::NotContractive(report.verdict));
    }
    match (report.m, report.beta) {
        (Some(0), _) => Ok(0.0),
        (Some(m), Some(beta)) => Ok(beta.powi((n / m) as i32)),
        _ => Err(ReachError::NotContractive(report.verdict)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::MdpBuilder;

    #[test]
    fn self_loop_is_absorbing() {
        let mut b = MdpBuilder::new(3, 1);
        b.set_row(0, 0, &[(0, 1.0)]).unwrap();
        b.set_row(1, 0, &[(0, 0.5), (2, 0.5)]).unwrap();
        b.set_row(2, 0, &[(2, 1.0)]).unwrap();
        let m = b.build().unwrap();
        let r = absorbing_analysis(&m, &StateSet::from_indices(3, [0, 1]), 100).unwrap();
        assert!(r.limit.contains(0));
        assert!(!r.limit.contains(1));
        assert_eq!(r.verdict, AbsorbenceVerdict::NonContractive);
        assert_eq!(r.m, None);
        assert!(r.consistent);
        assert!(contraction_error_bound(&r, 5).is_err());
    }

    #[test]
    fn leaky_rows_give_m_one() {
        let mut b = MdpBuilder::new(3, 2);
        b.set_row(0, 0, &[(0, 0.5), (1, 0.4), (2, 0.1)]).unwrap();
        b.set_row(0, 1, &[(1, 0.8), (2, 0.2)]).unwrap();
        b.set_row(1, 0, &[(0, 0.9), (2, 0.1)]).unwrap();
        b.set_row(2, 0, &[(2, 1.0)]).unwrap();
        let m = b.build().unwrap();
        let s = StateSet::from_indices(3, [0, 1]);
        let r = absorbing_analysis(&m, &s, 100).unwrap();
        assert!(r.chain[1].is_empty());
        assert_eq!(r.m, Some(1));
        // row inspection: best stay-mass over S
        let oracle = [0.9f64, 0.8, 0.9].into_iter().fold(0.0, f64::max);
        assert!((r.beta.unwrap() - oracle).abs() < 1e-15);
        assert!(r.beta.unwrap() <= 0.9);
        assert_eq!(r.verdict, AbsorbenceVerdict::Contractive);
    }

    #[test]
    fn empty_safe_set() {
        let mut b = MdpBuilder::new(1, 1);
        b.set_row(0, 0, &[(0, 1.0)]).unwrap();
        let m = b.build().unwrap();
        let r = absorbing_analysis(&m, &StateSet::empty(1), 10).unwrap();
        assert!(r.limit.is_empty());
        assert_eq!(r.m, Some(0));
        assert_eq!(r.beta, Some(0.0));
        assert_eq!(contraction_error_bound(&r, 3).unwrap(), 0.0);
    }

    #[test]
    fn bound_powers() {
        let report = AbsorbenceReport {
            chain: vec![],
            limit: StateSet::empty(1),
            m: Some(1),
            beta: Some(0.7),
            verdict: AbsorbenceVerdict::Contractive,
            consistent: true,
        };
        assert!((contraction_error_bound(&report, 10).unwrap() - 0.0282475249).abs() < 1e-12);
        let slow = AbsorbenceReport {
            m: Some(4),
            ..report
        };
        assert_eq!(contraction_error_bound(&slow, 3).unwrap(), 1.0);
    }
}
