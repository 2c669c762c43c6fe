use super::policy::check_rule;
use super::{Mdp, ModelError, StateSet};

/// Result of one optimising backup.
#[derive(Debug, Clone, PartialEq)]
pub struct Backup {
    pub values: Vec<f64>,
    /// Optimising action index per state (lowest index among ties).
    pub argbest: Vec<u32>,
    /// Largest minus smallest action value per state.
    pub spread: Vec<f64>,
}

fn masked(mdp: &Mdp, f: &[f64], restrict_to: Option<&StateSet>) -> Result<Vec<f64>, ModelError> {
    mdp.check_len(f)?;
    Ok(match restrict_to {
        None => f.to_vec(),
        Some(set) => {
            if set.universe() != f.len() {
                return Err(ModelError::LengthMismatch {
                    expected: f.len(),
                    got: set.universe(),
                });
            }
            f.iter()
                .zip(set.mask())
                .map(|(&v, &inside)| if inside { v } else { 0.0 })
                .collect()
        }
    })
}

fn optimise(
    mdp: &Mdp,
    f: &[f64],
    restrict_to: Option<&StateSet>,
    better: impl Fn(f64, f64) -> bool,
) -> Result<Backup, ModelError> {
    let g = masked(mdp, f, restrict_to)?;
    let q = mdp.sweep(&g);
    let n = mdp.n_states();
    let mut values = Vec::with_capacity(n);
    let mut argbest = Vec::with_capacity(n);
    let mut spread = Vec::with_capacity(n);
    for x in 0..n {
        let feasible = mdp.actions.feasible(x);
        let off = mdp.actions.offset(x);
        let (mut best, mut arg) = (q[off], feasible[0]);
        let (mut lo, mut hi) = (q[off], q[off]);
        for (k, &a) in feasible.iter().enumerate().skip(1) {
            let v = q[off + k];
            // feasible lists ascend, so strict improvement keeps the lowest index
            if better(v, best) {
                best = v;
                arg = a;
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        values.push(best);
        argbest.push(arg);
        spread.push(hi - lo);
    }
    Ok(Backup {
        values,
        argbest,
        spread,
    })
}

/// `max_u sum_x' T(x'|x,u) f(x')`, integrating only over `restrict_to` when given.
pub fn bellman_max(mdp: &Mdp, f: &[f64], restrict_to: Option<&StateSet>) -> Result<Backup, ModelError> {
    optimise(mdp, f, restrict_to, |v, best| v > best)
}

/// `min_u sum_x' T(x'|x,u) f(x')`, integrating only over `restrict_to` when given.
pub fn bellman_min(mdp: &Mdp, f: &[f64], restrict_to: Option<&StateSet>) -> Result<Backup, ModelError> {
    optimise(mdp, f, restrict_to, |v, best| v < best)
}

/// Expectation of `f` under the decision rule `rule` (action index per state).
pub fn bellman_selector(
    mdp: &Mdp,
    f: &[f64],
    rule: &[u32],
    restrict_to: Option<&StateSet>,
) -> Result<Vec<f64>, ModelError> {
    check_rule(&mdp.actions, rule)?;
    let g = masked(mdp, f, restrict_to)?;
    let q = mdp.sweep(&g);
    Ok(rule
        .iter()
        .enumerate()
        .map(|(x, &a)| {
            let k = mdp.actions.position(x, a as usize).expect("checked feasible");
            q[mdp.actions.offset(x) + k]
        })
        .collect())
}

/// `sum_x alpha(x) v(x)` after checking that `alpha` is a distribution.
pub fn value_under_initial_distribution(alpha: &[f64], v: &[f64]) -> Result<f64, ModelError> {
    if alpha.len() != v.len() {
        return Err(ModelError::LengthMismatch {
            expected: v.len(),
            got: alpha.len(),
        });
    }
    if let Some(p) = alpha.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(ModelError::NotADistribution(format!("entry {p}")));
    }
    let total: f64 = alpha.iter().sum();
    if (total - 1.0).abs() > super::ROW_SUM_TOLERANCE {
        return Err(ModelError::NotADistribution(format!("sums to {total}")));
    }
    Ok(alpha.iter().zip(v).map(|(a, b)| a * b).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::MdpBuilder;

    fn two_state_chain() -> Mdp {
        let mut b = MdpBuilder::new(2, 1);
        b.set_row(0, 0, &[(0, 0.7), (1, 0.3)]).unwrap();
        b.set_row(1, 0, &[(1, 1.0)]).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn hitting_probability_of_chain() {
        let m = two_state_chain();
        let g = [0.0, 1.0];
        // one-step path enumeration: only s -> g contributes
        let oracle = 0.3 * 1.0 + 0.7 * 0.0;
        let b = bellman_max(&m, &g, None).unwrap();
        assert!((b.values[0] - oracle).abs() < 1e-15);
        let s = bellman_selector(&m, &g, &[0, 0], None).unwrap();
        assert!((s[0] - oracle).abs() < 1e-15);
        assert_eq!(bellman_min(&m, &g, None).unwrap().values, b.values);
    }

    #[test]
    fn min_over_two_self_loops() {
        let mut b = MdpBuilder::new(2, 2);
        b.set_row(0, 0, &[(0, 1.0)]).unwrap();
        b.set_row(0, 1, &[(0, 0.6), (1, 0.4)]).unwrap();
        b.set_row(1, 0, &[(1, 1.0)]).unwrap();
        let m = b.build().unwrap();
        let only = StateSet::from_indices(2, [0]);
        let oracle = [1.0f64, 0.6].into_iter().fold(f64::INFINITY, f64::min);
        let out = bellman_min(&m, &[1.0, 1.0], Some(&only)).unwrap();
        assert!((out.values[0] - oracle).abs() < 1e-15);
        assert_eq!(out.argbest[0], 1);
        assert!((out.spread[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn ties_go_to_lowest_action() {
        let mut b = MdpBuilder::new(1, 3);
        for a in 0..3 {
            b.set_row(0, a, &[(0, 1.0)]).unwrap();
        }
        let m = b.build().unwrap();
        assert_eq!(bellman_max(&m, &[0.5], None).unwrap().argbest, vec![0]);
        assert_eq!(bellman_min(&m, &[0.5], None).unwrap().argbest, vec![0]);
    }

    #[test]
    fn errors() {
        let m = two_state_chain();
        assert!(bellman_max(&m, &[1.0], None).is_err());
        assert!(bellman_selector(&m, &[1.0, 1.0], &[0, 1], None).is_err());
        assert_eq!(value_under_initial_distribution(&[0.5, 0.5], &[0.0, 1.0]).unwrap(), 0.5);
        assert_eq!(value_under_initial_distribution(&[0.0, 1.0], &[0.2, 0.7]).unwrap(), 0.7);
        assert!(value_under_initial_distribution(&[0.5, 0.6], &[0.0, 1.0]).is_err());
        assert!(value_under_initial_distribution(&[1.5, -0.5], &[0.0, 1.0]).is_err());
    }
}
