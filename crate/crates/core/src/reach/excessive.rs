use super::{
    absorbing_analysis, absorbing_chain, contraction_error_bound, reach_unbounded, AbsorbenceVerdict, ReachError,
    ReachSpec, UnboundedOptions, ValueResult,
};
use crate::mdp::{MarkovPolicy, Mdp, StateSet};

/// Drift violations up to this size are accepted.
pub const DRIFT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum CertMode {
    /// `T g <= g` for every feasible action.
    Uniform,
    /// `T g <= g` under the given decision rule only.
    Selector(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcessiveCertificate {
    pub g: Vec<f64>,
    pub mode: CertMode,
    /// `{g <= 1}` must lie inside this set.
    pub target: StateSet,
}

impl ExcessiveCertificate {
    pub fn sublevel(&self, level: f64) -> StateSet {
        StateSet::from_predicate(self.g.len(), |x| self.g[x] <= level)
    }

    pub fn strict_sublevel(&self, level: f64) -> StateSet {
        StateSet::from_predicate(self.g.len(), |x| self.g[x] < level)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcessiveVerdict {
    pub passed: bool,
    /// State with the largest `T g - g` over the unit sublevel set.
    pub worst_state: Option<usize>,
    pub worst_violation: f64,
    pub sublevel_in_target: bool,
    /// A sublevel state outside the target.
    pub stray_state: Option<usize>,
    /// Whether the absorbing part of `{g <= 1}` lies in `{g = 0}`.
    pub absorbing_in_zero_set: bool,
    /// `{g <= 1}` is empty, so the drift check is vacuous.
    pub degenerate: bool,
    /// Openness of the sublevel set has no meaning on a grid; never checked.
    pub open_set_checked: bool,
    pub reason: Option<String>,
}

impl ExcessiveVerdict {
    fn rejected(reason: String) -> Self {
        Self {
            passed: false,
            worst_state: None,
            worst_violation: f64::NAN,
            sublevel_in_target: false,
            stray_state: None,
            absorbing_in_zero_set: false,
            degenerate: false,
            open_set_checked: false,
            reason: Some(reason),
        }
    }
}

pub fn verify_excessive(mdp: &Mdp, cert: &ExcessiveCertificate) -> ExcessiveVerdict {
    let n = mdp.n_states();
    if cert.g.len() != n || cert.target.universe() != n {
        return ExcessiveVerdict::rejected(format!(
            "certificate covers {} states, model has {n}",
            cert.g.len()
        ));
    }
    if let Some(x) = cert.g.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return ExcessiveVerdict::rejected(format!("g is not a nonnegative number at state {x}"));
    }
    if let CertMode::Selector(rule) = &cert.mode {
        if let Err(e) = MarkovPolicy::Stationary(rule.clone()).validate(&mdp.actions) {
            return ExcessiveVerdict::rejected(format!("selector: {e}"));
        }
    }

    let sub = cert.sublevel(1.0);
    let tg = mdp.sweep(&cert.g);
    let mut worst_state = None;
    let mut worst_violation = f64::NEG_INFINITY;
    for x in sub.iter() {
        let off = mdp.actions.offset(x);
        let feasible = mdp.actions.feasible(x);
        let excess = match &cert.mode {
            CertMode::Uniform => (0..feasible.len()).map(|k| tg[off + k]).fold(f64::NEG_INFINITY, f64::max),
            CertMode::Selector(rule) => tg[off + mdp.actions.position(x, rule[x] as usize).unwrap()],
        } - cert.g[x];
        if excess > worst_violation {
            worst_violation = excess;
            worst_state = Some(x);
        }
    }
    let drift_ok = worst_violation <= DRIFT_SLACK;

    let stray_state = sub.iter().find(|&x| !cert.target.contains(x));
    // the chain shrinks by at least one state per step until it repeats
    let (chain, _) = absorbing_chain(mdp, &sub, n + 1);
    let absorbing_in_zero_set = chain.last().unwrap().iter().all(|x| cert.g[x] == 0.0);
    let degenerate = sub.is_empty();
    let passed = drift_ok && stray_state.is_none() && absorbing_in_zero_set;
    let reason = (!passed).then(|| {
        if !drift_ok {
            format!("drift condition fails at state {} by {worst_violation:e}", worst_state.unwrap())
        } else if let Some(x) = stray_state {
            format!("sublevel state {x} lies outside the target set")
        } else {
            "sublevel set holds an absorbing subset where g > 0".to_string()
        }
    });
    if degenerate {
        log::warn!("certificate is degenerate: g > 1 everywhere");
    }
    ExcessiveVerdict {
        passed,
        worst_state,
        worst_violation: if sub.is_empty() { 0.0 } else { worst_violation },
        sublevel_in_target: stray_state.is_none(),
        stray_state,
        absorbing_in_zero_set,
        degenerate,
        open_set_checked: false,
        reason,
    }
}

/// Solve the reach problem on `S \ {g < eps}`. The dropped states reach the
/// goal with probability at most `eps`, so the reported bound is `eps` plus
/// the contraction bound of the truncated run.
pub fn truncated_reach(
    mdp: &Mdp,
    spec: &ReachSpec,
    cert: &ExcessiveCertificate,
    eps: f64,
    opts: UnboundedOptions,
) -> Result<ValueResult, ReachError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(ReachError::BadEpsilon(eps));
    }
    let verdict = verify_excessive(mdp, cert);
    if !verdict.passed {
        return Err(ReachError::CertificateRejected(verdict.reason.unwrap_or_default()));
    }
    if let Some(x) = spec.goal().iter().find(|&x| cert.g[x] <= 1.0) {
        return Err(ReachError::GoalMeetsSublevel(x));
    }
    let kept = spec.safe().difference(&cert.strict_sublevel(eps));
    let report = absorbing_analysis(mdp, &kept, opts.cap)?;
    if report.verdict != AbsorbenceVerdict::Contractive {
        return Err(ReachError::TruncationNotContractive);
    }
    let truncated = ReachSpec::new(kept, spec.goal().clone(), spec.direction)?;
    let mut result = reach_unbounded(mdp, &truncated, UnboundedOptions { certify: false, ..opts })?;
    let bound = contraction_error_bound(&report, result.iterations)?;
    result.error_bound = Some(eps + bound);
    if result.status == super::Status::LowerEstimate {
        result.status = super::Status::Converged;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::MdpBuilder;
    use crate::reach::Direction;

    /// Walk on `0..=n` stepping down with probability `p`; both ends absorb.
    fn walk(n: usize, p: f64) -> Mdp {
        let mut b = MdpBuilder::new(n + 1, 1);
        b.set_row(0, 0, &[(0, 1.0)]).unwrap();
        b.set_row(n, 0, &[(n, 1.0)]).unwrap();
        for x in 1..n {
            b.set_row(x, 0, &[(x - 1, p), (x + 1, 1.0 - p)]).unwrap();
        }
        b.build().unwrap()
    }

    fn linear_cert(n: usize) -> ExcessiveCertificate {
        ExcessiveCertificate {
            g: (0..=n).map(|x| x as f64 / (n - 1) as f64).collect(),
            mode: CertMode::Uniform,
            target: StateSet::from_indices(n + 1, 0..n),
        }
    }

    #[test]
    fn drift_decided_by_row_arithmetic() {
        let n = 10;
        let good = verify_excessive(&walk(n, 0.6), &linear_cert(n));
        assert!(good.passed, "{good:?}");
        // expected step of g is (1 - 2p) / (n - 1)
        assert!((good.worst_violation - (1.0 - 1.2) / 9.0).abs() < 1e-12 || good.worst_violation == 0.0);
        let bad = verify_excessive(&walk(n, 0.4), &linear_cert(n));
        assert!(!bad.passed);
        assert!((bad.worst_violation - 0.2 / 9.0).abs() < 1e-12);
        assert!(!bad.open_set_checked);
    }

    #[test]
    fn degenerate_and_zero_on_absorbing() {
        let m = walk(4, 0.5);
        let high = ExcessiveCertificate {
            g: vec![2.0; 5],
            mode: CertMode::Uniform,
            target: StateSet::empty(5),
        };
        let v = verify_excessive(&m, &high);
        assert!(v.passed && v.degenerate);
        let pit = ExcessiveCertificate {
            g: vec![0.0, 2.0, 2.0, 2.0, 2.0],
            mode: CertMode::Selector(vec![0; 5]),
            target: StateSet::from_indices(5, [0]),
        };
        let v = verify_excessive(&m, &pit);
        assert!(v.passed && !v.degenerate);
        let stray = ExcessiveCertificate {
            target: StateSet::empty(5),
            ..pit
        };
        assert_eq!(verify_excessive(&m, &stray).stray_state, Some(0));
    }

    #[test]
    fn truncation_preconditions() {
        let n = 10;
        let m = walk(n, 0.6);
        let spec = ReachSpec::new(
            StateSet::from_indices(n + 1, 1..n),
            StateSet::from_indices(n + 1, [n]),
            Direction::Max,
        )
        .unwrap();
        let cert = linear_cert(n);
        assert_eq!(
            truncated_reach(&m, &spec, &cert, 0.0, UnboundedOptions::default()),
            Err(ReachError::BadEpsilon(0.0))
        );
        let r = truncated_reach(&m, &spec, &cert, 1.0, UnboundedOptions::default()).unwrap();
        assert!(r.error_bound.unwrap() >= 1.0);
        let mut low = cert.clone();
        low.g[n] = 0.9;
        low.target = StateSet::full(n + 1);
        assert!(matches!(
            truncated_reach(&m, &spec, &low, 0.5, UnboundedOptions::default()),
            Err(ReachError::GoalMeetsSublevel(_)) | Err(ReachError::CertificateRejected(_))
        ));
    }
}
