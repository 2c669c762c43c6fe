use super::{ActionSet, ModelError};

/// Deterministic Markov policy. Decision rules hold action indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MarkovPolicy {
    Stationary(Vec<u32>),
    /// `rules[t]` is applied at time `t`; times past the end reuse the last rule.
    TimeVarying(Vec<Vec<u32>>),
}

impl MarkovPolicy {
    pub fn rule(&self, t: usize) -> &[u32] {
        match self {
            Self::Stationary(r) => r,
            Self::TimeVarying(rules) => &rules[t.min(rules.len() - 1)],
        }
    }

    pub fn action(&self, t: usize, x: usize) -> usize {
        self.rule(t)[x] as usize
    }

    /// Number of distinct rules (1 for stationary policies).
    pub fn len(&self) -> usize {
        match self {
            Self::Stationary(_) => 1,
            Self::TimeVarying(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Self::TimeVarying(r) if r.is_empty())
    }

    pub fn validate(&self, actions: &ActionSet) -> Result<(), ModelError> {
        let rules: Vec<&[u32]> = match self {
            Self::Stationary(r) => vec![r],
            Self::TimeVarying(rules) => {
                if rules.is_empty() {
                    return Err(ModelError::LengthMismatch { expected: 1, got: 0 });
                }
                rules.iter().map(|r| r.as_slice()).collect()
            }
        };
        for rule in rules {
            check_rule(actions, rule)?;
        }
        Ok(())
    }
}

pub(crate) fn check_rule(actions: &ActionSet, rule: &[u32]) -> Result<(), ModelError> {
    if rule.len() != actions.n_states() {
        return Err(ModelError::LengthMismatch {
            expected: actions.n_states(),
            got: rule.len(),
        });
    }
    for (x, &a) in rule.iter().enumerate() {
        if !actions.is_feasible(x, a as usize) {
            return Err(ModelError::InfeasibleAction {
                state: x,
                action: a as usize,
            });
        }
    }
    Ok(())
}
