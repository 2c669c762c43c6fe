use super::ModelError;

/// Finite action set with per-state feasibility.
///
/// State-action pairs are laid out contiguously: the pair for state `x` and
/// the `k`-th feasible action of `x` has index `offset(x) + k`. Feasible
/// actions are always listed in increasing action index.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    vectors: Vec<Vec<f64>>,
    names: Vec<String>,
    per_state: Option<Vec<Vec<u32>>>,
    all: Vec<u32>,
    offsets: Vec<usize>,
}

impl ActionSet {
    /// Every action feasible in each of `n_states` states.
    pub fn uniform(vectors: Vec<Vec<f64>>, names: Vec<String>, n_states: usize) -> Self {
        let m = vectors.len();
        Self {
            all: (0..m as u32).collect(),
            vectors,
            names,
            per_state: None,
            offsets: (0..=n_states).map(|x| x * m).collect(),
        }
    }

    /// Abstract actions `0..m` without geometry.
    pub fn indexed(m: usize, n_states: usize) -> Self {
        Self::uniform((0..m).map(|a| vec![a as f64]).collect(), vec!["a".into()], n_states)
    }

    pub fn with_feasibility(
        vectors: Vec<Vec<f64>>,
        names: Vec<String>,
        feasible: Vec<Vec<u32>>,
    ) -> Result<Self, ModelError> {
        let m = vectors.len();
        let mut offsets = Vec::with_capacity(feasible.len() + 1);
        offsets.push(0);
        for (x, list) in feasible.iter().enumerate() {
            if list.is_empty() {
                return Err(ModelError::NoFeasibleAction(x));
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ModelError::InvalidGrid(format!(
                    "feasible actions of state {x} are not strictly increasing"
                )));
            }
            if let Some(&a) = list.iter().find(|&&a| a as usize >= m) {
                return Err(ModelError::IndexOutOfRange {
                    index: a as usize,
                    limit: m,
                });
            }
            offsets.push(offsets[x] + list.len());
        }
        let uniform = feasible.iter().all(|l| l.len() == m);
        Ok(Self {
            all: (0..m as u32).collect(),
            vectors,
            names,
            per_state: (!uniform).then_some(feasible),
            offsets,
        })
    }

    /// Same actions over a state space where state `s` inherits the
    /// feasibility of `base_state(s)`.
    pub fn pulled_back(&self, n_states: usize, base_state: impl Fn(usize) -> usize) -> Self {
        match &self.per_state {
            None => Self::uniform(self.vectors.clone(), self.names.clone(), n_states),
            Some(lists) => {
                let feasible = (0..n_states).map(|s| lists[base_state(s)].clone()).collect();
                Self::with_feasibility(self.vectors.clone(), self.names.clone(), feasible)
                    .expect("pulled-back feasibility stays valid")
            }
        }
    }

    /// Single-action set over `n_states` (used for models closed under a policy).
    pub fn single(n_states: usize) -> Self {
        Self::indexed(1, n_states)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn n_states(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn vector(&self, a: usize) -> &[f64] {
        &self.vectors[a]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn is_uniform(&self) -> bool {
        self.per_state.is_none()
    }

    pub fn feasible(&self, x: usize) -> &[u32] {
        match &self.per_state {
            None => &self.all,
            Some(lists) => &lists[x],
        }
    }

    pub fn is_feasible(&self, x: usize, a: usize) -> bool {
        self.position(x, a).is_some()
    }

    /// Position of action `a` in the feasible list of `x`.
    pub fn position(&self, x: usize, a: usize) -> Option<usize> {
        match &self.per_state {
            None => (a < self.len()).then_some(a),
            Some(lists) => lists[x].binary_search(&(a as u32)).ok(),
        }
    }

    pub fn offset(&self, x: usize) -> usize {
        self.offsets[x]
    }

    pub fn n_pairs(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn pair_index(&self, x: usize, a: usize) -> Option<usize> {
        self.position(x, a).map(|k| self.offsets[x] + k)
    }

    /// Action vector rendered as space-separated components.
    pub fn describe(&self, a: usize) -> String {
        self.vectors[a]
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_layout() {
        let a = ActionSet::with_feasibility(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec!["u".into()],
            vec![vec![0, 2], vec![1], vec![0, 1, 2]],
        )
        .unwrap();
        assert_eq!(a.n_pairs(), 6);
        assert_eq!(a.pair_index(0, 2), Some(1));
        assert_eq!(a.pair_index(1, 0), None);
        assert_eq!(a.pair_index(2, 1), Some(4));
        assert!(!a.is_uniform());
    }

    #[test]
    fn empty_feasible_set_rejected() {
        let r = ActionSet::with_feasibility(vec![vec![0.0]], vec![], vec![vec![0], vec![]]);
        assert_eq!(r.unwrap_err(), ModelError::NoFeasibleAction(1));
    }
}
