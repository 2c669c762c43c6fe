use std::collections::BTreeMap;

use super::kernel::normalize_exact;
use super::{ActionSet, ModelError, StateGrid, StateSet, TransitionKernel, DENSE_STATE_LIMIT};

/// Map from states to letters of a finite alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    alphabet: Vec<String>,
    letters: Vec<u32>,
}

impl Labeling {
    pub fn new(alphabet: Vec<String>, letters: Vec<u32>) -> Result<Self, ModelError> {
        if let Some(&l) = letters.iter().find(|&&l| l as usize >= alphabet.len()) {
            return Err(ModelError::IndexOutOfRange {
                index: l as usize,
                limit: alphabet.len(),
            });
        }
        Ok(Self { alphabet, letters })
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn letters(&self) -> &[u32] {
        &self.letters
    }

    pub fn letter(&self, x: usize) -> usize {
        self.letters[x] as usize
    }

    pub fn letter_name(&self, x: usize) -> &str {
        &self.alphabet[self.letter(x)]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.alphabet.iter().position(|a| a == name)
    }

    /// States carrying letter `l`.
    pub fn states_with(&self, l: usize) -> StateSet {
        StateSet::from_predicate(self.letters.len(), |x| self.letter(x) == l)
    }
}

/// Finite controlled Markov process.
#[derive(Debug, Clone)]
pub struct Mdp {
    n_states: usize,
    pub actions: ActionSet,
    pub kernel: TransitionKernel,
    pub labeling: Option<Labeling>,
}

impl Mdp {
    pub fn new(
        actions: ActionSet,
        kernel: TransitionKernel,
        labeling: Option<Labeling>,
    ) -> Result<Self, ModelError> {
        let n_states = kernel.n_states();
        if actions.n_states() != n_states {
            return Err(ModelError::LengthMismatch {
                expected: n_states,
                got: actions.n_states(),
            });
        }
        if let Some(l) = &labeling {
            if l.letters.len() != n_states {
                return Err(ModelError::LengthMismatch {
                    expected: n_states,
                    got: l.letters.len(),
                });
            }
        }
        Ok(Self {
            n_states,
            actions,
            kernel,
            labeling,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn labeling(&self) -> Result<&Labeling, ModelError> {
        self.labeling.as_ref().ok_or(ModelError::Unlabelled)
    }

    pub fn with_labeling(mut self, labeling: Labeling) -> Result<Self, ModelError> {
        if labeling.letters.len() != self.n_states {
            return Err(ModelError::LengthMismatch {
                expected: self.n_states,
                got: labeling.letters.len(),
            });
        }
        self.labeling = Some(labeling);
        Ok(self)
    }

    pub fn check_len(&self, f: &[f64]) -> Result<(), ModelError> {
        if f.len() != self.n_states {
            return Err(ModelError::LengthMismatch {
                expected: self.n_states,
                got: f.len(),
            });
        }
        Ok(())
    }

    /// Expectation of `f` for every feasible state-action pair.
    ///
    /// Panics if `f` has the wrong length; use [`Mdp::check_len`] on
    /// untrusted input.
    pub fn sweep(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.n_states, "value vector length");
        self.kernel.sweep(&self.actions, f)
    }

    /// Row of `T(.|x, a)` by action index.
    pub fn row(&self, x: usize, a: usize) -> Result<Vec<(u32, f64)>, ModelError> {
        if x >= self.n_states {
            return Err(ModelError::IndexOutOfRange {
                index: x,
                limit: self.n_states,
            });
        }
        let k = self
            .actions
            .position(x, a)
            .ok_or(ModelError::InfeasibleAction { state: x, action: a })?;
        let mut buf = Vec::new();
        self.kernel.row_into(&self.actions, x, k, &mut buf);
        Ok(buf)
    }

    /// Markov chain obtained by fixing the action `rule[x]` in every state.
    pub fn under_policy(&self, rule: &[u32]) -> Result<Mdp, ModelError> {
        if rule.len() != self.n_states {
            return Err(ModelError::LengthMismatch {
                expected: self.n_states,
                got: rule.len(),
            });
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut buf = Vec::new();
        for (x, &a) in rule.iter().enumerate() {
            let k = self
                .actions
                .position(x, a as usize)
                .ok_or(ModelError::InfeasibleAction {
                    state: x,
                    action: a as usize,
                })?;
            self.kernel.row_into(&self.actions, x, k, &mut buf);
            for &(j, p) in &buf {
                cols.push(j);
                vals.push(p);
            }
            row_ptr.push(cols.len());
        }
        Mdp::new(
            ActionSet::single(self.n_states),
            TransitionKernel::Sparse {
                n: self.n_states,
                row_ptr,
                cols,
                vals,
            },
            self.labeling.clone(),
        )
    }
}

/// Model together with the grid that gives its states geometry.
#[derive(Debug, Clone)]
pub struct GridModel {
    pub grid: StateGrid,
    pub mdp: Mdp,
}

/// Incremental construction of an explicit-row model.
#[derive(Debug, Clone)]
pub struct MdpBuilder {
    n_states: usize,
    vectors: Vec<Vec<f64>>,
    names: Vec<String>,
    rows: BTreeMap<(usize, usize), Vec<(usize, f64)>>,
    labeling: Option<Labeling>,
}

impl MdpBuilder {
    /// `n_actions` abstract actions over `n_states` states.
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            vectors: (0..n_actions).map(|a| vec![a as f64]).collect(),
            names: vec!["a".into()],
            rows: BTreeMap::new(),
            labeling: None,
        }
    }

    /// Actions carrying explicit vectors with named components.
    pub fn with_action_vectors(n_states: usize, vectors: Vec<Vec<f64>>, names: Vec<String>) -> Self {
        Self {
            n_states,
            vectors,
            names,
            rows: BTreeMap::new(),
            labeling: None,
        }
    }

    pub fn labeling(mut self, labeling: Labeling) -> Self {
        self.labeling = Some(labeling);
        self
    }

    /// Declare `(x, a)` feasible with the given row. Repeated next states
    /// are summed; setting the same pair twice replaces the row.
    pub fn set_row(&mut self, x: usize, a: usize, row: &[(usize, f64)]) -> Result<(), ModelError> {
        if x >= self.n_states {
            return Err(ModelError::IndexOutOfRange {
                index: x,
                limit: self.n_states,
            });
        }
        if a >= self.vectors.len() {
            return Err(ModelError::IndexOutOfRange {
                index: a,
                limit: self.vectors.len(),
            });
        }
        if let Some(&(j, _)) = row.iter().find(|e| e.0 >= self.n_states) {
            return Err(ModelError::IndexOutOfRange {
                index: j,
                limit: self.n_states,
            });
        }
        self.rows.insert((x, a), row.to_vec());
        Ok(())
    }

    /// Dense variant of [`MdpBuilder::set_row`].
    pub fn set_dense_row(&mut self, x: usize, a: usize, probs: &[f64]) -> Result<(), ModelError> {
        if probs.len() != self.n_states {
            return Err(ModelError::LengthMismatch {
                expected: self.n_states,
                got: probs.len(),
            });
        }
        let row: Vec<(usize, f64)> = probs
            .iter()
            .enumerate()
            .filter(|e| *e.1 != 0.0)
            .map(|(j, &p)| (j, p))
            .collect();
        self.set_row(x, a, &row)
    }

    pub fn build(self) -> Result<Mdp, ModelError> {
        let n = self.n_states;
        let mut feasible: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(x, a) in self.rows.keys() {
            feasible[x].push(a as u32);
        }
        let actions = ActionSet::with_feasibility(self.vectors, self.names, feasible)?;
        let mut normalized = Vec::with_capacity(self.rows.len());
        for ((x, a), row) in self.rows {
            let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
            for (j, p) in row {
                if !p.is_finite() || p < 0.0 {
                    return Err(ModelError::BadProbability { state: x, action: a });
                }
                *merged.entry(j).or_default() += p;
            }
            merged.retain(|_, p| *p > 0.0);
            let (cols, mut probs): (Vec<usize>, Vec<f64>) = merged.into_iter().unzip();
            normalize_exact(&mut probs).map_err(|sum| {
                if sum.is_nan() {
                    ModelError::BadProbability { state: x, action: a }
                } else {
                    ModelError::RowSum {
                        state: x,
                        action: a,
                        sum,
                    }
                }
            })?;
            normalized.push((cols, probs));
        }
        let kernel = if n < DENSE_STATE_LIMIT {
            let mut rows = vec![0.0; normalized.len() * n];
            for (p, (cols, probs)) in normalized.iter().enumerate() {
                for (&j, &v) in cols.iter().zip(probs) {
                    rows[p * n + j] = v;
                }
            }
            TransitionKernel::Dense { n, rows }
        } else {
            let mut row_ptr = vec![0];
            let mut cols_all = Vec::new();
            let mut vals = Vec::new();
            for (cols, probs) in normalized {
                cols_all.extend(cols.iter().map(|&j| j as u32));
                vals.extend(probs);
                row_ptr.push(cols_all.len());
            }
            TransitionKernel::Sparse {
                n,
                row_ptr,
                cols: cols_all,
                vals,
            }
        };
        Mdp::new(actions, kernel, self.labeling)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_rejects_bad_rows() {
        let mut b = MdpBuilder::new(2, 1);
        b.set_row(0, 0, &[(0, 0.5), (1, 0.4)]).unwrap();
        b.set_row(1, 0, &[(1, 1.0)]).unwrap();
        assert!(matches!(b.build(), Err(ModelError::RowSum { state: 0, .. })));

        let mut b = MdpBuilder::new(2, 2);
        b.set_row(0, 1, &[(0, 1.0)]).unwrap();
        assert_eq!(b.build().unwrap_err(), ModelError::NoFeasibleAction(1));

        let mut b = MdpBuilder::new(2, 1);
        assert!(b.set_row(0, 0, &[(2, 1.0)]).is_err());
        assert!(b.set_row(0, 1, &[(0, 1.0)]).is_err());
    }

    #[test]
    fn rows_come_back_normalised_and_sorted() {
        let mut b = MdpBuilder::new(3, 2);
        b.set_row(0, 1, &[(2, 0.3), (0, 0.7)]).unwrap();
        b.set_row(1, 0, &[(1, 1.0)]).unwrap();
        b.set_row(2, 0, &[(0, 0.1), (0, 0.2), (2, 0.7)]).unwrap();
        let m = b.build().unwrap();
        assert_eq!(m.row(0, 1).unwrap(), vec![(0, 0.7), (2, 0.3)]);
        assert!(matches!(m.row(0, 0), Err(ModelError::InfeasibleAction { .. })));
        let r = m.row(2, 0).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0].1 - 0.3).abs() < 1e-15);
        let chain = m.under_policy(&[1, 0, 0]).unwrap();
        assert_eq!(chain.row(0, 0).unwrap(), vec![(0, 0.7), (2, 0.3)]);
        assert!(m.under_policy(&[0, 0, 0]).is_err());
    }
}
