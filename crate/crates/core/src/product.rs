//! Composition of a labelled model with a deterministic automaton.
//!
//! From product state `(x, q)` the model moves by its own kernel and the
//! automaton reads the current letter `L(x)`, so the automaton component
//! after `k` steps has consumed `L(x_0) ... L(x_{k-1})`. Product index of
//! `(x, q)` is `x * Q + q`.

use std::sync::Arc;

use thiserror::Error;

use crate::automata::{Acceptance, DetAutomaton};
use crate::mdp::{LiftedKernel, MarkovPolicy, Mdp, ModelError, StateSet, TransitionKernel};
use crate::montecarlo::Controller;

#[derive(Debug, Error, PartialEq)]
pub enum ProductError {
    #[error("alphabet mismatch: model has [{model}], automaton has [{automaton}]")]
    AlphabetMismatch { model: String, automaton: String },
    #[error("{0} acceptance is not supported by the solvers")]
    Unsupported(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone)]
pub struct ProductModel {
    pub base: Arc<Mdp>,
    pub automaton: DetAutomaton,
    pub mdp: Mdp,
}

/// Sets the engines need, in product indices.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSets {
    /// Reach `goal` while staying in `safe`; `horizon` for bounded acceptance.
    Reach {
        goal: StateSet,
        safe: StateSet,
        horizon: Option<u32>,
    },
    /// Visit `finals` infinitely often.
    Buchi { finals: StateSet },
}

pub fn compose(base: Arc<Mdp>, automaton: &DetAutomaton) -> Result<ProductModel, ProductError> {
    let labeling = base.labeling()?.clone();
    // same letters in a different order are fine
    let automaton = automaton
        .reindexed(labeling.alphabet())
        .map_err(|_| ProductError::AlphabetMismatch {
            model: labeling.alphabet().join(" "),
            automaton: automaton.alphabet().join(" "),
        })?;
    let qn = automaton.n_states();
    let n = base.n_states();
    let mut successor = Vec::with_capacity(n * qn);
    for x in 0..n {
        let l = labeling.letter(x);
        for q in 0..qn {
            successor.push(automaton.next(q, l) as u32);
        }
    }
    let actions = base.actions.pulled_back(n * qn, |s| s / qn);
    let kernel = TransitionKernel::Lifted(LiftedKernel {
        base: base.clone(),
        q_count: qn,
        successor,
    });
    let mdp = Mdp::new(actions, kernel, None)?;
    Ok(ProductModel {
        base,
        automaton,
        mdp,
    })
}

impl ProductModel {
    pub fn q_count(&self) -> usize {
        self.automaton.n_states()
    }

    pub fn index(&self, x: usize, q: usize) -> usize {
        x * self.q_count() + q
    }

    pub fn split(&self, s: usize) -> (usize, usize) {
        (s / self.q_count(), s % self.q_count())
    }

    /// Product state a path started at base state `x` begins in.
    pub fn initial_state(&self, x: usize) -> usize {
        self.index(x, self.automaton.initial())
    }

    fn states_with_q(&self, qs: &[usize]) -> StateSet {
        let qn = self.q_count();
        StateSet::from_predicate(self.mdp.n_states(), |s| qs.contains(&(s % qn)))
    }

    pub fn target_sets(&self) -> Result<TargetSets, ProductError> {
        match self.automaton.acceptance() {
            Acceptance::Reach(f) => {
                let goal = self.states_with_q(f);
                Ok(TargetSets::Reach {
                    safe: goal.complement(),
                    goal,
                    horizon: None,
                })
            }
            Acceptance::BoundedReach { horizon, finals } => {
                let goal = self.states_with_q(finals);
                Ok(TargetSets::Reach {
                    safe: goal.complement(),
                    goal,
                    horizon: Some(*horizon),
                })
            }
            Acceptance::Buchi(f) => Ok(TargetSets::Buchi {
                finals: self.states_with_q(f),
            }),
            Acceptance::Rabin(_) => Err(ProductError::Unsupported("rabin")),
        }
    }

    /// Values at `(x, q^s)` for every base state.
    pub fn initial_values(&self, values: &[f64]) -> Vec<f64> {
        (0..self.base.n_states())
            .map(|x| values[self.initial_state(x)])
            .collect()
    }

    /// Controller on the base model that tracks the automaton state.
    pub fn project_policy<'a>(&'a self, policy: &'a MarkovPolicy) -> ProjectedController<'a> {
        ProjectedController {
            product: self,
            policy,
            q: self.automaton.initial(),
        }
    }
}

/// Base-model controller induced by a product policy.
#[derive(Debug, Clone)]
pub struct ProjectedController<'a> {
    product: &'a ProductModel,
    policy: &'a MarkovPolicy,
    q: usize,
}

impl ProjectedController<'_> {
    pub fn automaton_state(&self) -> usize {
        self.q
    }
}

impl Controller for ProjectedController<'_> {
    fn reset(&mut self, _x0: usize) {
        self.q = self.product.automaton.initial();
    }

    fn act(&mut self, t: usize, x: usize) -> usize {
        let a = self.policy.action(t, self.product.index(x, self.q));
        let letter = self.product.base.labeling().expect("composed models are labelled").letter(x);
        self.q = self.product.automaton.next(self.q, letter);
        a
    }
}
