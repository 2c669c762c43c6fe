//! Deciding which engine answers a query.

use std::sync::Arc;

use stochctl::automata::DetAutomaton;
use stochctl::ltl::{classify, scltl_to_dfa, Bound, Formula, FragmentClass, TranslateOptions};
use stochctl::mdp::{Labeling, Mdp, StateSet};
use stochctl::product::{compose, ProductModel, TargetSets};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Steps(u32),
    Infinite,
}

impl std::str::FromStr for Horizon {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "inf" {
            return Ok(Horizon::Infinite);
        }
        s.parse::<u32>()
            .map(Horizon::Steps)
            .map_err(|_| format!("horizon must be a step count or `inf`, got `{s}`"))
    }
}

/// Engine task on either the base model or a product.
pub enum Task {
    /// Stay in `safe` for `horizon` steps (`None`: forever).
    Safety { safe: StateSet, horizon: Option<u32>, q: usize },
    /// Eventually always in `safe`.
    Persistence { safe: StateSet },
    /// Infinitely often in `finals`, on the base model.
    Buchi { finals: StateSet },
    /// Reach the accepting states of a product.
    Reach { product: ProductModel, horizon: Option<u32> },
    /// Büchi acceptance of a product.
    BuchiProduct { product: ProductModel },
}

/// A task and whether its value is the complement of the asked probability.
pub struct Plan {
    pub base: Arc<Mdp>,
    pub task: Task,
    pub negated: bool,
}

impl Plan {
    pub fn base(&self) -> &Mdp {
        &self.base
    }
}

fn set_of(psi: &Formula, labeling: &Labeling) -> StateSet {
    StateSet::from_predicate(labeling.letters().len(), |x| psi.holds_on(labeling.letter(x)) == Some(true))
}

/// Plan for an LTL formula. `G ψ`, `F G ψ` and `G F ψ` with propositional `ψ`
/// go straight to the set-based engines; everything else goes through an
/// automaton, negating safe formulae first.
pub fn plan_formula(base: &Arc<Mdp>, f: &Formula, horizon: Horizon) -> Result<Plan, Failure> {
    let labeling = base.labeling().map_err(stochctl::Error::from)?;
    match f {
        Formula::Always(psi, Bound::Infinite) if psi.is_propositional() => {
            let horizon = match horizon {
                Horizon::Steps(n) => Some(n),
                Horizon::Infinite => None,
            };
            return Ok(Plan {
                task: Task::Safety { safe: set_of(psi, labeling), horizon, q: 0 },
                negated: false,
                base: base.clone(),
            });
        }
        Formula::Eventually(inner, Bound::Infinite) => {
            if let Formula::Always(psi, Bound::Infinite) = inner.as_ref() {
                if psi.is_propositional() {
                    return Ok(Plan {
                        task: Task::Persistence { safe: set_of(psi, labeling) },
                        negated: false,
                        base: base.clone(),
                    });
                }
            }
        }
        Formula::Always(inner, Bound::Infinite) => {
            if let Formula::Eventually(psi, Bound::Infinite) = inner.as_ref() {
                if psi.is_propositional() {
                    return Ok(Plan {
                        task: Task::Buchi { finals: set_of(psi, labeling) },
                        negated: false,
                        base: base.clone(),
                    });
                }
            }
        }
        _ => {}
    }
    let alphabet = labeling.alphabet().to_vec();
    let opts = TranslateOptions::default();
    match classify(f) {
        FragmentClass::Bounded | FragmentClass::CoSafe => {
            let aut = scltl_to_dfa(f, &alphabet, opts).map_err(stochctl::Error::from)?;
            plan_automaton(base, &aut, horizon, false)
        }
        FragmentClass::Safe => {
            let neg = Formula::not(f.clone());
            let aut = scltl_to_dfa(&neg, &alphabet, opts).map_err(stochctl::Error::from)?;
            plan_automaton(base, &aut, horizon, true)
        }
        FragmentClass::General => Err(Failure::Unsupported(
            "formula is neither safe nor co-safe and is not of the form F G p or G F p".into(),
        )),
    }
}

/// Letters that keep an invariance automaton on its chain and the chain
/// length, when the automaton accepts exactly the words whose first `k`
/// letters all lie in one letter set.
pub fn invariance_chain(aut: &DetAutomaton) -> Option<(Vec<bool>, usize)> {
    let finals = aut.finals()?;
    let live = aut.can_reach_final();
    let k = aut.alphabet().len();
    let mut q = aut.initial();
    let mut keep: Option<Vec<bool>> = None;
    let mut steps = 0;
    while !finals.contains(&q) {
        let mut next = None;
        let mut letters = vec![false; k];
        for (l, slot) in letters.iter_mut().enumerate() {
            let r = aut.next(q, l);
            if live[r] {
                if next.is_some_and(|n| n != r) {
                    return None;
                }
                next = Some(r);
                *slot = true;
            }
        }
        match &keep {
            Some(prev) if *prev != letters => return None,
            None => keep = Some(letters),
            _ => {}
        }
        q = next?;
        steps += 1;
        if steps > aut.n_states() {
            return None;
        }
    }
    // every continuation of an accepted prefix stays accepted
    let closed = (0..k).all(|l| finals.contains(&aut.next(q, l)));
    (closed && steps > 0).then(|| (keep.unwrap_or_default(), steps))
}

pub fn plan_automaton(base: &Arc<Mdp>, aut: &DetAutomaton, horizon: Horizon, negated: bool) -> Result<Plan, Failure> {
    let product = compose(base.clone(), aut).map_err(stochctl::Error::from)?;
    let aut = &product.automaton;
    let task = match product.target_sets().map_err(stochctl::Error::from)? {
        TargetSets::Buchi { .. } => {
            if negated {
                return Err(Failure::Unsupported("negated Büchi conditions are not supported".into()));
            }
            Task::BuchiProduct { product }
        }
        TargetSets::Reach { horizon: own, .. } => {
            let steps = match (horizon, own) {
                (Horizon::Steps(n), _) => Some(n),
                (Horizon::Infinite, h) => h,
            };
            match invariance_chain(aut) {
                // accepting after `k` letters in P means x_0 .. x_{k-1} in P
                Some((keep, k)) if steps.is_none_or(|n| n as usize >= k) => {
                    let labeling = base.labeling().map_err(stochctl::Error::from)?;
                    let safe = StateSet::from_predicate(base.n_states(), |x| keep[labeling.letter(x)]);
                    Task::Safety { safe, horizon: Some(k as u32 - 1), q: aut.initial() }
                }
                _ => Task::Reach { product, horizon: steps },
            }
        }
    };
    Ok(Plan {
        base: base.clone(),
        task,
        negated,
    })
}
