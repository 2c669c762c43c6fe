//! Deterministic automata over a finite alphabet with reach, bounded reach,
//! Büchi or Rabin acceptance, and their text format.
//!
//! ```text
//! alphabet: S G1 G2 G BOT
//! states: 5
//! initial: 0
//! acceptance: reach 4        # reach-bounded <n> <F..> | buchi <F..> | rabin <k>
//! trans: 0 S 0
//! ...
//! ```
//!
//! A `rabin k` line is followed by `k` lines `pair: <F'..> ; <F''..>`.
//! Exactly one `trans` line is required per state and letter.

mod format;

pub use format::{parse_automaton, serialize_automaton};

use std::collections::BTreeSet;

use thiserror::Error;

/// Rabin condition: `infinitely` is visited infinitely often and
/// `finitely` only finitely often.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RabinPair {
    pub infinitely: Vec<usize>,
    pub finitely: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Acceptance {
    /// Visit `finals` at least once.
    Reach(Vec<usize>),
    /// Visit `finals` within `horizon` steps.
    BoundedReach { horizon: u32, finals: Vec<usize> },
    /// Visit `finals` infinitely often.
    Buchi(Vec<usize>),
    Rabin(Vec<RabinPair>),
}

impl Acceptance {
    pub fn kind(&self) -> &'static str {
        match self {
            Acceptance::Reach(_) => "reach",
            Acceptance::BoundedReach { .. } => "reach-bounded",
            Acceptance::Buchi(_) => "buchi",
            Acceptance::Rabin(_) => "rabin",
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing transition from state {state} on letter {letter}")]
    MissingTransition { state: usize, letter: String },
    #[error("duplicate transition from state {state} on letter {letter}")]
    DuplicateTransition { state: usize, letter: String },
    #[error("state {state} out of range (automaton has {count} states)")]
    StateOutOfRange { state: usize, count: usize },
    #[error("final state {0} of a reach automaton is not absorbing")]
    NonAbsorbingFinal(usize),
    #[error("unknown letter `{0}`")]
    UnknownLetter(String),
    #[error("letter index {0} out of range")]
    LetterOutOfRange(usize),
    #[error("automaton has no states")]
    Empty,
}

/// Deterministic automaton with a total transition function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetAutomaton {
    alphabet: Vec<String>,
    n_states: usize,
    initial: usize,
    // trans[q * |alphabet| + letter]
    trans: Vec<u32>,
    acceptance: Acceptance,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunVerdict {
    Accepted,
    Rejected,
    /// No decision on a finite prefix; carries the states visited in the
    /// trailing window of the run.
    Undetermined { recent: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub states: Vec<usize>,
    pub verdict: RunVerdict,
}

/// Trailing window reported for undetermined runs.
pub const DEFAULT_RUN_WINDOW: usize = 10;

impl DetAutomaton {
    /// `trans[q][letter]` gives the successor of `q`.
    pub fn new(
        alphabet: Vec<String>,
        initial: usize,
        trans: Vec<Vec<usize>>,
        acceptance: Acceptance,
    ) -> Result<Self, AutomatonError> {
        let n = trans.len();
        if n == 0 {
            return Err(AutomatonError::Empty);
        }
        let range = |q: usize| {
            if q < n {
                Ok(())
            } else {
                Err(AutomatonError::StateOutOfRange { state: q, count: n })
            }
        };
        range(initial)?;
        let k = alphabet.len();
        let mut flat = Vec::with_capacity(n * k);
        for (q, row) in trans.iter().enumerate() {
            if row.len() != k {
                let letter = alphabet.get(row.len()).cloned().unwrap_or_default();
                return Err(AutomatonError::MissingTransition { state: q, letter });
            }
            for &t in row {
                range(t)?;
                flat.push(t as u32);
            }
        }
        let sets: Vec<&Vec<usize>> = match &acceptance {
            Acceptance::Reach(f) | Acceptance::Buchi(f) => vec![f],
            Acceptance::BoundedReach { finals, .. } => vec![finals],
            Acceptance::Rabin(pairs) => pairs.iter().flat_map(|p| [&p.infinitely, &p.finitely]).collect(),
        };
        for s in sets {
            for &q in s {
                range(q)?;
            }
        }
        let aut = Self {
            alphabet,
            n_states: n,
            initial,
            trans: flat,
            acceptance,
        };
        if let Acceptance::Reach(f) | Acceptance::BoundedReach { finals: f, .. } = &aut.acceptance {
            for &q in f {
                if (0..k).any(|l| aut.next(q, l) != q) {
                    return Err(AutomatonError::NonAbsorbingFinal(q));
                }
            }
        }
        Ok(aut)
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn acceptance(&self) -> &Acceptance {
        &self.acceptance
    }

    pub fn next(&self, q: usize, letter: usize) -> usize {
        self.trans[q * self.alphabet.len() + letter] as usize
    }

    pub fn letter_index(&self, name: &str) -> Option<usize> {
        self.alphabet.iter().position(|a| a == name)
    }

    /// Final states of reach, bounded-reach and Büchi automata.
    pub fn finals(&self) -> Option<&[usize]> {
        match &self.acceptance {
            Acceptance::Reach(f) | Acceptance::Buchi(f) => Some(f),
            Acceptance::BoundedReach { finals, .. } => Some(finals),
            Acceptance::Rabin(_) => None,
        }
    }

    /// Same automaton with its letters renamed to match `alphabet`, which must
    /// contain the same letters in any order.
    pub fn reindexed(&self, alphabet: &[String]) -> Result<Self, AutomatonError> {
        let mut perm = Vec::with_capacity(alphabet.len());
        for name in alphabet {
            perm.push(
                self.letter_index(name)
                    .ok_or_else(|| AutomatonError::UnknownLetter(name.clone()))?,
            );
        }
        if let Some(missing) = self.alphabet.iter().find(|a| !alphabet.contains(a)) {
            return Err(AutomatonError::UnknownLetter(missing.clone()));
        }
        let trans = (0..self.n_states)
            .map(|q| perm.iter().map(|&l| self.next(q, l)).collect())
            .collect();
        Self::new(alphabet.to_vec(), self.initial, trans, self.acceptance.clone())
    }

    /// States from which some final state is reachable.
    pub fn can_reach_final(&self) -> Vec<bool> {
        let mut good = vec![false; self.n_states];
        if let Some(f) = self.finals() {
            for &q in f {
                good[q] = true;
            }
        }
        loop {
            let mut changed = false;
            for q in 0..self.n_states {
                if !good[q] && (0..self.alphabet.len()).any(|l| good[self.next(q, l)]) {
                    good[q] = true;
                    changed = true;
                }
            }
            if !changed {
                return good;
            }
        }
    }

    pub fn run(&self, word: &[usize]) -> Result<Run, AutomatonError> {
        self.run_with_window(word, DEFAULT_RUN_WINDOW)
    }

    pub fn run_named(&self, word: &[&str]) -> Result<Run, AutomatonError> {
        let idx = word
            .iter()
            .map(|w| {
                self.letter_index(w)
                    .ok_or_else(|| AutomatonError::UnknownLetter(w.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.run(&idx)
    }

    pub fn run_with_window(&self, word: &[usize], window: usize) -> Result<Run, AutomatonError> {
        if let Some(&l) = word.iter().find(|&&l| l >= self.alphabet.len()) {
            return Err(AutomatonError::LetterOutOfRange(l));
        }
        let mut states = Vec::with_capacity(word.len() + 1);
        states.push(self.initial);
        for &l in word {
            states.push(self.next(*states.last().unwrap(), l));
        }
        let verdict = match &self.acceptance {
            Acceptance::Reach(f) => {
                if states.iter().any(|q| f.contains(q)) {
                    RunVerdict::Accepted
                } else if !self.can_reach_final()[*states.last().unwrap()] {
                    RunVerdict::Rejected
                } else {
                    self.undetermined(&states, window)
                }
            }
            Acceptance::BoundedReach { horizon, finals } => {
                let n = *horizon as usize;
                let within = &states[..states.len().min(n + 1)];
                if within.iter().any(|q| finals.contains(q)) {
                    RunVerdict::Accepted
                } else if states.len() > n || !self.can_reach_final()[*states.last().unwrap()] {
                    RunVerdict::Rejected
                } else {
                    self.undetermined(&states, window)
                }
            }
            Acceptance::Buchi(_) | Acceptance::Rabin(_) => self.undetermined(&states, window),
        };
        Ok(Run { states, verdict })
    }

    fn undetermined(&self, states: &[usize], window: usize) -> RunVerdict {
        let start = states.len().saturating_sub(window);
        let recent: BTreeSet<usize> = states[start..].iter().copied().collect();
        RunVerdict::Undetermined {
            recent: recent.into_iter().collect(),
        }
    }
}
