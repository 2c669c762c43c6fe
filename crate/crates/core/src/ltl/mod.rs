//! Linear temporal logic over a finite alphabet of mutually exclusive letters.
//!
//! Every position of a word carries exactly one letter, so an atom `a` holds
//! at a position iff that position's letter is `a`.

mod nnf;
mod parser;
mod progress;
mod semantics;
mod translate;

pub use nnf::{classify, to_nnf};
pub use parser::{parse_ltl, unparse};
pub use progress::{progress, Clause, Dnf, Literal};
pub use semantics::{semantics_eval, EvalMode, Truth};
pub use translate::{scltl_to_dfa, TranslateOptions, DEFAULT_STATE_CAP};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bound {
    Finite(u32),
    Infinite,
}

impl Bound {
    pub fn is_finite(self) -> bool {
        matches!(self, Bound::Finite(_))
    }
}

/// LTL abstract syntax. Atoms are indices into the alphabet.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom(usize),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>, Bound),
    WeakUntil(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>, Bound),
    Always(Box<Formula>, Bound),
}

impl Formula {
    pub fn atom(a: usize) -> Self {
        Formula::Atom(a)
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula, bound: Bound) -> Self {
        Formula::Until(Box::new(a), Box::new(b), bound)
    }

    pub fn weak_until(a: Formula, b: Formula) -> Self {
        Formula::WeakUntil(Box::new(a), Box::new(b))
    }

    pub fn eventually(f: Formula, bound: Bound) -> Self {
        Formula::Eventually(Box::new(f), bound)
    }

    pub fn always(f: Formula, bound: Bound) -> Self {
        Formula::Always(Box::new(f), bound)
    }

    /// Nesting depth of the syntax tree (atoms and constants have depth 0).
    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 0,
            Formula::Not(f) | Formula::Next(f) | Formula::Eventually(f, _) | Formula::Always(f, _) => {
                1 + f.depth()
            }
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Until(a, b, _)
            | Formula::WeakUntil(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// True if no temporal operator occurs.
    pub fn is_propositional(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => true,
            Formula::Not(f) => f.is_propositional(),
            Formula::And(a, b) | Formula::Or(a, b) => a.is_propositional() && b.is_propositional(),
            _ => false,
        }
    }

    /// Truth value of a propositional formula on a single letter.
    pub fn holds_on(&self, letter: usize) -> Option<bool> {
        Some(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => *a == letter,
            Formula::Not(f) => !f.holds_on(letter)?,
            Formula::And(a, b) => a.holds_on(letter)? && b.holds_on(letter)?,
            Formula::Or(a, b) => a.holds_on(letter)? || b.holds_on(letter)?,
            _ => return None,
        })
    }
}

/// Syntactic fragment of a formula in negation normal form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FragmentClass {
    /// Only bounded modalities.
    Bounded,
    /// Co-safe: no weak until and no unbounded always.
    CoSafe,
    /// Safe: no unbounded until and no unbounded eventually.
    Safe,
    General,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LtlError {
    #[error("unknown letter `{name}` at position {pos}")]
    UnknownLetter { name: String, pos: usize },
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("negative bound at position {pos}")]
    NegativeBound { pos: usize },
    #[error("formula is not in negation normal form")]
    NotNnf,
    #[error("formula is outside the co-safe and bounded fragments")]
    Fragment,
    #[error("translation exceeded {0} automaton states")]
    StateCap(usize),
}
