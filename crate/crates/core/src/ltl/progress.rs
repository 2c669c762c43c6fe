use std::collections::BTreeSet;

use super::nnf::is_nnf;
use super::{Bound, Formula, LtlError};

/// Conjunct of a clause: a constraint on the current letter or a temporal
/// obligation starting at the current position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Is(usize),
    IsNot(usize),
    Temporal(Formula),
}

pub type Clause = BTreeSet<Literal>;

/// Disjunctive normal form with contradictory clauses removed and absorbed
/// (superset) clauses dropped. Two formulae with equal `Dnf` are treated as
/// the same automaton state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dnf(BTreeSet<Clause>);

/// Letters are mutually exclusive: at most one positive letter per clause,
/// and a positive letter makes every other negative letter redundant.
fn tidy(mut c: Clause) -> Option<Clause> {
    let positives: Vec<usize> = c
        .iter()
        .filter_map(|l| match l {
            Literal::Is(a) => Some(*a),
            _ => None,
        })
        .collect();
    match positives.as_slice() {
        [] => Some(c),
        [a] => {
            if c.contains(&Literal::IsNot(*a)) {
                return None;
            }
            c.retain(|l| !matches!(l, Literal::IsNot(_)));
            Some(c)
        }
        _ => None,
    }
}

impl Dnf {
    pub fn top() -> Self {
        Dnf(BTreeSet::from([Clause::new()]))
    }

    pub fn bottom() -> Self {
        Dnf(BTreeSet::new())
    }

    pub fn is_true(&self) -> bool {
        self.0.len() == 1 && self.0.iter().next().unwrap().is_empty()
    }

    pub fn is_false(&self) -> bool {
        self.0.is_empty()
    }

    pub fn clauses(&self) -> impl Iterator<Item = &Clause> {
        self.0.iter()
    }

    fn single(l: Literal) -> Self {
        Dnf(BTreeSet::from([BTreeSet::from([l])]))
    }

    fn from_clauses(clauses: impl IntoIterator<Item = Clause>) -> Self {
        let clauses: Vec<Clause> = clauses.into_iter().filter_map(tidy).collect();
        let mut kept: BTreeSet<Clause> = BTreeSet::new();
        for c in &clauses {
            let absorbed = clauses
                .iter()
                .any(|d| d.len() < c.len() && d.is_subset(c));
            if !absorbed {
                kept.insert(c.clone());
            }
        }
        Dnf(kept)
    }

    pub fn or(&self, other: &Dnf) -> Dnf {
        Self::from_clauses(self.0.iter().chain(&other.0).cloned())
    }

    pub fn and(&self, other: &Dnf) -> Dnf {
        let mut out = Vec::with_capacity(self.0.len() * other.0.len());
        for a in &self.0 {
            for b in &other.0 {
                out.push(a.union(b).cloned().collect());
            }
        }
        Self::from_clauses(out)
    }

    /// Canonical form of an NNF formula.
    pub fn from_formula(f: &Formula) -> Result<Dnf, LtlError> {
        if !is_nnf(f) {
            return Err(LtlError::NotNnf);
        }
        Ok(Self::build(f))
    }

    fn build(f: &Formula) -> Dnf {
        match f {
            Formula::True => Dnf::top(),
            Formula::False => Dnf::bottom(),
            Formula::Atom(a) => Dnf::single(Literal::Is(*a)),
            Formula::Not(g) => match **g {
                Formula::Atom(a) => Dnf::single(Literal::IsNot(a)),
                _ => unreachable!("checked NNF"),
            },
            Formula::And(a, b) => Self::build(a).and(&Self::build(b)),
            Formula::Or(a, b) => Self::build(a).or(&Self::build(b)),
            _ => Self::temporal(f.clone()),
        }
    }

    /// Temporal obligation with trivial cases folded away.
    fn temporal(f: Formula) -> Dnf {
        use Formula as F;
        match &f {
            F::Next(g) => match **g {
                F::True => return Dnf::top(),
                F::False => return Dnf::bottom(),
                _ => {}
            },
            F::Until(a, b, k) => {
                if matches!(**b, F::True | F::False) || matches!(**a, F::False) || *k == Bound::Finite(0) {
                    return Self::build(b);
                }
            }
            F::WeakUntil(a, b) => {
                if matches!(**b, F::True) || matches!(**a, F::True) {
                    return Dnf::top();
                }
                if matches!(**a, F::False) {
                    return Self::build(b);
                }
            }
            F::Eventually(g, k) | F::Always(g, k) => {
                if matches!(**g, F::True | F::False) || *k == Bound::Finite(0) {
                    return Self::build(g);
                }
            }
            _ => {}
        }
        Dnf::single(Literal::Temporal(f))
    }

    /// Obligation left after reading `letter`.
    pub fn progress(&self, letter: usize) -> Dnf {
        let mut acc = Dnf::bottom();
        for clause in &self.0 {
            let mut c = Dnf::top();
            for lit in clause {
                c = c.and(&progress_literal(lit, letter));
                if c.is_false() {
                    break;
                }
            }
            acc = acc.or(&c);
            if acc.is_true() {
                break;
            }
        }
        acc
    }

    pub fn to_formula(&self) -> Formula {
        let mut clauses = self.0.iter().map(|c| {
            let mut lits = c.iter().map(|l| match l {
                Literal::Is(a) => Formula::Atom(*a),
                Literal::IsNot(a) => Formula::not(Formula::Atom(*a)),
                Literal::Temporal(f) => f.clone(),
            });
            match lits.next() {
                None => Formula::True,
                Some(first) => lits.fold(first, Formula::and),
            }
        });
        match clauses.next() {
            None => Formula::False,
            Some(first) => clauses.fold(first, Formula::or),
        }
    }
}

fn progress_formula(f: &Formula, letter: usize) -> Dnf {
    Dnf::build(f).progress(letter)
}

fn progress_literal(lit: &Literal, letter: usize) -> Dnf {
    use Formula as F;
    let truth = |b: bool| if b { Dnf::top() } else { Dnf::bottom() };
    match lit {
        Literal::Is(a) => truth(*a == letter),
        Literal::IsNot(a) => truth(*a != letter),
        Literal::Temporal(f) => match f {
            F::Next(g) => Dnf::build(g),
            F::Until(a, b, k) => {
                let now = progress_formula(b, letter);
                if now.is_true() {
                    return now;
                }
                let rest = match k {
                    Bound::Finite(0) => return now,
                    Bound::Finite(n) => Dnf::temporal(F::Until(a.clone(), b.clone(), Bound::Finite(n - 1))),
                    Bound::Infinite => Dnf::single(lit.clone()),
                };
                now.or(&progress_formula(a, letter).and(&rest))
            }
            F::WeakUntil(a, b) => {
                let now = progress_formula(b, letter);
                if now.is_true() {
                    return now;
                }
                now.or(&progress_formula(a, letter).and(&Dnf::single(lit.clone())))
            }
            F::Eventually(g, k) => {
                let now = progress_formula(g, letter);
                let rest = match k {
                    Bound::Finite(0) => return now,
                    Bound::Finite(n) => Dnf::temporal(F::Eventually(g.clone(), Bound::Finite(n - 1))),
                    Bound::Infinite => Dnf::single(lit.clone()),
                };
                now.or(&rest)
            }
            F::Always(g, k) => {
                let now = progress_formula(g, letter);
                let rest = match k {
                    Bound::Finite(0) => return now,
                    Bound::Finite(n) => Dnf::temporal(F::Always(g.clone(), Bound::Finite(n - 1))),
                    Bound::Infinite => Dnf::single(lit.clone()),
                };
                now.and(&rest)
            }
            _ => unreachable!("only temporal nodes become temporal literals"),
        },
    }
}

/// One progression step on formulae: `w` satisfies `f` iff the suffix after
/// the first letter satisfies the result, for words starting with `letter`.
pub fn progress(f: &Formula, letter: usize) -> Result<Formula, LtlError> {
    Ok(Dnf::from_formula(f)?.progress(letter).to_formula())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::parse_ltl;

    fn ab() -> Vec<String> {
        ["A", "B", "C"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn until_steps() {
        let a = ab();
        let f = parse_ltl("A U B", &a).unwrap();
        assert_eq!(progress(&f, 0).unwrap(), f);
        assert_eq!(progress(&f, 1).unwrap(), Formula::True);
        assert_eq!(progress(&f, 2).unwrap(), Formula::False);
        let x = parse_ltl("X (A | C)", &a).unwrap();
        assert_eq!(progress(&x, 1).unwrap(), parse_ltl("A | C", &a).unwrap());
    }

    #[test]
    fn mutually_exclusive_letters() {
        let a = ab();
        let f = Dnf::from_formula(&parse_ltl("A & B", &a).unwrap()).unwrap();
        assert!(f.is_false());
        let g = Dnf::from_formula(&parse_ltl("A & !B", &a).unwrap()).unwrap();
        assert_eq!(g, Dnf::from_formula(&Formula::Atom(0)).unwrap());
        let h = Dnf::from_formula(&parse_ltl("A | (A & X B)", &a).unwrap()).unwrap();
        assert_eq!(h, Dnf::from_formula(&Formula::Atom(0)).unwrap());
    }

    #[test]
    fn rejects_non_nnf() {
        let a = ab();
        assert_eq!(progress(&parse_ltl("!X A", &a).unwrap(), 0), Err(LtlError::NotNnf));
    }
}
