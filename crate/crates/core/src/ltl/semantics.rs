use super::{Bound, Formula};

/// Three-valued verdict on a finite prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    fn from_bool(b: bool) -> Self {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }

    fn not(self) -> Self {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Unknown => Truth::Unknown,
        }
    }

    fn and(self, other: impl FnOnce() -> Truth) -> Self {
        match self {
            Truth::False => Truth::False,
            Truth::True => other(),
            Truth::Unknown => match other() {
                Truth::False => Truth::False,
                _ => Truth::Unknown,
            },
        }
    }

    fn or(self, other: impl FnOnce() -> Truth) -> Self {
        match self {
            Truth::True => Truth::True,
            Truth::False => other(),
            Truth::Unknown => match other() {
                Truth::True => Truth::True,
                _ => Truth::Unknown,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Report `Unknown` when the prefix decides nothing.
    Definite,
    /// Resolve `Unknown` to true.
    Optimistic,
    /// Resolve `Unknown` to false.
    Pessimistic,
}

/// Evaluate `f` on a finite prefix, treating every position past its end as
/// undetermined (strong Kleene logic).
///
/// `True` means every infinite extension of `word` satisfies `f`, `False`
/// that none does. The converse may fail for formulae whose truth depends on
/// tautologies spanning unseen positions.
pub fn semantics_eval(f: &Formula, word: &[usize], mode: EvalMode) -> Truth {
    let t = eval(f, word, 0);
    match (mode, t) {
        (EvalMode::Optimistic, Truth::Unknown) => Truth::True,
        (EvalMode::Pessimistic, Truth::Unknown) => Truth::False,
        _ => t,
    }
}

fn eval(f: &Formula, w: &[usize], i: usize) -> Truth {
    let known = i < w.len();
    match f {
        Formula::True => Truth::True,
        Formula::False => Truth::False,
        Formula::Atom(a) => {
            if known {
                Truth::from_bool(w[i] == *a)
            } else {
                Truth::Unknown
            }
        }
        Formula::Not(g) => eval(g, w, i).not(),
        Formula::And(a, b) => eval(a, w, i).and(|| eval(b, w, i)),
        Formula::Or(a, b) => eval(a, w, i).or(|| eval(b, w, i)),
        Formula::Next(g) => eval(g, w, i + 1),
        Formula::Until(_, b, Bound::Finite(0)) => eval(b, w, i),
        Formula::Until(a, b, Bound::Finite(n)) => {
            let rest = Formula::Until(a.clone(), b.clone(), Bound::Finite(n - 1));
            eval(b, w, i).or(|| eval(a, w, i).and(|| eval(&rest, w, i + 1)))
        }
        Formula::Until(a, b, Bound::Infinite) | Formula::WeakUntil(a, b) => {
            let tail = || if known { eval(f, w, i + 1) } else { Truth::Unknown };
            eval(b, w, i).or(|| eval(a, w, i).and(tail))
        }
        Formula::Eventually(g, Bound::Finite(0)) | Formula::Always(g, Bound::Finite(0)) => {
            eval(g, w, i)
        }
        Formula::Eventually(g, Bound::Finite(n)) => {
            let rest = Formula::Eventually(g.clone(), Bound::Finite(n - 1));
            eval(g, w, i).or(|| eval(&rest, w, i + 1))
        }
        Formula::Always(g, Bound::Finite(n)) => {
            let rest = Formula::Always(g.clone(), Bound::Finite(n - 1));
            eval(g, w, i).and(|| eval(&rest, w, i + 1))
        }
        Formula::Eventually(g, Bound::Infinite) => {
            let tail = || if known { eval(f, w, i + 1) } else { Truth::Unknown };
            eval(g, w, i).or(tail)
        }
        Formula::Always(g, Bound::Infinite) => {
            let tail = || if known { eval(f, w, i + 1) } else { Truth::Unknown };
            eval(g, w, i).and(tail)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::parse_ltl;

    fn ab() -> Vec<String> {
        ["A", "B", "S"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn letters_and_bounded_until() {
        let a = ab();
        let f = parse_ltl("S", &a).unwrap();
        assert_eq!(semantics_eval(&f, &[2, 0], EvalMode::Definite), Truth::True);
        let f = parse_ltl("A U[2] B", &a).unwrap();
        assert_eq!(semantics_eval(&f, &[0, 0, 1], EvalMode::Definite), Truth::True);
        assert_eq!(semantics_eval(&f, &[0, 0, 0], EvalMode::Definite), Truth::False);
        assert_eq!(semantics_eval(&f, &[0, 0], EvalMode::Definite), Truth::Unknown);
    }

    #[test]
    fn safety_has_no_good_prefix() {
        let a = ab();
        let f = parse_ltl("G S", &a).unwrap();
        assert_eq!(semantics_eval(&f, &[2, 2], EvalMode::Definite), Truth::Unknown);
        assert_eq!(semantics_eval(&f, &[2, 2], EvalMode::Optimistic), Truth::True);
        assert_eq!(semantics_eval(&f, &[2, 2], EvalMode::Pessimistic), Truth::False);
        assert_eq!(semantics_eval(&f, &[2, 0], EvalMode::Definite), Truth::False);
    }

    #[test]
    fn constants_past_the_end() {
        let a = ab();
        let f = parse_ltl("X X X true", &a).unwrap();
        assert_eq!(semantics_eval(&f, &[0], EvalMode::Definite), Truth::True);
        let f = parse_ltl("A U true", &a).unwrap();
        assert_eq!(semantics_eval(&f, &[], EvalMode::Definite), Truth::True);
    }
}
