use super::{Bound, Formula, FragmentClass};

/// Push negations down to atoms.
///
/// Until dualities used here:
/// `!(a U b) = (!b) W (!a & !b)`,
/// `!(a W b) = (!b) U (!a & !b)` and
/// `!(a U[n] b) = ((!b) U[n] (!a & !b)) | G[n] !b`.
pub fn to_nnf(f: &Formula) -> Formula {
    pos(f)
}

fn pos(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => f.clone(),
        Formula::Not(g) => neg(g),
        Formula::And(a, b) => Formula::and(pos(a), pos(b)),
        Formula::Or(a, b) => Formula::or(pos(a), pos(b)),
        Formula::Next(g) => Formula::next(pos(g)),
        Formula::Until(a, b, k) => Formula::until(pos(a), pos(b), *k),
        Formula::WeakUntil(a, b) => Formula::weak_until(pos(a), pos(b)),
        Formula::Eventually(g, k) => Formula::eventually(pos(g), *k),
        Formula::Always(g, k) => Formula::always(pos(g), *k),
    }
}

fn neg(f: &Formula) -> Formula {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Atom(a) => Formula::not(Formula::Atom(*a)),
        Formula::Not(g) => pos(g),
        Formula::And(a, b) => Formula::or(neg(a), neg(b)),
        Formula::Or(a, b) => Formula::and(neg(a), neg(b)),
        Formula::Next(g) => Formula::next(neg(g)),
        Formula::Until(a, b, Bound::Infinite) => {
            Formula::weak_until(neg(b), Formula::and(neg(a), neg(b)))
        }
        Formula::Until(a, b, Bound::Finite(n)) => Formula::or(
            Formula::until(neg(b), Formula::and(neg(a), neg(b)), Bound::Finite(*n)),
            Formula::always(neg(b), Bound::Finite(*n)),
        ),
        Formula::WeakUntil(a, b) => {
            Formula::until(neg(b), Formula::and(neg(a), neg(b)), Bound::Infinite)
        }
        Formula::Eventually(g, k) => Formula::always(neg(g), *k),
        Formula::Always(g, k) => Formula::eventually(neg(g), *k),
    }
}

pub(crate) fn is_nnf(f: &Formula) -> bool {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => true,
        Formula::Not(g) => matches!(**g, Formula::Atom(_)),
        Formula::Next(g) | Formula::Eventually(g, _) | Formula::Always(g, _) => is_nnf(g),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b, _) | Formula::WeakUntil(a, b) => {
            is_nnf(a) && is_nnf(b)
        }
    }
}

#[derive(Default)]
struct Ops {
    until_inf: bool,
    weak: bool,
    eventually_inf: bool,
    always_inf: bool,
}

fn scan(f: &Formula, ops: &mut Ops) {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => {}
        Formula::Not(g) | Formula::Next(g) => scan(g, ops),
        Formula::And(a, b) | Formula::Or(a, b) => {
            scan(a, ops);
            scan(b, ops);
        }
        Formula::Until(a, b, k) => {
            ops.until_inf |= !k.is_finite();
            scan(a, ops);
            scan(b, ops);
        }
        Formula::WeakUntil(a, b) => {
            ops.weak = true;
            scan(a, ops);
            scan(b, ops);
        }
        Formula::Eventually(g, k) => {
            ops.eventually_inf |= !k.is_finite();
            scan(g, ops);
        }
        Formula::Always(g, k) => {
            ops.always_inf |= !k.is_finite();
            scan(g, ops);
        }
    }
}

/// Syntactic fragment of an NNF formula; non-NNF input is normalised first.
pub fn classify(f: &Formula) -> FragmentClass {
    let owned;
    let f = if is_nnf(f) {
        f
    } else {
        owned = to_nnf(f);
        &owned
    };
    let mut ops = Ops::default();
    scan(f, &mut ops);
    let growing = ops.until_inf || ops.eventually_inf;
    let shrinking = ops.weak || ops.always_inf;
    match (growing, shrinking) {
        (false, false) => FragmentClass::Bounded,
        (true, false) => FragmentClass::CoSafe,
        (false, true) => FragmentClass::Safe,
        (true, true) => FragmentClass::General,
    }
}
