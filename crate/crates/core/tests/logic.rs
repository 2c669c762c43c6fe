mod common;

use std::collections::HashMap;

use common::{dfa_accepts, random_cosafe, rng, words};
use proptest::prelude::*;
use rand::Rng;

use stochctl::automata::{parse_automaton, Acceptance, DetAutomaton, RunVerdict};
use stochctl::ltl::{
    classify, parse_ltl, progress, scltl_to_dfa, semantics_eval, to_nnf, unparse, Bound, EvalMode, Formula,
    FragmentClass, TranslateOptions, Truth,
};

const TASK1_NEG: &str = include_str!("../data/task1_neg.aut");
const TASK2: &str = include_str!("../data/task2.aut");

fn alphabet(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Whether a bijection of states maps one automaton onto the other,
/// initial state to initial state, transitions and finals included.
fn isomorphic(a: &DetAutomaton, b: &DetAutomaton) -> bool {
    if a.n_states() != b.n_states() || a.alphabet() != b.alphabet() {
        return false;
    }
    let (Some(fa), Some(fb)) = (a.finals(), b.finals()) else {
        return false;
    };
    let mut map: HashMap<usize, usize> = HashMap::new();
    let mut stack = vec![(a.initial(), b.initial())];
    while let Some((p, q)) = stack.pop() {
        match map.get(&p) {
            Some(&m) if m != q => return false,
            Some(_) => continue,
            None => {}
        }
        if map.values().any(|&m| m == q) || fa.contains(&p) != fb.contains(&q) {
            return false;
        }
        map.insert(p, q);
        for l in 0..a.alphabet().len() {
            stack.push((a.next(p, l), b.next(q, l)));
        }
    }
    map.len() == a.n_states()
}

#[test]
fn corridor_formula_translates_to_the_bundled_automaton() {
    let ab = alphabet(&["S", "G1", "G2", "G", "BOT"]);
    let f = parse_ltl("S U ((G1 & (G1 U G)) | (G2 & (G2 U G)))", &ab).unwrap();
    let dfa = scltl_to_dfa(&f, &ab, TranslateOptions::default()).unwrap();
    let bundled = parse_automaton(TASK2).unwrap();
    assert_eq!(dfa.n_states(), 5);
    assert!(isomorphic(&dfa, &bundled));

    // with the leading conjunct the first letter must be S, so G1 at time 0 rejects
    let strict = parse_ltl("S & (S U ((G1 & (G1 U G)) | (G2 & (G2 U G))))", &ab).unwrap();
    let strict = scltl_to_dfa(&strict, &ab, TranslateOptions::default()).unwrap();
    assert!(!dfa_accepts(&strict, &[1, 3]));
    assert!(dfa_accepts(&dfa, &[1, 3]));
}

#[test]
fn bundled_automata_runs() {
    let task1 = parse_automaton(TASK1_NEG).unwrap();
    let run = task1.run_named(&["S", "S", "BOT"]).unwrap();
    assert_eq!(run.states, vec![0, 0, 0, 1]);
    assert_eq!(run.verdict, RunVerdict::Accepted);

    let task2 = parse_automaton(TASK2).unwrap();
    let run = task2.run_named(&["S", "G1", "G"]).unwrap();
    assert_eq!(run.states, vec![0, 0, 1, 4]);
    assert_eq!(run.verdict, RunVerdict::Accepted);

    let empty = task2.run(&[]).unwrap();
    assert_eq!(empty.states, vec![0]);
    assert_ne!(empty.verdict, RunVerdict::Accepted);
}

#[test]
fn bounded_until_on_a_short_word() {
    let ab = alphabet(&["A", "B"]);
    let f = parse_ltl("A U[2] B", &ab).unwrap();
    assert_eq!(f, Formula::until(Formula::Atom(0), Formula::Atom(1), Bound::Finite(2)));
    assert_eq!(semantics_eval(&f, &[0, 0, 1], EvalMode::Definite), Truth::True);
    let g = parse_ltl("G A", &ab).unwrap();
    assert_eq!(semantics_eval(&g, &[0, 0], EvalMode::Definite), Truth::Unknown);
    assert_eq!(semantics_eval(&g, &[0, 0], EvalMode::Optimistic), Truth::True);
    assert_eq!(semantics_eval(&g, &[0, 0], EvalMode::Pessimistic), Truth::False);
}

#[test]
fn fragments() {
    let ab = alphabet(&["S", "G"]);
    let class = |s: &str| classify(&to_nnf(&parse_ltl(s, &ab).unwrap()));
    assert_eq!(class("X X S"), FragmentClass::Bounded);
    assert_eq!(class("S U G"), FragmentClass::CoSafe);
    assert_eq!(class("G S"), FragmentClass::Safe);
    assert_eq!(class("G F S"), FragmentClass::General);
}

#[test]
fn progression_steps() {
    let ab = alphabet(&["A", "B", "C"]);
    let until = parse_ltl("A U B", &ab).unwrap();
    assert_eq!(progress(&until, 0).unwrap(), until);
    assert_eq!(progress(&until, 1).unwrap(), Formula::True);
    let next = parse_ltl("X C", &ab).unwrap();
    for l in 0..3 {
        assert_eq!(progress(&next, l).unwrap(), Formula::Atom(2));
    }
}

#[test]
fn one_step_bounded_until_needs_a_waiting_state() {
    let ab = alphabet(&["A", "B", "C"]);
    let f = parse_ltl("A U[1] B", &ab).unwrap();
    let dfa = scltl_to_dfa(&f, &ab, TranslateOptions::default()).unwrap();
    // start, waiting for B after an A, accept, reject
    assert_eq!(dfa.n_states(), 4);
    assert!(matches!(dfa.acceptance(), Acceptance::BoundedReach { .. }));
    for w in words(3, 2) {
        let sem = semantics_eval(&f, &w, EvalMode::Definite) == Truth::True;
        assert_eq!(dfa_accepts(&dfa, &w), sem, "{w:?}");
    }
}

#[test]
fn negated_until_is_weak_until_of_negations() {
    let ab = alphabet(&["A", "B", "C"]);
    let f = Formula::not(parse_ltl("A U B", &ab).unwrap());
    let nnf = to_nnf(&f);
    let expected = Formula::weak_until(
        Formula::not(Formula::Atom(1)),
        Formula::and(Formula::not(Formula::Atom(0)), Formula::not(Formula::Atom(1))),
    );
    for w in words(3, 3) {
        let a = semantics_eval(&nnf, &w, EvalMode::Definite);
        assert_eq!(a, semantics_eval(&f, &w, EvalMode::Definite), "{w:?}");
        assert_eq!(a, semantics_eval(&expected, &w, EvalMode::Definite), "{w:?}");
    }
}

/// Random formula of any fragment.
fn random_formula<R: Rng>(rng: &mut R, k: usize, depth: usize) -> Formula {
    if depth == 0 || rng.random::<f64>() < 0.2 {
        return Formula::Atom(rng.random_range(0..k));
    }
    let sub = |rng: &mut R| random_formula(rng, k, depth - 1);
    let bound = |rng: &mut R| {
        if rng.random::<f64>() < 0.5 {
            Bound::Finite(rng.random_range(0..3))
        } else {
            Bound::Infinite
        }
    };
    match rng.random_range(0..8) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => Formula::next(sub(rng)),
        4 => {
            let b = bound(rng);
            Formula::until(sub(rng), sub(rng), b)
        }
        5 => Formula::weak_until(sub(rng), sub(rng)),
        6 => {
            let b = bound(rng);
            Formula::eventually(sub(rng), b)
        }
        _ => {
            let b = bound(rng);
            Formula::always(sub(rng), b)
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn automaton_agrees_with_prefix_semantics(seed in any::<u64>(), k in 2usize..=3) {
        let mut r = rng(seed);
        let f = random_cosafe(&mut r, k, 3);
        let ab: Vec<String> = ["A", "B", "C"][..k].iter().map(|s| s.to_string()).collect();
        let dfa = scltl_to_dfa(&f, &ab, TranslateOptions::default()).unwrap();
        for len in 0..=4 {
            for w in words(k, len) {
                let sem = semantics_eval(&f, &w, EvalMode::Definite) == Truth::True;
                // a definite verdict is always reflected by the automaton
                if sem {
                    prop_assert!(dfa_accepts(&dfa, &w), "{} on {:?}", unparse(&f, &ab), w);
                }
                if dfa_accepts(&dfa, &w) {
                    prop_assert_ne!(semantics_eval(&f, &w, EvalMode::Definite), Truth::False);
                }
            }
        }
    }

    #[test]
    fn negation_normal_form_keeps_meaning(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = random_formula(&mut r, 3, 3);
        let nnf = to_nnf(&f);
        for len in 0..=4 {
            for w in words(3, len) {
                prop_assert_eq!(
                    semantics_eval(&f, &w, EvalMode::Definite),
                    semantics_eval(&nnf, &w, EvalMode::Definite)
                );
            }
        }
    }

    #[test]
    fn unparse_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = random_formula(&mut r, 3, 4);
        let ab = alphabet(&["S", "G", "X"]);
        let text = unparse(&f, &ab);
        prop_assert_eq!(parse_ltl(&text, &ab).unwrap(), f, "{}", text);
    }
}
