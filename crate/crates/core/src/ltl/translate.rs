use std::collections::{HashMap, VecDeque};

use super::nnf::to_nnf;
use super::{classify, Dnf, Formula, FragmentClass, LtlError};
use crate::automata::{Acceptance, DetAutomaton};

pub const DEFAULT_STATE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy)]
pub struct TranslateOptions {
    pub state_cap: usize,
}

impl Default for TranslateOptions {
    fn default() -> Self {
        Self {
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

/// Reach automaton for a co-safe or bounded formula, built by progression.
///
/// States are the canonical forms reachable from the formula, explored
/// breadth-first with letters in alphabet order. The single accepting state
/// is the trivially true obligation. Bounded formulae get bounded-reach
/// acceptance whose horizon is the longest run before a sink is entered.
pub fn scltl_to_dfa(
    f: &Formula,
    alphabet: &[String],
    opts: TranslateOptions,
) -> Result<DetAutomaton, LtlError> {
    let nnf = to_nnf(f);
    let class = classify(&nnf);
    if !matches!(class, FragmentClass::Bounded | FragmentClass::CoSafe) {
        return Err(LtlError::Fragment);
    }
    let k = alphabet.len();
    let start = Dnf::from_formula(&nnf)?;
    let mut ids: HashMap<Dnf, usize> = HashMap::new();
    let mut states: Vec<Dnf> = Vec::new();
    let mut trans: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();

    let mut intern = |d: Dnf, states: &mut Vec<Dnf>, queue: &mut VecDeque<usize>| -> Result<usize, LtlError> {
        if let Some(&id) = ids.get(&d) {
            return Ok(id);
        }
        let id = states.len();
        if id >= opts.state_cap {
            return Err(LtlError::StateCap(opts.state_cap));
        }
        ids.insert(d.clone(), id);
        states.push(d);
        queue.push_back(id);
        Ok(id)
    };

    intern(start, &mut states, &mut queue)?;
    while let Some(q) = queue.pop_front() {
        let mut row = Vec::with_capacity(k);
        for letter in 0..k {
            let next = states[q].progress(letter);
            row.push(intern(next, &mut states, &mut queue)?);
        }
        if trans.len() <= q {
            trans.resize(q + 1, Vec::new());
        }
        trans[q] = row;
    }

    let finals: Vec<usize> = (0..states.len()).filter(|&q| states[q].is_true()).collect();
    let acceptance = if class == FragmentClass::Bounded {
        let sinks: Vec<bool> = states.iter().map(|d| d.is_true() || d.is_false()).collect();
        Acceptance::BoundedReach {
            horizon: longest_run(&trans, &sinks)?,
            finals,
        }
    } else {
        Acceptance::Reach(finals)
    };
    DetAutomaton::new(alphabet.to_vec(), 0, trans, acceptance)
        .map_err(|e| LtlError::Syntax {
            pos: 0,
            msg: format!("internal automaton error: {e}"),
        })
}

/// Number of letters after which every run from state 0 sits in a sink.
fn longest_run(trans: &[Vec<usize>], sinks: &[bool]) -> Result<u32, LtlError> {
    if sinks[0] {
        return Ok(0);
    }
    // longest path (in edges) among non-sink states, plus the edge into a sink
    let n = trans.len();
    let mut memo: Vec<Option<u32>> = vec![None; n];
    let mut on_stack = vec![false; n];
    fn visit(
        q: usize,
        trans: &[Vec<usize>],
        sinks: &[bool],
        memo: &mut Vec<Option<u32>>,
        on_stack: &mut Vec<bool>,
    ) -> Result<u32, LtlError> {
        if let Some(v) = memo[q] {
            return Ok(v);
        }
        if on_stack[q] {
            return Err(LtlError::Fragment);
        }
        on_stack[q] = true;
        let mut best = 0;
        for &t in &trans[q] {
            let len = if sinks[t] { 1 } else { 1 + visit(t, trans, sinks, memo, on_stack)? };
            best = best.max(len);
        }
        on_stack[q] = false;
        memo[q] = Some(best);
        Ok(best)
    }
    visit(0, trans, sinks, &mut memo, &mut on_stack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::parse_ltl;

    fn letters(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn eventually_goal() {
        let ab = letters(&["G", "S"]);
        let f = parse_ltl("F G", &ab).unwrap();
        let dfa = scltl_to_dfa(&f, &ab, TranslateOptions::default()).unwrap();
        assert_eq!(dfa.n_states(), 2);
        assert_eq!(dfa.acceptance(), &Acceptance::Reach(vec![1]));
        assert_eq!(dfa.next(0, 0), 1);
        assert_eq!(dfa.next(0, 1), 0);
        assert_eq!(dfa.next(1, 1), 1);
    }

    #[test]
    fn bounded_until_three_states() {
        let ab = letters(&["A", "B", "C"]);
        let f = parse_ltl("A U[1] B", &ab).unwrap();
        let dfa = scltl_to_dfa(&f, &ab, TranslateOptions::default()).unwrap();
        // from the start: A keeps waiting one step, B accepts, C rejects
        assert_eq!(dfa.n_states(), 4);
        match dfa.acceptance() {
            Acceptance::BoundedReach { horizon, .. } => assert_eq!(*horizon, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn refuses_safety_and_caps_states() {
        let ab = letters(&["A", "B"]);
        let g = parse_ltl("G A", &ab).unwrap();
        assert_eq!(scltl_to_dfa(&g, &ab, TranslateOptions::default()).unwrap_err(), LtlError::Fragment);
        let f = parse_ltl("F[5] A", &ab).unwrap();
        assert_eq!(
            scltl_to_dfa(&f, &ab, TranslateOptions { state_cap: 3 }).unwrap_err(),
            LtlError::StateCap(3)
        );
    }
}
