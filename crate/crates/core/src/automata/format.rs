use std::fmt::Write;

use super::{Acceptance, AutomatonError, DetAutomaton, RabinPair};

fn perr(line: usize, msg: impl Into<String>) -> AutomatonError {
    AutomatonError::Parse {
        line,
        msg: msg.into(),
    }
}

fn states_list(line: usize, text: &str) -> Result<Vec<usize>, AutomatonError> {
    text.split_whitespace()
        .map(|t| t.parse().map_err(|_| perr(line, format!("bad state `{t}`"))))
        .collect()
}

pub fn parse_automaton(text: &str) -> Result<DetAutomaton, AutomatonError> {
    let mut alphabet: Option<Vec<String>> = None;
    let mut n_states: Option<usize> = None;
    let mut initial: Option<usize> = None;
    let mut acceptance: Option<Acceptance> = None;
    let mut rabin_expected = 0usize;
    let mut pairs: Vec<RabinPair> = Vec::new();
    let mut trans: Vec<Vec<Option<usize>>> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| perr(ln, "expected `key: value`"))?;
        let rest = rest.trim();
        match key.trim() {
            "alphabet" => {
                let letters: Vec<String> = rest.split_whitespace().map(String::from).collect();
                if letters.is_empty() {
                    return Err(perr(ln, "empty alphabet"));
                }
                alphabet = Some(letters);
            }
            "states" => {
                let n: usize = rest.parse().map_err(|_| perr(ln, "bad state count"))?;
                n_states = Some(n);
                trans = vec![Vec::new(); n];
            }
            "initial" => initial = Some(rest.parse().map_err(|_| perr(ln, "bad initial state"))?),
            "acceptance" => {
                let mut parts = rest.split_whitespace();
                let kind = parts.next().ok_or_else(|| perr(ln, "missing acceptance kind"))?;
                let tail: Vec<&str> = parts.collect();
                acceptance = Some(match kind {
                    "reach" => Acceptance::Reach(states_list(ln, &tail.join(" "))?),
                    "buchi" => Acceptance::Buchi(states_list(ln, &tail.join(" "))?),
                    "reach-bounded" => {
                        let (n, f) = tail.split_first().ok_or_else(|| perr(ln, "missing horizon"))?;
                        Acceptance::BoundedReach {
                            horizon: n.parse().map_err(|_| perr(ln, "bad horizon"))?,
                            finals: states_list(ln, &f.join(" "))?,
                        }
                    }
                    "rabin" => {
                        rabin_expected = tail
                            .first()
                            .and_then(|k| k.parse().ok())
                            .ok_or_else(|| perr(ln, "rabin needs a pair count"))?;
                        Acceptance::Rabin(Vec::new())
                    }
                    other => return Err(perr(ln, format!("unknown acceptance `{other}`"))),
                });
            }
            "pair" => {
                let (a, b) = rest
                    .split_once(';')
                    .ok_or_else(|| perr(ln, "pair needs `F' ; F''`"))?;
                pairs.push(RabinPair {
                    infinitely: states_list(ln, a)?,
                    finitely: states_list(ln, b)?,
                });
            }
            "trans" => {
                let letters = alphabet
                    .as_ref()
                    .ok_or_else(|| perr(ln, "transition before alphabet"))?;
                let n = n_states.ok_or_else(|| perr(ln, "transition before state count"))?;
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(perr(ln, "expected `trans: q letter q'`"));
                }
                let q: usize = parts[0].parse().map_err(|_| perr(ln, "bad source state"))?;
                let t: usize = parts[2].parse().map_err(|_| perr(ln, "bad target state"))?;
                let l = letters
                    .iter()
                    .position(|a| a == parts[1])
                    .ok_or_else(|| AutomatonError::UnknownLetter(parts[1].to_string()))?;
                for s in [q, t] {
                    if s >= n {
                        return Err(AutomatonError::StateOutOfRange { state: s, count: n });
                    }
                }
                let row = &mut trans[q];
                if row.is_empty() {
                    *row = vec![None; letters.len()];
                }
                if row[l].is_some() {
                    return Err(AutomatonError::DuplicateTransition {
                        state: q,
                        letter: parts[1].to_string(),
                    });
                }
                row[l] = Some(t);
            }
            other => return Err(perr(ln, format!("unknown key `{other}`"))),
        }
    }

    let alphabet = alphabet.ok_or_else(|| perr(0, "missing alphabet"))?;
    let n = n_states.ok_or_else(|| perr(0, "missing state count"))?;
    let initial = initial.ok_or_else(|| perr(0, "missing initial state"))?;
    let mut acceptance = acceptance.ok_or_else(|| perr(0, "missing acceptance"))?;
    if let Acceptance::Rabin(p) = &mut acceptance {
        if pairs.len() != rabin_expected {
            return Err(perr(
                0,
                format!("expected {rabin_expected} rabin pairs, found {}", pairs.len()),
            ));
        }
        *p = pairs;
    } else if !pairs.is_empty() {
        return Err(perr(0, "pair lines without rabin acceptance"));
    }
    let mut full = Vec::with_capacity(n);
    for (q, row) in trans.into_iter().enumerate() {
        let mut out = Vec::with_capacity(alphabet.len());
        for (l, t) in (0..alphabet.len()).map(|l| (l, row.get(l).copied().flatten())) {
            out.push(t.ok_or_else(|| AutomatonError::MissingTransition {
                state: q,
                letter: alphabet[l].clone(),
            })?);
        }
        full.push(out);
    }
    DetAutomaton::new(alphabet, initial, full, acceptance)
}

fn join(states: &[usize]) -> String {
    states.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(" ")
}

/// Canonical text: states ascending, letters in alphabet order.
pub fn serialize_automaton(a: &DetAutomaton) -> String {
    let mut s = String::new();
    writeln!(s, "alphabet: {}", a.alphabet().join(" ")).unwrap();
    writeln!(s, "states: {}", a.n_states()).unwrap();
    writeln!(s, "initial: {}", a.initial()).unwrap();
    match a.acceptance() {
        Acceptance::Reach(f) => writeln!(s, "acceptance: reach {}", join(f)).unwrap(),
        Acceptance::Buchi(f) => writeln!(s, "acceptance: buchi {}", join(f)).unwrap(),
        Acceptance::BoundedReach { horizon, finals } => {
            writeln!(s, "acceptance: reach-bounded {horizon} {}", join(finals)).unwrap()
        }
        Acceptance::Rabin(pairs) => {
            writeln!(s, "acceptance: rabin {}", pairs.len()).unwrap();
            for p in pairs {
                writeln!(s, "pair: {} ; {}", join(&p.infinitely), join(&p.finitely)).unwrap();
            }
        }
    }
    for q in 0..a.n_states() {
        for (l, name) in a.alphabet().iter().enumerate() {
            writeln!(s, "trans: {q} {name} {}", a.next(q, l)).unwrap();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::RunVerdict;

    const TASK1: &str = include_str!("../../data/task1.aut");
    const TASK1_NEG: &str = include_str!("../../data/task1_neg.aut");
    const TASK2: &str = include_str!("../../data/task2.aut");

    #[test]
    fn bundled_automata_parse() {
        let dba = parse_automaton(TASK1).unwrap();
        assert_eq!(dba.n_states(), 2);
        assert_eq!(dba.acceptance(), &Acceptance::Buchi(vec![0]));
        let dfa = parse_automaton(TASK1_NEG).unwrap();
        assert_eq!(dfa.acceptance(), &Acceptance::Reach(vec![1]));
        assert_eq!(dfa.next(1, 0), 1);
        assert_eq!(dfa.next(1, 1), 1);
        let t2 = parse_automaton(TASK2).unwrap();
        assert_eq!(t2.n_states(), 5);
    }

    #[test]
    fn runs() {
        let dfa = parse_automaton(TASK1_NEG).unwrap();
        let r = dfa.run_named(&["S", "S", "BOT"]).unwrap();
        assert_eq!(r.states, vec![0, 0, 0, 1]);
        assert_eq!(r.verdict, RunVerdict::Accepted);
        let r = dfa.run(&[]).unwrap();
        assert_eq!(r.states, vec![0]);
        assert!(matches!(r.verdict, RunVerdict::Undetermined { .. }));
        let t2 = parse_automaton(TASK2).unwrap();
        let r = t2.run_named(&["S", "G1", "G"]).unwrap();
        assert_eq!(r.states.last(), Some(&4));
        assert_eq!(r.verdict, RunVerdict::Accepted);
        assert_eq!(t2.run_named(&["S", "BOT"]).unwrap().verdict, RunVerdict::Rejected);
        let dba = parse_automaton(TASK1).unwrap();
        assert_eq!(
            dba.run_named(&["S", "BOT", "S"]).unwrap().verdict,
            RunVerdict::Undetermined { recent: vec![0, 1] }
        );
        assert!(matches!(dfa.run_named(&["Z"]), Err(AutomatonError::UnknownLetter(_))));
    }

    #[test]
    fn round_trip() {
        for text in [TASK1, TASK1_NEG, TASK2] {
            let a = parse_automaton(text).unwrap();
            assert_eq!(parse_automaton(&serialize_automaton(&a)).unwrap(), a);
        }
        let rabin = "alphabet: a b\nstates: 2\ninitial: 0\nacceptance: rabin 2\npair: 0 ; 1\npair: 1 ;\n\
                     trans: 0 a 0\ntrans: 0 b 1\ntrans: 1 a 0\ntrans: 1 b 1\n";
        let a = parse_automaton(rabin).unwrap();
        assert_eq!(parse_automaton(&serialize_automaton(&a)).unwrap(), a);
    }

    #[test]
    fn validation_errors() {
        let missing = TASK1_NEG.replace("trans: 1 S 1\n", "");
        assert_eq!(
            parse_automaton(&missing).unwrap_err(),
            AutomatonError::MissingTransition {
                state: 1,
                letter: "S".into()
            }
        );
        let dup = format!("{TASK1_NEG}trans: 0 S 1\n");
        assert!(matches!(
            parse_automaton(&dup),
            Err(AutomatonError::DuplicateTransition { state: 0, .. })
        ));
        let range = TASK1_NEG.replace("reach 1", "reach 7");
        assert!(matches!(parse_automaton(&range), Err(AutomatonError::StateOutOfRange { .. })));
        let leaky = TASK1_NEG.replace("trans: 1 S 1", "trans: 1 S 0");
        assert_eq!(parse_automaton(&leaky).unwrap_err(), AutomatonError::NonAbsorbingFinal(1));
    }
}
