//! Random instances and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stochctl::automata::{Acceptance, DetAutomaton};
use stochctl::ltl::{Bound, Formula};
use stochctl::mdp::{Labeling, Mdp, MdpBuilder, StateSet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Explicit model kept alongside the engine copy: `rows[x][a]` is `None`
/// for infeasible pairs, otherwise a dense distribution.
#[derive(Debug, Clone)]
pub struct Toy {
    pub rows: Vec<Vec<Option<Vec<f64>>>>,
    pub mdp: Mdp,
}

impl Toy {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn feasible(&self, x: usize) -> impl Iterator<Item = (usize, &Vec<f64>)> + '_ {
        self.rows[x].iter().enumerate().filter_map(|(a, r)| r.as_ref().map(|r| (a, r)))
    }

    pub fn from_rows(rows: Vec<Vec<Option<Vec<f64>>>>) -> Self {
        let n = rows.len();
        let m = rows.iter().map(Vec::len).max().unwrap_or(1);
        let mut b = MdpBuilder::new(n, m);
        for (x, acts) in rows.iter().enumerate() {
            for (a, r) in acts.iter().enumerate() {
                if let Some(r) = r {
                    b.set_dense_row(x, a, r).unwrap();
                }
            }
        }
        let mdp = b.build().unwrap();
        // read back what the engine stores so both sides use the same numbers
        let rows = (0..n)
            .map(|x| {
                (0..m)
                    .map(|a| {
                        mdp.actions.is_feasible(x, a).then(|| {
                            let mut dense = vec![0.0; n];
                            for (j, p) in mdp.row(x, a).unwrap() {
                                dense[j as usize] = p;
                            }
                            dense
                        })
                    })
                    .collect()
            })
            .collect();
        Self { rows, mdp }
    }

    pub fn labelled(mut self, labeling: Labeling) -> Self {
        self.mdp = self.mdp.with_labeling(labeling).unwrap();
        self
    }
}

/// Random model with `n` states and up to `m` actions; every state keeps at
/// least one feasible action and rows have random zero patterns.
pub fn random_toy<R: Rng>(rng: &mut R, n: usize, m: usize) -> Toy {
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let keep = rng.random_range(0..m);
        let mut acts = Vec::with_capacity(m);
        for a in 0..m {
            if a != keep && rng.random::<f64>() < 0.2 {
                acts.push(None);
                continue;
            }
            let mut r: Vec<f64> = (0..n)
                .map(|_| if rng.random::<f64>() < 0.4 { 0.0 } else { rng.random::<f64>() })
                .collect();
            if r.iter().all(|&p| p == 0.0) {
                r[rng.random_range(0..n)] = 1.0;
            }
            let total: f64 = r.iter().sum();
            r.iter_mut().for_each(|p| *p /= total);
            acts.push(Some(r));
        }
        rows.push(acts);
    }
    Toy::from_rows(rows)
}

pub fn random_set<R: Rng>(rng: &mut R, n: usize, p: f64) -> StateSet {
    StateSet::from_predicate(n, |_| rng.random::<f64>() < p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Opt {
    Max,
    Min,
}

impl Opt {
    pub fn pick(self, a: f64, b: f64) -> f64 {
        match self {
            Opt::Max => a.max(b),
            Opt::Min => a.min(b),
        }
    }

    pub fn start(self) -> f64 {
        match self {
            Opt::Max => f64::NEG_INFINITY,
            Opt::Min => f64::INFINITY,
        }
    }
}

/// Optimal `P(S U^n G)` from `x` over history-dependent deterministic
/// policies: every node of the path tree picks its own action.
pub fn expectimax_until(toy: &Toy, safe: &StateSet, goal: &StateSet, x: usize, n: usize, opt: Opt) -> f64 {
    if goal.contains(x) {
        return 1.0;
    }
    if !safe.contains(x) || n == 0 {
        return 0.0;
    }
    let mut best = opt.start();
    for (_, row) in toy.feasible(x) {
        let v: f64 = row
            .iter()
            .enumerate()
            .filter(|e| *e.1 > 0.0)
            .map(|(y, &p)| p * expectimax_until(toy, safe, goal, y, n - 1, opt))
            .sum();
        best = opt.pick(best, v);
    }
    best
}

/// Optimal `P(S U^n G)` from `x` by enumerating deterministic Markov
/// policies. Rules only matter on states carrying mass at their time step,
/// so each rule is enumerated over that support.
pub fn markov_enumeration_until(toy: &Toy, safe: &StateSet, goal: &StateSet, x: usize, n: usize, opt: Opt) -> f64 {
    let mut dist = vec![0.0; toy.n()];
    dist[x] = 1.0;
    let mut best = opt.start();
    enumerate_rules(toy, safe, goal, &dist, 0.0, n, opt, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn enumerate_rules(toy: &Toy, safe: &StateSet, goal: &StateSet, dist: &[f64], hit: f64, left: usize, opt: Opt, best: &mut f64) {
    let mut hit = hit;
    let mut alive = vec![0.0; dist.len()];
    for (y, &p) in dist.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        if goal.contains(y) {
            hit += p;
        } else if safe.contains(y) {
            alive[y] = p;
        }
    }
    let support: Vec<usize> = (0..alive.len()).filter(|&y| alive[y] > 0.0).collect();
    if left == 0 || support.is_empty() {
        *best = opt.pick(*best, hit);
        return;
    }
    let choices: Vec<Vec<usize>> = support.iter().map(|&y| toy.feasible(y).map(|(a, _)| a).collect()).collect();
    let mut idx = vec![0usize; support.len()];
    loop {
        let mut next = vec![0.0; dist.len()];
        for (k, &y) in support.iter().enumerate() {
            let row = toy.rows[y][choices[k][idx[k]]].as_ref().unwrap();
            for (z, &p) in row.iter().enumerate() {
                next[z] += alive[y] * p;
            }
        }
        enumerate_rules(toy, safe, goal, &next, hit, left - 1, opt, best);
        // odometer over the rule
        let mut k = 0;
        loop {
            if k == idx.len() {
                return;
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Whether the finite word drives a reach automaton into a final state.
pub fn dfa_accepts(aut: &DetAutomaton, word: &[usize]) -> bool {
    let finals = match aut.acceptance() {
        Acceptance::Reach(f) => f.clone(),
        Acceptance::BoundedReach { finals, horizon } => {
            let run = word.len().min(*horizon as usize);
            return prefix_hits(aut, &word[..run], finals);
        }
        other => panic!("not a reach automaton: {}", other.kind()),
    };
    prefix_hits(aut, word, &finals)
}

fn prefix_hits(aut: &DetAutomaton, word: &[usize], finals: &[usize]) -> bool {
    let mut q = aut.initial();
    if finals.contains(&q) {
        return true;
    }
    for &l in word {
        q = aut.next(q, l);
        if finals.contains(&q) {
            return true;
        }
    }
    false
}

/// All words of length `len` over `k` letters.
pub fn words(k: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..k).map(move |l| {
                    let mut w = w.clone();
                    w.push(l);
                    w
                })
            })
            .collect();
    }
    out
}

/// Random formula of the co-safe fragment (no unbounded always, no weak
/// until) with nesting depth at most `depth`.
pub fn random_cosafe<R: Rng>(rng: &mut R, k: usize, depth: usize) -> Formula {
    let leaf = |rng: &mut R| {
        let a = Formula::Atom(rng.random_range(0..k));
        if rng.random::<f64>() < 0.25 {
            Formula::not(a)
        } else {
            a
        }
    };
    if depth == 0 || rng.random::<f64>() < 0.2 {
        return leaf(rng);
    }
    let bound = |rng: &mut R| {
        if rng.random::<f64>() < 0.5 {
            Bound::Finite(rng.random_range(0..3))
        } else {
            Bound::Infinite
        }
    };
    match rng.random_range(0..7) {
        0 => Formula::and(random_cosafe(rng, k, depth - 1), random_cosafe(rng, k, depth - 1)),
        1 => Formula::or(random_cosafe(rng, k, depth - 1), random_cosafe(rng, k, depth - 1)),
        2 => Formula::next(random_cosafe(rng, k, depth - 1)),
        3 => {
            let b = bound(rng);
            Formula::until(random_cosafe(rng, k, depth - 1), random_cosafe(rng, k, depth - 1), b)
        }
        4 => {
            let b = bound(rng);
            Formula::eventually(random_cosafe(rng, k, depth - 1), b)
        }
        5 => Formula::always(random_cosafe(rng, k, depth - 1), Bound::Finite(rng.random_range(0..3))),
        _ => leaf(rng),
    }
}

/// Labelled toy with letters drawn at random from `alphabet`.
pub fn random_labelled_toy<R: Rng>(rng: &mut R, n: usize, m: usize, alphabet: &[&str]) -> Toy {
    let toy = random_toy(rng, n, m);
    let letters = (0..n).map(|_| rng.random_range(0..alphabet.len()) as u32).collect();
    let labeling = Labeling::new(alphabet.iter().map(|s| s.to_string()).collect(), letters).unwrap();
    toy.labelled(labeling)
}
