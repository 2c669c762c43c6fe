use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use super::{ActionSet, Mdp, ModelError, ROW_SUM_TOLERANCE};

/// Check that `row` sums to one within tolerance, then rescale it so that
/// the left-to-right floating-point sum is exactly `1.0`.
///
/// Exactness matters: a value function that is identically one must be a
/// fixed point of every expectation, otherwise rounding leaks into values
/// that should be exactly one.
pub fn normalize_exact(row: &mut [f64]) -> Result<(), f64> {
    let sum: f64 = row.iter().sum();
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(f64::NAN);
    }
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(sum);
    }
    for p in row.iter_mut() {
        *p /= sum;
    }
    let Some(largest) = (0..row.len()).max_by(|&a, &b| row[a].total_cmp(&row[b])) else {
        return Err(0.0);
    };
    for _ in 0..16 {
        let s: f64 = row.iter().sum();
        if s == 1.0 {
            break;
        }
        row[largest] += 1.0 - s;
    }
    Ok(())
}

/// Banded one-dimensional transition row: probabilities of landing in
/// cells `start, start + 1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor1d {
    pub start: usize,
    pub probs: Vec<f64>,
}

impl Factor1d {
    fn cdf_sample(&self, u: f64) -> usize {
        let mut cum = 0.0;
        let mut last = self.start;
        for (j, &p) in self.probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            cum += p;
            last = self.start + j;
            if u < cum {
                return last;
            }
        }
        last
    }
}

/// Kernel on a rectangular grid whose coordinates move independently
/// given the action: `T(x'|x,a) = prod_d P_d(x'_d | x_d, a)`.
///
/// Every action is feasible in every state.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableKernel {
    cells: Vec<usize>,
    strides: Vec<usize>,
    n_actions: usize,
    // factors[d][a * cells[d] + i]
    factors: Vec<Vec<Factor1d>>,
}

impl SeparableKernel {
    /// `factors[d][a * cells[d] + i]` is the row of coordinate `d` from cell
    /// `i` under action `a`. Each row is normalised exactly.
    pub fn new(
        cells: Vec<usize>,
        n_actions: usize,
        mut factors: Vec<Vec<Factor1d>>,
    ) -> Result<Self, ModelError> {
        if factors.len() != cells.len() {
            return Err(ModelError::LengthMismatch {
                expected: cells.len(),
                got: factors.len(),
            });
        }
        for (d, rows) in factors.iter_mut().enumerate() {
            if rows.len() != n_actions * cells[d] {
                return Err(ModelError::LengthMismatch {
                    expected: n_actions * cells[d],
                    got: rows.len(),
                });
            }
            for (r, row) in rows.iter_mut().enumerate() {
                let (a, i) = (r / cells[d], r % cells[d]);
                if row.start + row.probs.len() > cells[d] {
                    return Err(ModelError::IndexOutOfRange {
                        index: row.start + row.probs.len(),
                        limit: cells[d],
                    });
                }
                normalize_exact(&mut row.probs).map_err(|sum| {
                    if sum.is_nan() {
                        ModelError::BadProbability { state: i, action: a }
                    } else {
                        ModelError::RowSum {
                            state: i,
                            action: a,
                            sum,
                        }
                    }
                })?;
            }
        }
        let dims = cells.len();
        let mut strides = vec![1; dims];
        for d in (0..dims.saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * cells[d + 1];
        }
        Ok(Self {
            cells,
            strides,
            n_actions,
            factors,
        })
    }

    pub fn n_states(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn factor(&self, d: usize, a: usize, i: usize) -> &Factor1d {
        &self.factors[d][a * self.cells[d] + i]
    }

    fn coords(&self, x: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(&self.cells)
            .map(|(&s, &n)| (x / s) % n)
            .collect()
    }

    /// `(T_a f)(x)` for every state, contracting one axis at a time.
    fn apply_action(&self, a: usize, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let mut cur = f.to_vec();
        let mut next = vec![0.0; n];
        for d in 0..self.cells.len() {
            let len = self.cells[d];
            let inner = self.strides[d];
            let outer = n / (len * inner);
            next.iter_mut().for_each(|v| *v = 0.0);
            for o in 0..outer {
                let block = o * len * inner;
                for i in 0..len {
                    let row = self.factor(d, a, i);
                    let dst = block + i * inner;
                    if inner == 1 {
                        let src = &cur[block + row.start..block + row.start + row.probs.len()];
                        next[dst] = row.probs.iter().zip(src).map(|(p, v)| p * v).sum();
                    } else {
                        for (jj, &p) in row.probs.iter().enumerate() {
                            let src = block + (row.start + jj) * inner;
                            let (out, inp) = (&mut next[dst..dst + inner], &cur[src..src + inner]);
                            for (o, v) in out.iter_mut().zip(inp) {
                                *o += p * v;
                            }
                        }
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    fn sweep(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let m = self.n_actions;
        let per_action: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|a| self.apply_action(a, f))
            .collect();
        let mut out = vec![0.0; n * m];
        for (a, vals) in per_action.iter().enumerate() {
            for (x, &v) in vals.iter().enumerate() {
                out[x * m + a] = v;
            }
        }
        out
    }

    fn row_into(&self, x: usize, a: usize, buf: &mut Vec<(u32, f64)>) {
        buf.clear();
        let coords = self.coords(x);
        let rows: Vec<&Factor1d> = coords
            .iter()
            .enumerate()
            .map(|(d, &i)| self.factor(d, a, i))
            .collect();
        let dims = rows.len();
        let mut pos = vec![0usize; dims];
        loop {
            let mut p = 1.0;
            let mut idx = 0;
            for d in 0..dims {
                p *= rows[d].probs[pos[d]];
                idx += (rows[d].start + pos[d]) * self.strides[d];
            }
            if p > 0.0 {
                buf.push((idx as u32, p));
            }
            // odometer, last dimension fastest so indices ascend
            let mut d = dims;
            loop {
                if d == 0 {
                    return;
                }
                d -= 1;
                pos[d] += 1;
                if pos[d] < rows[d].probs.len() {
                    break;
                }
                pos[d] = 0;
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, x: usize, a: usize, rng: &mut R) -> usize {
        let coords = self.coords(x);
        let mut idx = 0;
        for (d, &i) in coords.iter().enumerate() {
            let u: f64 = rng.random();
            idx += self.factor(d, a, i).cdf_sample(u) * self.strides[d];
        }
        idx
    }
}

/// Kernel of a model composed with a deterministic automaton:
/// from `(x, q)` the model moves by its own kernel and the automaton moves to
/// a successor that depends only on `(x, q)`.
///
/// Product state `(x, q)` has index `x * q_count + q`.
#[derive(Debug, Clone)]
pub struct LiftedKernel {
    pub base: Arc<Mdp>,
    pub q_count: usize,
    /// `successor[x * q_count + q]`
    pub successor: Vec<u32>,
}

impl LiftedKernel {
    fn split(&self, s: usize) -> (usize, usize) {
        (s / self.q_count, s % self.q_count)
    }

    fn sweep(&self, actions: &ActionSet, f: &[f64]) -> Vec<f64> {
        let qn = self.q_count;
        let n_base = self.base.n_states();
        let mut targeted = vec![false; qn];
        for &q in &self.successor {
            targeted[q as usize] = true;
        }
        let mut slices: Vec<Option<Vec<f64>>> = vec![None; qn];
        for q2 in 0..qn {
            if !targeted[q2] {
                continue;
            }
            let slice: Vec<f64> = (0..n_base).map(|x| f[x * qn + q2]).collect();
            if slice.iter().all(|&v| v == 0.0) {
                continue;
            }
            slices[q2] = Some(self.base.sweep(&slice));
        }
        let base_actions = &self.base.actions;
        let mut out = vec![0.0; actions.n_pairs()];
        for s in 0..n_base * qn {
            let (x, _) = self.split(s);
            let q2 = self.successor[s] as usize;
            if let Some(h) = &slices[q2] {
                let k = actions.feasible(s).len();
                let (src, dst) = (base_actions.offset(x), actions.offset(s));
                out[dst..dst + k].copy_from_slice(&h[src..src + k]);
            }
        }
        out
    }

    fn row_into(&self, s: usize, k: usize, buf: &mut Vec<(u32, f64)>) {
        let (x, _) = self.split(s);
        let q2 = self.successor[s];
        self.base.kernel.row_into(&self.base.actions, x, k, buf);
        for e in buf.iter_mut() {
            e.0 = e.0 * self.q_count as u32 + q2;
        }
    }

    fn sample<R: Rng + ?Sized>(&self, s: usize, k: usize, rng: &mut R) -> usize {
        let (x, _) = self.split(s);
        let x2 = self.base.kernel.sample(&self.base.actions, x, k, rng);
        x2 * self.q_count + self.successor[s] as usize
    }
}

/// Stochastic kernel indexed by state-action pair (see [`ActionSet`]).
#[derive(Debug, Clone)]
pub enum TransitionKernel {
    /// `rows[pair * n + x']`
    Dense { n: usize, rows: Vec<f64> },
    /// Compressed rows, next states ascending within each row.
    Sparse {
        n: usize,
        row_ptr: Vec<usize>,
        cols: Vec<u32>,
        vals: Vec<f64>,
    },
    Separable(SeparableKernel),
    Lifted(LiftedKernel),
}

impl TransitionKernel {
    pub fn n_states(&self) -> usize {
        match self {
            Self::Dense { n, .. } | Self::Sparse { n, .. } => *n,
            Self::Separable(k) => k.n_states(),
            Self::Lifted(k) => k.base.n_states() * k.q_count,
        }
    }

    /// `sum_x' T(x'|x,a) f(x')` for every feasible pair, in pair order.
    pub fn sweep(&self, actions: &ActionSet, f: &[f64]) -> Vec<f64> {
        match self {
            Self::Dense { n, rows } => rows
                .par_chunks(*n)
                .map(|row| row.iter().zip(f).map(|(p, v)| p * v).sum())
                .collect(),
            Self::Sparse {
                row_ptr, cols, vals, ..
            } => (0..row_ptr.len() - 1)
                .into_par_iter()
                .map(|r| {
                    (row_ptr[r]..row_ptr[r + 1])
                        .map(|e| vals[e] * f[cols[e] as usize])
                        .sum()
                })
                .collect(),
            Self::Separable(k) => k.sweep(f),
            Self::Lifted(k) => k.sweep(actions, f),
        }
    }

    /// Expectation of `f` from state `x` under its `k`-th feasible action.
    pub fn expect(&self, actions: &ActionSet, x: usize, k: usize, f: &[f64]) -> f64 {
        match self {
            Self::Dense { n, rows } => {
                let p = actions.offset(x) + k;
                rows[p * n..(p + 1) * n].iter().zip(f).map(|(p, v)| p * v).sum()
            }
            Self::Sparse {
                row_ptr, cols, vals, ..
            } => {
                let p = actions.offset(x) + k;
                (row_ptr[p]..row_ptr[p + 1])
                    .map(|e| vals[e] * f[cols[e] as usize])
                    .sum()
            }
            _ => {
                let mut buf = Vec::new();
                self.row_into(actions, x, k, &mut buf);
                buf.iter().map(|&(j, p)| p * f[j as usize]).sum()
            }
        }
    }

    /// Materialise one row as `(next_state, probability)` with next states
    /// ascending and zero entries omitted.
    pub fn row_into(&self, actions: &ActionSet, x: usize, k: usize, buf: &mut Vec<(u32, f64)>) {
        buf.clear();
        match self {
            Self::Dense { n, rows } => {
                let p = actions.offset(x) + k;
                for (j, &v) in rows[p * n..(p + 1) * n].iter().enumerate() {
                    if v > 0.0 {
                        buf.push((j as u32, v));
                    }
                }
            }
            Self::Sparse {
                row_ptr, cols, vals, ..
            } => {
                let p = actions.offset(x) + k;
                for e in row_ptr[p]..row_ptr[p + 1] {
                    if vals[e] > 0.0 {
                        buf.push((cols[e], vals[e]));
                    }
                }
            }
            Self::Separable(sk) => sk.row_into(x, actions.feasible(x)[k] as usize, buf),
            Self::Lifted(lk) => lk.row_into(x, k, buf),
        }
    }

    /// Draw a successor by inverse-CDF in next-state order.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        actions: &ActionSet,
        x: usize,
        k: usize,
        rng: &mut R,
    ) -> usize {
        match self {
            Self::Separable(sk) => sk.sample(x, actions.feasible(x)[k] as usize, rng),
            Self::Lifted(lk) => lk.sample(x, k, rng),
            _ => {
                let mut buf = Vec::new();
                self.row_into(actions, x, k, &mut buf);
                let u: f64 = rng.random();
                let mut cum = 0.0;
                for &(j, p) in &buf {
                    cum += p;
                    if u < cum {
                        return j as usize;
                    }
                }
                buf.last().map(|e| e.0 as usize).unwrap_or(x)
            }
        }
    }
}
