//! Two-subnetwork power model.
//!
//! Each subnetwork stores energy `x^i in [0, M]` and evolves as
//!
//! ```text
//! x^i' = min(M, max(0, c (x^i + u^i v p + r^i - d^i)))
//! ```
//!
//! with plant load `v in [v_min, 1]`, share `u^1 = u`, `u^2 = 1 - u`, fixed
//! plant output `p` and truncated-Gaussian renewable production `r^i` and
//! demand `d^i`. All four noise terms are taken independent, so the kernel
//! factors into one banded row per coordinate.

mod noise;
mod study;

pub use noise::{std_normal_cdf, truncated_gaussian_cdf, DifferenceCdf, TruncatedGaussian};
pub use study::{
    case_study_checks, reach_avoid_automaton, run_case_study, CaseCheck, CaseStudyOutcome, CASE_STUDY_HORIZON,
};

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::mdp::config::ModelConfig;
use crate::mdp::{
    ActionSet, Factor1d, GridModel, Labeling, Mdp, ModelError, SeparableKernel, StateGrid,
    TransitionKernel,
};

/// Largest tolerated mass lost when trimming row tails.
pub const ROW_DEFECT_LIMIT: f64 = 1e-6;
/// Row entries below this are cut from the band edges.
const BAND_TRIM: f64 = 1e-16;

#[derive(Debug, Error, PartialEq)]
pub enum PowernetError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("row of coordinate {dim} from cell {cell} under action {action} lost {defect:e} mass")]
    RowDefect { dim: usize, cell: usize, action: usize, defect: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Automaton(#[from] crate::automata::AutomatonError),
    #[error(transparent)]
    Product(#[from] crate::product::ProductError),
    #[error(transparent)]
    Reach(#[from] crate::reach::ReachError),
    #[error("cannot write {path}: {msg}")]
    Io { path: String, msg: String },
}

/// Mean and spread of a truncated-Gaussian noise term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerNetParams {
    pub max_storage: f64,
    pub reserve_rate: f64,
    pub plant_output: f64,
    pub v_min: f64,
    pub renewables: [NoiseParams; 2],
    pub demand: [NoiseParams; 2],
    /// Common support of all noise terms.
    pub noise_support: (f64, f64),
    pub cells: usize,
    pub v_count: usize,
    pub u_count: usize,
}

impl Default for PowerNetParams {
    fn default() -> Self {
        Self {
            max_storage: 2.0,
            reserve_rate: 0.93,
            plant_output: 0.7,
            v_min: 0.8,
            renewables: [NoiseParams { mu: 0.1, sigma: 0.03 }, NoiseParams { mu: 0.05, sigma: 0.01 }],
            demand: [NoiseParams { mu: 0.2, sigma: 0.05 }, NoiseParams { mu: 0.4, sigma: 0.07 }],
            noise_support: (0.0, 2.0),
            cells: 64,
            v_count: 5,
            u_count: 11,
        }
    }
}

fn param(key: &str, value: &str) -> Result<f64, PowernetError> {
    value
        .parse::<f64>()
        .map_err(|_| PowernetError::Parameter(format!("{key} = {value} is not a number")))
}

impl PowerNetParams {
    pub fn validate(&self) -> Result<(), PowernetError> {
        let bad = |m: String| Err(PowernetError::Parameter(m));
        if !(self.max_storage > 0.0) {
            return bad(format!("M must be positive, got {}", self.max_storage));
        }
        if !(self.reserve_rate > 0.0 && self.reserve_rate <= 1.0) {
            return bad(format!("c must lie in (0, 1], got {}", self.reserve_rate));
        }
        if !(self.v_min > 0.0 && self.v_min <= 1.0) {
            return bad(format!("v_min must lie in (0, 1], got {}", self.v_min));
        }
        if !(self.plant_output >= 0.0) {
            return bad(format!("p must be nonnegative, got {}", self.plant_output));
        }
        if self.cells == 0 || self.v_count == 0 || self.u_count == 0 {
            return bad("grid resolutions must be positive".into());
        }
        for n in self.renewables.iter().chain(&self.demand) {
            TruncatedGaussian::new(n.mu, n.sigma, self.noise_support.0, self.noise_support.1)?;
        }
        Ok(())
    }

    /// Defaults overridden by `[kernel]` keys of a configuration file.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, PowernetError> {
        let mut p = Self::default();
        for (k, v) in map {
            match k.as_str() {
                "M" => p.max_storage = param(k, v)?,
                "c" => p.reserve_rate = param(k, v)?,
                "p" => p.plant_output = param(k, v)?,
                "v_min" => p.v_min = param(k, v)?,
                "r1_mu" => p.renewables[0].mu = param(k, v)?,
                "r1_sigma" => p.renewables[0].sigma = param(k, v)?,
                "r2_mu" => p.renewables[1].mu = param(k, v)?,
                "r2_sigma" => p.renewables[1].sigma = param(k, v)?,
                "d1_mu" => p.demand[0].mu = param(k, v)?,
                "d1_sigma" => p.demand[0].sigma = param(k, v)?,
                "d2_mu" => p.demand[1].mu = param(k, v)?,
                "d2_sigma" => p.demand[1].sigma = param(k, v)?,
                "noise_lo" => p.noise_support.0 = param(k, v)?,
                "noise_hi" => p.noise_support.1 = param(k, v)?,
                other => return Err(PowernetError::Parameter(format!("unknown key {other}"))),
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn grid(&self) -> Result<StateGrid, PowernetError> {
        Ok(StateGrid::new(
            vec![0.0; 2],
            vec![self.max_storage; 2],
            vec![self.cells; 2],
        )?)
    }

    /// `(v, u1)` pairs with `v` varying slowest.
    pub fn action_vectors(&self) -> Vec<Vec<f64>> {
        let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            if n == 1 {
                return vec![hi];
            }
            crate::mdp::config::evenly_spaced(lo, hi, n)
        };
        let us = axis(0.0, 1.0, self.u_count);
        axis(self.v_min, 1.0, self.v_count)
            .into_iter()
            .flat_map(|v| us.iter().map(move |&u| vec![v, u]))
            .collect()
    }
}

fn coordinate_rows(
    params: &PowerNetParams,
    grid: &StateGrid,
    dim: usize,
    actions: &[Vec<f64>],
) -> Result<Vec<Factor1d>, PowernetError> {
    let (lo, hi) = params.noise_support;
    let r = params.renewables[dim];
    let d = params.demand[dim];
    let z = DifferenceCdf::new(
        TruncatedGaussian::new(r.mu, r.sigma, lo, hi)?,
        TruncatedGaussian::new(d.mu, d.sigma, lo, hi)?,
    );
    let n = grid.cells()[dim];
    let c = params.reserve_rate;
    let rows: Vec<Result<Vec<Factor1d>, PowernetError>> = actions
        .par_iter()
        .enumerate()
        .map(|(a, u)| {
            let share = if dim == 0 { u[1] } else { 1.0 - u[1] };
            let drift = share * u[0] * params.plant_output;
            (0..n)
                .map(|i| {
                    let x = grid.coordinate(dim, i);
                    // cum[j] = P(next < boundary j + 1)
                    let cum: Vec<f64> = (1..n)
                        .map(|j| z.cdf(grid.boundary(dim, j) / c - x - drift))
                        .collect();
                    let mut probs = Vec::with_capacity(n);
                    let mut prev = 0.0;
                    for &f in &cum {
                        probs.push((f - prev).max(0.0));
                        prev = prev.max(f);
                    }
                    probs.push((1.0 - prev).max(0.0));
                    let first = probs.iter().position(|&p| p > BAND_TRIM).unwrap_or(0);
                    let last = probs.iter().rposition(|&p| p > BAND_TRIM).unwrap_or(0);
                    let band = probs[first..=last].to_vec();
                    let defect = (1.0 - band.iter().sum::<f64>()).abs();
                    if defect > ROW_DEFECT_LIMIT {
                        return Err(PowernetError::RowDefect { dim, cell: i, action: a, defect });
                    }
                    Ok(Factor1d { start: first, probs: band })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(actions.len() * n);
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

/// Kernel on `grid` for the given `(v, u1)` action vectors. Rows are built
/// from cell centres.
pub fn powernet_kernel(
    params: &PowerNetParams,
    grid: &StateGrid,
    actions: &[Vec<f64>],
) -> Result<SeparableKernel, PowernetError> {
    params.validate()?;
    if grid.dims() != 2 || grid.lower().iter().any(|&l| l != 0.0) || grid.upper().iter().any(|&u| u != params.max_storage) {
        return Err(PowernetError::Parameter(format!(
            "state space must be [0, {}]^2",
            params.max_storage
        )));
    }
    for u in actions {
        if u.len() != 2 || !(u[0] >= params.v_min && u[0] <= 1.0) || !(0.0..=1.0).contains(&u[1]) {
            return Err(PowernetError::Parameter(format!("action {u:?} is not a (v, u1) pair")));
        }
    }
    let factors = (0..2)
        .map(|d| coordinate_rows(params, grid, d, actions))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SeparableKernel::new(grid.cells().to_vec(), actions.len(), factors)?)
}

fn assemble(
    params: &PowerNetParams,
    grid: StateGrid,
    vectors: Vec<Vec<f64>>,
    names: Vec<String>,
    labeling: Option<Labeling>,
) -> Result<GridModel, PowernetError> {
    let kernel = powernet_kernel(params, &grid, &vectors)?;
    let actions = ActionSet::uniform(vectors, names, grid.total_states());
    let mdp = Mdp::new(actions, TransitionKernel::Separable(kernel), labeling)?;
    Ok(GridModel { grid, mdp })
}

/// Model at the resolutions stored in `params`, labelled for `scenario`.
pub fn build_powernet(params: &PowerNetParams, scenario: Scenario) -> Result<GridModel, PowernetError> {
    let grid = params.grid()?;
    let labels = case_study_labels(&grid, scenario);
    assemble(
        params,
        grid,
        params.action_vectors(),
        vec!["v".into(), "u1".into()],
        Some(labels),
    )
}

/// Model described by a configuration file with `builtin = powernet`.
pub fn from_config(cfg: &ModelConfig, params: &BTreeMap<String, String>) -> Result<GridModel, PowernetError> {
    let params = PowerNetParams::from_map(params)?;
    let labels = cfg.labels.as_ref().map(|l| l.apply(&cfg.grid));
    assemble(
        &params,
        cfg.grid.clone(),
        cfg.action_vectors.clone(),
        cfg.action_names.clone(),
        labels,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Safety,
    ReachAvoid,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Safety => "safety",
            Scenario::ReachAvoid => "reachavoid",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = PowernetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "safety" => Ok(Scenario::Safety),
            "reachavoid" | "reach-avoid" => Ok(Scenario::ReachAvoid),
            other => Err(PowernetError::Parameter(format!("unknown scenario {other}"))),
        }
    }
}

/// Letter of a point: safety uses `S = [0.2, 1.5]^2`; reach-avoid uses
/// `S = [0.2, 1.8]^2`, `G1 = (1.8, 2] x [0.2, 1.8]`, `G2 = [0.2, 1.8] x (1.8, 2]`
/// and `G = (1.8, 2]^2`. Everything else is `BOT`.
pub fn case_study_letter(scenario: Scenario, p: &[f64]) -> &'static str {
    let within = |v: f64, lo: f64, hi: f64| lo <= v && v <= hi;
    match scenario {
        Scenario::Safety => {
            if within(p[0], 0.2, 1.5) && within(p[1], 0.2, 1.5) {
                "S"
            } else {
                "BOT"
            }
        }
        Scenario::ReachAvoid => {
            let low = |v: f64| within(v, 0.2, 1.8);
            let high = |v: f64| v > 1.8 && v <= 2.0;
            match (low(p[0]), high(p[0]), low(p[1]), high(p[1])) {
                (true, _, true, _) => "S",
                (_, true, true, _) => "G1",
                (true, _, _, true) => "G2",
                (_, true, _, true) => "G",
                _ => "BOT",
            }
        }
    }
}

pub fn case_study_alphabet(scenario: Scenario) -> Vec<String> {
    let names: &[&str] = match scenario {
        Scenario::Safety => &["S", "BOT"],
        Scenario::ReachAvoid => &["S", "G1", "G2", "G", "BOT"],
    };
    names.iter().map(|s| s.to_string()).collect()
}

/// Labels by cell centre.
pub fn case_study_labels(grid: &StateGrid, scenario: Scenario) -> Labeling {
    let alphabet = case_study_alphabet(scenario);
    let letters = (0..grid.total_states())
        .map(|x| {
            let name = case_study_letter(scenario, &grid.center(x));
            alphabet.iter().position(|a| a == name).unwrap() as u32
        })
        .collect();
    Labeling::new(alphabet, letters).expect("letters drawn from the alphabet")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> PowerNetParams {
        PowerNetParams {
            cells: 16,
            v_count: 2,
            u_count: 3,
            ..Default::default()
        }
    }

    #[test]
    fn labels_by_centre() {
        let grid = PowerNetParams::default().grid().unwrap();
        for sc in [Scenario::Safety, Scenario::ReachAvoid] {
            let lab = case_study_labels(&grid, sc);
            assert_eq!(lab.letter_name(grid.nearest(&[1.0, 1.0]).unwrap()), "S");
            assert_eq!(lab.letter_name(grid.nearest(&[0.1, 0.1]).unwrap()), "BOT");
        }
        let lab = case_study_labels(&grid, Scenario::ReachAvoid);
        assert_eq!(lab.letter_name(grid.nearest(&[1.9, 1.9]).unwrap()), "G");
        assert_eq!(lab.letter_name(grid.nearest(&[1.9, 1.0]).unwrap()), "G1");
        assert_eq!(lab.letter_name(grid.nearest(&[1.0, 1.9]).unwrap()), "G2");
        assert_eq!(case_study_letter(Scenario::ReachAvoid, &[1.8, 1.0]), "S");
    }

    #[test]
    fn tiny_noise_is_nearly_deterministic() {
        let mut p = small();
        for n in p.renewables.iter_mut().chain(p.demand.iter_mut()) {
            n.sigma = 1e-7;
        }
        let m = build_powernet(&p, Scenario::Safety).unwrap();
        let TransitionKernel::Separable(k) = &m.mdp.kernel else { panic!() };
        let grid = &m.grid;
        let a = 3; // v = 1, u1 = 0
        let u = &m.mdp.actions.vector(a).to_vec();
        assert_eq!(u, &vec![1.0, 0.0]);
        for i in [2usize, 7, 11] {
            let x = grid.coordinate(0, i);
            let next = p.reserve_rate * (x + p.renewables[0].mu - p.demand[0].mu);
            let row = k.factor(0, a, i);
            let (j, pj) = row
                .probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap();
            assert_eq!(row.start + j, grid.locate(&[next.clamp(0.0, 2.0), 1.0]).unwrap() / 16);
            assert!(*pj > 1.0 - 1e-9);
        }
    }

    #[test]
    fn saturation_at_the_top() {
        let p = small();
        let m = build_powernet(&p, Scenario::Safety).unwrap();
        let TransitionKernel::Separable(k) = &m.mdp.kernel else { panic!() };
        // full load, all of it to subnetwork 1, starting in the top cell
        let a = m.mdp.actions.len() - 1;
        let row = k.factor(0, a, 15);
        assert_eq!(row.start + row.probs.len(), 16);
        assert!(*row.probs.last().unwrap() > 0.5);
    }

    #[test]
    fn parameter_overrides() {
        let mut map = BTreeMap::new();
        map.insert("c".to_string(), "0.9".to_string());
        assert_eq!(PowerNetParams::from_map(&map).unwrap().reserve_rate, 0.9);
        map.insert("c".to_string(), "1.5".to_string());
        assert!(PowerNetParams::from_map(&map).is_err());
        map.clear();
        map.insert("q".to_string(), "1".to_string());
        assert!(PowerNetParams::from_map(&map).is_err());
    }
}
