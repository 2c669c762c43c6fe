use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{build_powernet, PowerNetParams, PowernetError, Scenario};
use crate::automata::{parse_automaton, DetAutomaton};
use crate::mdp::{GridModel, StateSet};
use crate::output;
use crate::product::{compose, TargetSets};
use crate::reach::{
    absorbing_analysis, reach_bounded, safety_bounded, AbsorbenceReport, AbsorbenceVerdict, Direction, ReachSpec,
    ValueResult, DEFAULT_ABSORBING_CAP,
};

pub const CASE_STUDY_HORIZON: u32 = 100;

const TASK2: &str = include_str!("../../data/task2.aut");

/// Automaton of the reach-avoid task.
pub fn reach_avoid_automaton() -> DetAutomaton {
    parse_automaton(TASK2).expect("bundled automaton parses")
}

#[derive(Debug, Clone)]
pub struct CaseStudyOutcome {
    pub scenario: Scenario,
    pub model: GridModel,
    /// Value per base state; for reach-avoid taken at the initial automaton state.
    pub values: Vec<f64>,
    /// Time at which `policy` was taken.
    pub policy_step: usize,
    /// Action per base state at `policy_step`; `None` where all actions tie.
    pub policy: Vec<Option<usize>>,
    /// Safe-set analysis (safety scenario only).
    pub absorbing: Option<AbsorbenceReport>,
    pub result: ValueResult,
    /// Engine state each base state starts from (the product state for reach-avoid).
    pub start_states: Vec<usize>,
    pub files: Vec<PathBuf>,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> PowernetError + '_ {
    move |e| PowernetError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

fn write<F>(path: PathBuf, files: &mut Vec<PathBuf>, f: F) -> Result<(), PowernetError>
where
    F: FnOnce(std::io::BufWriter<std::fs::File>) -> std::io::Result<()>,
{
    let out = output::create(&path).map_err(io_err(&path))?;
    f(out).map_err(io_err(&path))?;
    files.push(path);
    Ok(())
}

/// Solve one scenario at horizon `n` and write its CSVs to `out_dir`.
pub fn run_case_study(
    params: &PowerNetParams,
    scenario: Scenario,
    n: u32,
    out_dir: &Path,
) -> Result<CaseStudyOutcome, PowernetError> {
    let model = build_powernet(params, scenario)?;
    let step = (n / 2) as usize;
    let name = scenario.name();
    let mut files = Vec::new();

    let (values, policy, absorbing, result, start_states): (Vec<f64>, Vec<Option<usize>>, _, _, Vec<usize>) = match scenario {
        Scenario::Safety => {
            let lab = model.mdp.labeling()?;
            let safe = lab.states_with(lab.index_of("S").expect("safety alphabet has S"));
            let report = absorbing_analysis(&model.mdp, &safe, DEFAULT_ABSORBING_CAP)?;
            let result = safety_bounded(&model.mdp, &safe, Direction::Max, n)?;
            let rule = result.policy.rule(step);
            let ties = &result.indifferent[step.min(result.indifferent.len() - 1)];
            let policy = (0..model.mdp.n_states())
                .map(|x| (!ties[x]).then_some(rule[x] as usize))
                .collect();
            let chain_path = out_dir.join(format!("{name}_absorbing.csv"));
            let chain: Vec<usize> = report.chain.iter().map(StateSet::len).collect();
            write(chain_path, &mut files, |mut out| {
                use std::io::Write;
                writeln!(out, "n,size")?;
                for (i, s) in chain.iter().enumerate() {
                    writeln!(out, "{i},{s}")?;
                }
                out.flush()
            })?;
            let starts = (0..model.mdp.n_states()).collect();
            (result.values.clone(), policy, Some(report), result, starts)
        }
        Scenario::ReachAvoid => {
            let base = Arc::new(model.mdp.clone());
            let product = compose(base, &reach_avoid_automaton())?;
            let TargetSets::Reach { goal, safe, .. } = product.target_sets()? else {
                unreachable!("the bundled automaton is a reach automaton")
            };
            let spec = ReachSpec::new(safe, goal, Direction::Max)?;
            let result = reach_bounded(&product.mdp, &spec, n)?;
            let rule = result.policy.rule(step);
            let ties = &result.indifferent[step.min(result.indifferent.len() - 1)];
            let policy = (0..model.mdp.n_states())
                .map(|x| {
                    let s = product.initial_state(x);
                    (!ties[s]).then_some(rule[s] as usize)
                })
                .collect();
            let starts = (0..model.mdp.n_states()).map(|x| product.initial_state(x)).collect();
            (product.initial_values(&result.values), policy, None, result, starts)
        }
    };

    let q = 0;
    write(out_dir.join(format!("{name}_value.csv")), &mut files, |out| {
        output::write_values(out, &model.grid, values.iter().enumerate().map(|(x, &v)| (x, q, v)))
    })?;
    write(out_dir.join(format!("{name}_policy_step{step}.csv")), &mut files, |out| {
        output::write_policy(
            out,
            &model.grid,
            &model.mdp.actions,
            policy.iter().enumerate().map(|(x, &a)| (x, q, a)),
        )
    })?;
    write(out_dir.join(format!("{name}_residuals.csv")), &mut files, |out| {
        output::write_residuals(out, &result.residuals)
    })?;

    Ok(CaseStudyOutcome {
        scenario,
        model,
        values,
        policy_step: step,
        policy,
        absorbing,
        result,
        start_states,
        files,
    })
}

/// One structural property of the case-study results.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseCheck {
    pub label: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(label: &'static str, passed: bool, detail: String) -> CaseCheck {
    CaseCheck { label, passed, detail }
}

fn letter_cells(model: &GridModel, name: &str) -> Vec<usize> {
    let lab = model.mdp.labeling().expect("case-study models are labelled");
    match lab.index_of(name) {
        Some(l) => lab.states_with(l).iter().collect(),
        None => Vec::new(),
    }
}

/// Structural checks of the safety and reach-avoid outcomes.
pub fn case_study_checks(safety: &CaseStudyOutcome, reach: &CaseStudyOutcome) -> Vec<CaseCheck> {
    let mut out = Vec::new();

    let (simple, detail) = match &safety.absorbing {
        Some(r) => (
            r.verdict == AbsorbenceVerdict::Contractive && r.limit.is_empty(),
            format!(
                "chain {:?}, limit size {}, verdict {:?}",
                r.chain.iter().map(StateSet::len).collect::<Vec<_>>(),
                r.limit.len(),
                r.verdict
            ),
        ),
        None => (false, "no absorbence analysis".into()),
    };
    out.push(check("safe set has no absorbing subset", simple, detail));

    let grid = &safety.model.grid;
    let probe = grid.nearest(&[0.85, 0.85]).expect("point lies on the grid");
    let v = safety.values[probe];
    out.push(check(
        "safety value near (0.85, 0.85) is at least 0.95",
        v >= 0.95,
        format!("value {v} at cell {:?}", grid.center(probe)),
    ));

    let goal = letter_cells(&reach.model, "G");
    let bad_goal: Vec<usize> = goal.iter().copied().filter(|&x| reach.values[x] != 1.0).collect();
    let sink = letter_cells(&reach.model, "BOT");
    let bad_sink: Vec<usize> = sink.iter().copied().filter(|&x| reach.values[x] != 0.0).collect();
    out.push(check(
        "reach-avoid value is 1 on G and 0 on BOT",
        bad_goal.is_empty() && bad_sink.is_empty() && !goal.is_empty(),
        format!(
            "{} of {} G cells differ from 1 (max {}), {} of {} BOT cells differ from 0",
            bad_goal.len(),
            goal.len(),
            bad_goal.iter().map(|&x| reach.values[x]).fold(0.0, f64::max),
            bad_sink.len(),
            sink.len()
        ),
    ));

    let actions = &reach.model.mdp.actions;
    let v_max = (0..actions.len()).map(|a| actions.vector(a)[0]).fold(f64::MIN, f64::max);
    let mut decided = 0usize;
    let mut off = 0usize;
    for t in 0..reach.result.policy.len() {
        let rule = reach.result.policy.rule(t);
        let ties = &reach.result.indifferent[t.min(reach.result.indifferent.len() - 1)];
        for &s in &reach.start_states {
            if !ties[s] {
                decided += 1;
                if actions.vector(rule[s] as usize)[0] != v_max {
                    off += 1;
                }
            }
        }
    }
    out.push(check(
        "reach-avoid policy uses the largest v wherever actions matter",
        off == 0 && decided > 0,
        format!("{off} of {decided} decided (cell, step) pairs use a smaller v"),
    ));

    let u1 = |x: usize| safety.policy[x].map(|a| safety.model.mdp.actions.vector(a)[1]);
    let mid: Vec<f64> = (0..grid.dims()).map(|d| 0.5 * (grid.lower()[d] + grid.upper()[d])).collect();
    let quadrant = |x: usize, low_first: bool| {
        let c = grid.center(x);
        if low_first {
            c[0] < mid[0] && c[1] > mid[1]
        } else {
            c[0] > mid[0] && c[1] < mid[1]
        }
    };
    let n = safety.model.mdp.n_states();
    let ones = (0..n).filter(|&x| quadrant(x, true) && u1(x) == Some(1.0)).count();
    let zeros = (0..n).filter(|&x| quadrant(x, false) && u1(x) == Some(0.0)).count();
    out.push(check(
        "step policy has u1 = 1 at low x1 / high x2 and u1 = 0 at high x1 / low x2",
        ones > 0 && zeros > 0,
        format!(
            "step {}: {ones} cells with u1 = 1 and {zeros} cells with u1 = 0 in the two quadrants",
            safety.policy_step
        ),
    ));
    out
}
