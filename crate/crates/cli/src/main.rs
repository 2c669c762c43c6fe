//! `stochctl`: optimal probabilities of temporal-logic events on controlled
//! Markov models.
//!
//! Exit codes: 0 success, 1 i/o or internal failure, 2 invalid input,
//! 3 unsupported query, 4 no convergence (artifacts are still written).

mod route;
mod solve;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use stochctl::automata::parse_automaton;
use stochctl::ltl::parse_ltl;
use stochctl::mdp::{value_under_initial_distribution, GridModel, MarkovPolicy, StateSet};
use stochctl::montecarlo::{
    estimate_dfa_acceptance, estimate_until, sample_paths, write_path_dump, InitialState, MarkovController, SimConfig,
};
use stochctl::powernet::{case_study_checks, run_case_study, PowerNetParams, Scenario, CASE_STUDY_HORIZON};
use stochctl::reach::{absorbing_analysis, CertMode, Direction, ExcessiveCertificate, DEFAULT_ABSORBING_CAP};

use route::{plan_automaton, plan_formula, Horizon, Plan, Task};
use solve::{solve, SolveOptions, Truncation};

#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Engine(#[from] stochctl::Error),
}

impl Failure {
    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure::Io(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        use stochctl::ltl::LtlError;
        use stochctl::montecarlo::SimError;
        use stochctl::persistence::PersistenceError;
        use stochctl::powernet::PowernetError;
        use stochctl::product::ProductError;
        use stochctl::reach::ReachError;
        use stochctl::Error as E;
        match self {
            Failure::Invalid(_) => 2,
            Failure::Unsupported(_) => 3,
            Failure::Io(_) => 1,
            Failure::Engine(e) => match e {
                E::Product(ProductError::Unsupported(_))
                | E::Persistence(PersistenceError::NotBuchi(_))
                | E::Simulation(SimError::Unsupported(_))
                | E::Ltl(LtlError::Fragment) => 3,
                E::Reach(ReachError::Monotonicity { .. }) | E::Persistence(PersistenceError::Monotonicity { .. }) => 1,
                E::Io(_) | E::Simulation(SimError::Io(_)) | E::Powernet(PowernetError::Io { .. }) => 1,
                _ => 2,
            },
        }
    }
}

#[derive(Parser)]
#[command(name = "stochctl", version, about = "Optimal probabilities of temporal-logic events on controlled Markov models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the optimal probability of a property.
    Check(CheckArgs),
    /// Compute the optimal probability and write the optimal policy.
    Synthesize(SynthesizeArgs),
    /// Absorbing-subset analysis of a safe set.
    Analyze(AnalyzeArgs),
    /// Compare a bounded optimal value with a Monte Carlo estimate.
    Simulate(SimulateArgs),
    /// Run the power-network case study.
    Casestudy(CaseStudyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Max,
    Min,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Max => Direction::Max,
            DirectionArg::Min => Direction::Min,
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Property {
    /// LTL formula over the model's letters.
    #[arg(long)]
    ltl: Option<String>,
    /// Deterministic automaton file.
    #[arg(long)]
    automaton: Option<PathBuf>,
}

#[derive(Args)]
struct Query {
    /// Model configuration file.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    property: Property,
    /// Step count, or `inf` for the unbounded engines.
    #[arg(long, default_value = "inf")]
    horizon: Horizon,
    #[arg(long, value_enum, default_value = "max")]
    direction: DirectionArg,
    /// Initial state: a state index or comma-separated coordinates. Uniform
    /// over all states when omitted.
    #[arg(long)]
    init: Option<String>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    query: Query,
    /// Convergence tolerance of the unbounded engines.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Sweep budget of the unbounded engines.
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// CSV `state[,q],g[,action]` holding an excessive function; `q` indexes
    /// the automaton state when the query runs on a product.
    #[arg(long)]
    cert: Option<PathBuf>,
    /// Truncation level for `--cert`.
    #[arg(long, default_value_t = 0.01, requires = "cert")]
    eps: f64,
    /// Letters of the exclusion set for truncated persistence.
    #[arg(long, value_delimiter = ',', requires = "cert")]
    exclude: Vec<String>,
    /// Bound on the persistence value over the exclusion set.
    #[arg(long, default_value_t = 0.0, requires = "exclude")]
    exclusion_bound: f64,
}

#[derive(Args)]
struct SynthesizeArgs {
    #[command(flatten)]
    check: CheckArgs,
    /// Time step whose decision rule is written.
    #[arg(long, default_value_t = 0)]
    policy_step: usize,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    model: PathBuf,
    /// Letters making up the safe set.
    #[arg(long, value_delimiter = ',', required = true)]
    safe: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_ABSORBING_CAP)]
    cap: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    query: Query,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    paths: usize,
    /// Write the sampled paths to this CSV.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Safety,
    Reachavoid,
    Both,
}

#[derive(Args)]
struct CaseStudyArgs {
    #[arg(long, default_value = "casestudy")]
    out: PathBuf,
    #[arg(long, default_value_t = CASE_STUDY_HORIZON)]
    horizon: u32,
    #[arg(long, value_enum, default_value = "both")]
    scenario: ScenarioArg,
}

fn load(path: &Path) -> Result<GridModel, Failure> {
    stochctl::load_model(path).map_err(|e| match e {
        stochctl::Error::Io(e) => Failure::Invalid(format!("cannot read {}: {e}", path.display())),
        e => e.into(),
    })
}

fn plan(model: &GridModel, q: &Query) -> Result<Plan, Failure> {
    let base = Arc::new(model.mdp.clone());
    match (&q.property.ltl, &q.property.automaton) {
        (Some(text), None) => {
            let labeling = base.labeling().map_err(stochctl::Error::from)?;
            let f = parse_ltl(text, labeling.alphabet()).map_err(stochctl::Error::from)?;
            plan_formula(&base, &f, q.horizon)
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
            let aut = parse_automaton(&text).map_err(stochctl::Error::from)?;
            plan_automaton(&base, &aut, q.horizon, false)
        }
        _ => Err(Failure::Invalid("exactly one of --ltl and --automaton is required".into())),
    }
}

fn initial(model: &GridModel, init: Option<&str>) -> Result<InitialState, Failure> {
    let n = model.mdp.n_states();
    let Some(text) = init else {
        return Ok(InitialState::Distribution(vec![1.0 / n as f64; n]));
    };
    if let Ok(x) = text.trim().parse::<usize>() {
        if x >= n {
            return Err(Failure::Invalid(format!("initial state {x} out of range 0..{n}")));
        }
        return Ok(InitialState::State(x));
    }
    let point = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| Failure::Invalid(format!("--init expects an index or coordinates, got `{text}`")))?;
    model
        .grid
        .locate(&point)
        .map(InitialState::State)
        .ok_or_else(|| Failure::Invalid(format!("point {text} lies outside the grid")))
}

fn value_at(values: &[f64], init: &InitialState) -> Result<f64, Failure> {
    match init {
        InitialState::State(x) => Ok(values[*x]),
        InitialState::Distribution(p) => Ok(value_under_initial_distribution(p, values).map_err(stochctl::Error::from)?),
    }
}

fn letters_to_set(model: &GridModel, letters: &[String]) -> Result<StateSet, Failure> {
    let lab = model.mdp.labeling().map_err(stochctl::Error::from)?;
    let mut set = StateSet::empty(model.mdp.n_states());
    for name in letters {
        let l = lab
            .index_of(name)
            .ok_or_else(|| Failure::Invalid(format!("unknown letter {name}")))?;
        set = set.union(&lab.states_with(l));
    }
    Ok(set)
}

/// Certificate CSV with columns `state,g`, an optional automaton state `q`
/// and an optional `action` selector. Without `q` the states are engine states.
fn read_certificate(path: &Path, n: usize, q_count: usize, target: StateSet) -> Result<ExcessiveCertificate, Failure> {
    let bad = |msg: String| Failure::Invalid(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(sc), Some(gc)) = (col("state"), col("g")) else {
        return Err(bad("expected columns state,g[,q][,action]".into()));
    };
    let (qc, ac) = (col("q"), col("action"));
    let mut g = vec![f64::NAN; n];
    let mut rule = vec![u32::MAX; n];
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |c: usize| rec.get(c).map(str::trim).unwrap_or("");
        let row = i + 1;
        let mut x: usize = field(sc).parse().map_err(|_| bad(format!("row {row}: bad state")))?;
        if let Some(c) = qc {
            let q: usize = field(c).parse().map_err(|_| bad(format!("row {row}: bad q")))?;
            if q >= q_count {
                return Err(bad(format!("row {row}: automaton state {q} out of range")));
            }
            x = x * q_count + q;
        }
        if x >= n {
            return Err(bad(format!("row {row}: state out of range")));
        }
        g[x] = field(gc).parse().map_err(|_| bad(format!("row {row}: bad g")))?;
        if let Some(c) = ac {
            rule[x] = field(c).parse().map_err(|_| bad(format!("row {row}: bad action")))?;
        }
    }
    if let Some(x) = g.iter().position(|v| v.is_nan()) {
        return Err(bad(format!("no value for engine state {x}")));
    }
    let mode = match ac {
        Some(_) => CertMode::Selector(rule),
        None => CertMode::Uniform,
    };
    Ok(ExcessiveCertificate { g, mode, target })
}

fn solve_options(model: &GridModel, plan: &Plan, args: &CheckArgs) -> Result<SolveOptions, Failure> {
    if !(args.tol > 0.0) {
        return Err(Failure::Invalid(format!("--tol must be positive, got {}", args.tol)));
    }
    let truncation = match &args.cert {
        None => None,
        Some(path) => {
            // the sublevel set must avoid the goal, so the goal's complement is the target
            let (n, q_count, target) = match &plan.task {
                Task::Reach { product, .. } => {
                    let goal = match product.target_sets().map_err(stochctl::Error::from)? {
                        stochctl::product::TargetSets::Reach { goal, .. } => goal,
                        stochctl::product::TargetSets::Buchi { finals } => finals,
                    };
                    (product.mdp.n_states(), product.q_count(), goal.complement())
                }
                Task::Persistence { safe } => (model.mdp.n_states(), 1, safe.clone()),
                _ => return Err(Failure::Invalid("--cert applies to unbounded reach and persistence".into())),
            };
            let cert = read_certificate(path, n, q_count, target)?;
            let exclusion = if args.exclude.is_empty() {
                None
            } else {
                Some((letters_to_set(model, &args.exclude)?, args.exclusion_bound))
            };
            Some(Truncation {
                cert,
                eps: args.eps,
                exclusion,
            })
        }
    };
    Ok(SolveOptions {
        direction: args.query.direction.into(),
        tol: args.tol,
        max_iters: args.max_iters,
        truncation,
    })
}

fn cmd_check(args: &CheckArgs, policy_step: Option<usize>) -> Result<u8, Failure> {
    let model = load(&args.query.model)?;
    let init = initial(&model, args.query.init.as_deref())?;
    let plan = plan(&model, &args.query)?;
    let opts = solve_options(&model, &plan, args)?;
    let sol = solve(&plan, &opts)?;
    let mut files = sol.write(&model, &args.out)?;
    if let Some(t) = policy_step {
        let table = sol
            .policy
            .as_ref()
            .ok_or_else(|| Failure::Unsupported("no policy is synthesised for repeated reachability".into()))?;
        if let MarkovPolicy::TimeVarying(rules) = &table.policy {
            if t >= rules.len().max(1) {
                return Err(Failure::Invalid(format!(
                    "--policy-step {t} is beyond the horizon of {} steps",
                    rules.len()
                )));
            }
        }
        let path = args.out.join(format!("policy_step{t}.csv"));
        let out = stochctl::output::create(&path).map_err(|e| Failure::io(&path, e))?;
        stochctl::output::write_policy(out, &model.grid, &model.mdp.actions, table.rows(t))
            .map_err(|e| Failure::io(&path, e))?;
        files.push(path);
    }
    for f in &files {
        log::info!("wrote {}", f.display());
    }
    println!("{}", sol.summary(value_at(&sol.values, &init)?));
    Ok(if sol.diverged { 4 } else { 0 })
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<u8, Failure> {
    let model = load(&args.model)?;
    let safe = letters_to_set(&model, &args.safe)?;
    let report = absorbing_analysis(&model.mdp, &safe, args.cap).map_err(stochctl::Error::from)?;
    let sizes: Vec<String> = report.chain.iter().map(|s| s.len().to_string()).collect();
    println!("chain={}", sizes.join(" "));
    println!("limit={}", report.limit.len());
    println!("m={}", report.m.map_or("none".to_string(), |m| m.to_string()));
    println!("beta={}", report.beta.map_or("none".to_string(), |b| b.to_string()));
    println!("verdict={:?}", report.verdict);
    println!("consistent={}", report.consistent);

    // depth = number of chain sets holding the state
    let path = args.out.join("absorbing_sets.csv");
    let out = stochctl::output::create(&path).map_err(|e| Failure::io(&path, e))?;
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=model.grid.dims()).map(|d| format!("x{d}")).collect();
    header.extend(["depth".into(), "absorbing".into()]);
    w.write_record(&header).map_err(|e| Failure::io(&path, e))?;
    for x in 0..model.mdp.n_states() {
        let mut rec: Vec<String> = model.grid.center(x).iter().map(|c| c.to_string()).collect();
        let depth = report.chain.iter().filter(|s| s.contains(x)).count();
        rec.push(depth.to_string());
        rec.push(u8::from(report.limit.contains(x)).to_string());
        w.write_record(&rec).map_err(|e| Failure::io(&path, e))?;
    }
    w.flush().map_err(|e| Failure::io(&path, e))?;
    Ok(0)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<u8, Failure> {
    let model = load(&args.query.model)?;
    let init = initial(&model, args.query.init.as_deref())?;
    let plan = plan(&model, &args.query)?;
    let opts = SolveOptions {
        direction: args.query.direction.into(),
        tol: 1e-9,
        max_iters: 100_000,
        truncation: None,
    };
    let finite = || Failure::Invalid("simulation needs a finite --horizon".into());
    let steps = match &plan.task {
        Task::Safety { horizon, .. } | Task::Reach { horizon, .. } => horizon.ok_or_else(finite)? as usize,
        Task::Persistence { .. } | Task::Buchi { .. } | Task::BuchiProduct { .. } => {
            return Err(Failure::Unsupported("simulation covers finite-horizon events only".into()))
        }
    };
    let sol = solve(&plan, &opts)?;
    let table = sol.policy.as_ref().expect("finite-horizon tasks carry a policy");
    let cfg = SimConfig {
        seed: args.seed,
        num_paths: args.paths,
        horizon: steps.max(1),
        initial: init.clone(),
    };
    let base = plan.base();
    let (estimate, complement, paths) = match &plan.task {
        Task::Safety { safe, .. } => {
            let ctrl = MarkovController(&table.policy);
            let est = estimate_until(base, safe, &safe.complement(), steps, &ctrl, &cfg).map_err(stochctl::Error::from)?;
            let paths = match &args.dump {
                Some(_) => Some(sample_paths(base, &ctrl, &cfg).map_err(stochctl::Error::from)?),
                None => None,
            };
            (est, true, paths)
        }
        Task::Reach { product, .. } => {
            let ctrl = product.project_policy(&table.policy);
            let est = estimate_dfa_acceptance(base, &product.automaton, steps, &ctrl, &cfg)
                .map_err(stochctl::Error::from)?;
            let paths = match &args.dump {
                Some(_) => Some(sample_paths(base, &ctrl, &cfg).map_err(stochctl::Error::from)?),
                None => None,
            };
            (est, false, paths)
        }
        _ => unreachable!("checked above"),
    };
    if let (Some(path), Some(paths)) = (&args.dump, paths) {
        let out = stochctl::output::create(path).map_err(|e| Failure::io(path, e))?;
        write_path_dump(&paths, out).map_err(stochctl::Error::from)?;
    }
    let mean = if complement != plan.negated { 1.0 - estimate.mean } else { estimate.mean };
    let dp = value_at(&sol.values, &init)?;
    println!(
        "estimate={mean} se={} dp={dp} paths={}",
        estimate.std_error, estimate.paths
    );
    Ok(0)
}

fn cmd_casestudy(args: &CaseStudyArgs) -> Result<u8, Failure> {
    let params = PowerNetParams::default();
    let scenarios: &[Scenario] = match args.scenario {
        ScenarioArg::Safety => &[Scenario::Safety],
        ScenarioArg::Reachavoid => &[Scenario::ReachAvoid],
        ScenarioArg::Both => &[Scenario::Safety, Scenario::ReachAvoid],
    };
    let mut outcomes = Vec::new();
    for &s in scenarios {
        let o = run_case_study(&params, s, args.horizon, &args.out).map_err(stochctl::Error::from)?;
        for f in &o.files {
            log::info!("wrote {}", f.display());
        }
        println!(
            "{}: {} states, {} steps, mean value {}",
            s.name(),
            o.values.len(),
            args.horizon,
            o.values.iter().sum::<f64>() / o.values.len() as f64
        );
        outcomes.push(o);
    }
    if let [safety, reach] = outcomes.as_slice() {
        for c in case_study_checks(safety, reach) {
            println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.label, c.detail);
        }
    }
    Ok(0)
}

fn init_threads() -> Result<(), Failure> {
    let Ok(text) = std::env::var("STOCHCTL_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .map_err(|_| Failure::Invalid(format!("STOCHCTL_THREADS must be a count, got `{text}`")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Io(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    init_threads()?;
    match &cli.command {
        Command::Check(a) => cmd_check(a, None),
        Command::Synthesize(a) => cmd_check(&a.check, Some(a.policy_step)),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Casestudy(a) => cmd_casestudy(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
