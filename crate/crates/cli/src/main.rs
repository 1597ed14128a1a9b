mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use ea_plan::bench::{perturb_model, render_demo, run_bench, run_usar_demo, summarize, write_csv, BenchConfig, BenchSource};
use ea_plan::compile::{
    compile, diff_models, verify_solution, CompileConfig, EaProblem, EaSolution, ExplanationCosts, ModelUpdate, Ordering, Stage,
};
use ea_plan::corpus;
use ea_plan::cost::{format_cost_decimal, parse_cost, Cost};
use ea_plan::grounding::{format_plan, load_task, parse_plan, validate_plan, GroundOptions};
use ea_plan::oracle::{enumerate_ea_solutions, mce, OracleCaps};
use ea_plan::pddl::serialize_task;
use ea_plan::planner::{HeuristicKind, Limits};
use ea_plan::solve::{solve_ea, strategy_by_name, SolveConfig, SolveMode, SolveOutcome, SolveStatus};

/// Plans that carry their own explanations for an observer
/// with a different model of the task.
#[derive(Parser, Debug)]
#[command(name = "ea-plan", version)]
struct Cli {
    /// key=value file supplying defaults for any long flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed; EA_PLAN_SEED takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Write the augmented task as grounded PDDL.
    Compile(CompileArgs),
    /// Solve the augmented task in one of the three regimes.
    Solve(SolveArgs),
    /// Model-space search over explanations.
    Baseline(SolveArgs),
    /// Check a plan, and optionally an explanation, against the models.
    Verify(VerifyArgs),
    /// Derive a human model by applying random inverse updates.
    Perturb(PerturbArgs),
    /// Run the benchmark harness and write the CSV report.
    Bench(BenchArgs),
    /// Search-and-rescue walkthrough in three cost regimes.
    DemoUsar,
    #[command(hide = true)]
    Oracle(OracleArgs),
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Robot domain and problem.
    #[arg(long, num_args = 2, value_names = ["DOMAIN", "PROBLEM"], required = true)]
    robot: Vec<PathBuf>,
    /// Human domain and problem.
    #[arg(long, num_args = 2, value_names = ["DOMAIN", "PROBLEM"], required = true)]
    human: Vec<PathBuf>,
    #[arg(long, default_value_t = 200_000)]
    ground_cap: usize,
}

impl ModelArgs {
    fn load(&self) -> anyhow::Result<EaProblem> {
        let [rd, rp] = read_pair(&self.robot)?;
        let [hd, hp] = read_pair(&self.human)?;
        let opts = GroundOptions { max_actions: self.ground_cap, ..Default::default() };
        Ok(EaProblem::from_pddl_with(&rd, &rp, &hd, &hp, opts)?)
    }
}

#[derive(Args, Debug, Clone)]
struct CompileOpts {
    /// Uniform cost of each explanatory action.
    #[arg(long, default_value = "1", value_parser = cost_arg)]
    expl_cost: Cost,
    #[arg(long, default_value = "prefix")]
    ordering: Ordering,
    #[arg(long, default_value = "propose")]
    stage: Stage,
    /// Let executed conditional effects convey updates (execute stage).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    inference: bool,
}

impl CompileOpts {
    fn config(&self) -> CompileConfig {
        CompileConfig {
            costs: ExplanationCosts::uniform(self.expl_cost),
            ordering: self.ordering,
            stage: self.stage,
            inference: self.inference,
            restrict_unused: true,
        }
    }
}

#[derive(Args, Debug)]
struct CompileArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    opts: CompileOpts,
    /// Directory for domain.pddl and problem.pddl.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Size report and model diff.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    opts: CompileOpts,
    #[arg(long, default_value = "optimal")]
    mode: SolveMode,
    /// Penalty for a plan that is not optimal for the observer (penalty mode).
    #[arg(long, value_parser = cost_arg)]
    penalty: Option<Cost>,
    #[arg(long, default_value = "hmax")]
    heuristic: HeuristicKind,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<usize>,
    /// Write the outcome as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write the task plan, one action per line.
    #[arg(long)]
    plan_out: Option<PathBuf>,
}

impl SolveArgs {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            compile: self.opts.config(),
            heuristic: self.heuristic,
            limits: Limits { time: self.time_limit.map(Duration::from_secs_f64), nodes: self.node_limit },
            penalty: self.penalty,
            ..Default::default()
        }
    }
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Robot domain and problem.
    #[arg(long, num_args = 2, value_names = ["DOMAIN", "PROBLEM"], required = true)]
    robot: Vec<PathBuf>,
    /// Human domain and problem; needed to check an explanation.
    #[arg(long, num_args = 2, value_names = ["DOMAIN", "PROBLEM"])]
    human: Option<Vec<PathBuf>>,
    /// Plan file, one `(name args)` per line.
    #[arg(long)]
    plan: PathBuf,
    /// JSON array of model updates.
    #[arg(long)]
    explanation: Option<PathBuf>,
    /// Also check the plan is optimal in the updated human model.
    #[arg(long)]
    optimal: bool,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PerturbArgs {
    #[arg(long, num_args = 2, value_names = ["DOMAIN", "PROBLEM"], required = true)]
    robot: Vec<PathBuf>,
    /// Number of updates.
    #[arg(long, short = 'n', default_value_t = 10)]
    updates: usize,
    /// Directory for the grounded human domain.pddl and problem.pddl.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Write the resulting model diff as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Bundled mini-suite domains to run; all when empty.
    #[arg(long, value_delimiter = ',')]
    domains: Vec<String>,
    /// Extra robot domain/problem pairs.
    #[arg(long, num_args = 2, value_names = ["DOMAIN", "PROBLEM"])]
    instance: Vec<PathBuf>,
    #[arg(long)]
    updates: Option<usize>,
    #[arg(long, default_value_t = 3)]
    variants: usize,
    /// Seconds per run.
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    #[arg(long)]
    node_limit: Option<usize>,
    /// Explanation cost as a multiple of action cost.
    #[arg(long, default_value = "2", value_parser = cost_arg)]
    expl_cost_factor: Cost,
    #[arg(long, default_value = "prefix")]
    ordering: Ordering,
    #[arg(long, default_value = "hmax")]
    heuristic: HeuristicKind,
    #[arg(long, value_delimiter = ',', default_value = "optimal,baseline")]
    methods: Vec<String>,
    /// Worker threads; 0 for one per core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, default_value = "bench.csv")]
    csv: PathBuf,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value = "1", value_parser = cost_arg)]
    expl_cost: Cost,
    #[arg(long, value_parser = cost_arg)]
    cost_cap: Cost,
    #[arg(long, default_value_t = 30)]
    len_cap: usize,
    /// Print the minimal explanation for this plan instead of enumerating.
    #[arg(long)]
    mce: Option<PathBuf>,
}

fn cost_arg(s: &str) -> Result<Cost, String> {
    parse_cost(s).ok_or_else(|| format!("not a cost: `{s}`"))
}

fn read(p: &Path) -> anyhow::Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn read_pair(v: &[PathBuf]) -> anyhow::Result<[String; 2]> {
    Ok([read(&v[0])?, read(&v[1])?])
}

fn write_json<T: serde::Serialize>(path: &Option<PathBuf>, v: &T) -> anyhow::Result<()> {
    if let Some(p) = path {
        fs::write(p, serde_json::to_string_pretty(v)?).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

/// Errors exit with 3; outcomes by status.
fn status_code(s: SolveStatus) -> u8 {
    match s {
        SolveStatus::Solved => 0,
        SolveStatus::Unsolvable | SolveStatus::ApproximationFailure => 1,
        SolveStatus::Timeout | SolveStatus::ResourceLimit => 2,
    }
}

fn print_outcome(problem: &EaProblem, o: &SolveOutcome) {
    println!("status: {}", o.status);
    let Some(s) = &o.solution else { return };
    if s.explanation.is_empty() {
        println!("explanation: none");
    }
    let said: Vec<&str> = o.augmented_plan.iter().flatten().map(String::as_str).collect();
    for u in &s.explanation {
        if o.augmented_plan.is_none() || said.contains(&u.explain_name().as_str()) {
            println!("explain: {u}");
        } else {
            println!("observed during execution: {u}");
        }
    }
    match problem.robot().resolve_plan(&s.plan) {
        Ok(ids) => print!("{}", format_plan(problem.robot(), &ids)),
        Err(_) => s.plan.iter().for_each(|a| println!("({a})")),
    }
    println!(
        "cost: {} (explanations {}, plan {}){}",
        format_cost_decimal(&o.objective),
        format_cost_decimal(&s.explanation_cost),
        format_cost_decimal(&s.task_cost),
        if o.penalized { ", penalized" } else { "" }
    );
    println!("expanded: {}, time: {:.3}s", o.expanded, o.wall_time);
}

fn cmd_solve(a: &SolveArgs, baseline: bool) -> anyhow::Result<u8> {
    let problem = a.model.load()?;
    let cfg = a.config();
    let out = if baseline { strategy_by_name("baseline")?.solve(&problem, &cfg)? } else { solve_ea(&problem, a.mode, &cfg)? };
    print_outcome(&problem, &out);
    write_json(&a.json, &out)?;
    if let (Some(p), Some(s)) = (&a.plan_out, &out.solution) {
        let ids = problem.robot().resolve_plan(&s.plan)?;
        fs::write(p, format_plan(problem.robot(), &ids))?;
    }
    Ok(status_code(out.status))
}

fn cmd_compile(a: &CompileArgs) -> anyhow::Result<u8> {
    let problem = a.model.load()?;
    let aug = compile(&problem, &a.opts.config())?;
    let text = serialize_task(&aug.task);
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("domain.pddl"), text.domain)?;
    fs::write(a.out.join("problem.pddl"), text.problem)?;
    let size = aug.size();
    println!(
        "fluents {} (base {}), actions {} (base {}), diff {}",
        size.fluents, size.base_fluents, size.actions, size.base_actions, size.diff
    );
    write_json(&a.json, &serde_json::json!({ "size": size, "diff": problem.diff() }))?;
    Ok(0)
}

fn cmd_verify(a: &VerifyArgs) -> anyhow::Result<u8> {
    let plan = parse_plan(&read(&a.plan)?)?;
    let [rd, rp] = read_pair(&a.robot)?;
    let Some(human) = &a.human else {
        if a.explanation.is_some() || a.optimal {
            bail!("--explanation and --optimal need --human");
        }
        let task = load_task(&rd, &rp, GroundOptions::default())?;
        let report = validate_plan(&task, &task.resolve_plan(&plan)?);
        println!("{}", serde_json::to_string_pretty(&report)?);
        write_json(&a.json, &report)?;
        return Ok(if report.is_valid() { 0 } else { 1 });
    };
    let [hd, hp] = read_pair(human)?;
    let problem = EaProblem::from_pddl(&rd, &rp, &hd, &hp)?;
    let explanation: Vec<ModelUpdate> = match &a.explanation {
        Some(p) => serde_json::from_str(&read(p)?).context("explanation must be a JSON array of updates")?,
        None => Vec::new(),
    };
    let sol = EaSolution { explanation, plan, explanation_cost: Cost::from_integer(0), task_cost: Cost::from_integer(0) };
    let limits = a.optimal.then(|| Limits { time: a.time_limit.map(Duration::from_secs_f64), nodes: None });
    let check = verify_solution(&problem, &sol, limits)?;
    println!("{}", serde_json::to_string_pretty(&check)?);
    write_json(&a.json, &check)?;
    Ok(if check.valid { 0 } else { 1 })
}

fn cmd_perturb(a: &PerturbArgs, seed: u64) -> anyhow::Result<u8> {
    let [d, p] = read_pair(&a.robot)?;
    let robot = load_task(&d, &p, GroundOptions::default())?;
    let human = perturb_model(&robot, a.updates, seed)?;
    let diff = diff_models(&robot, &human)?;
    let text = serialize_task(&human);
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("domain.pddl"), text.domain)?;
    fs::write(a.out.join("problem.pddl"), text.problem)?;
    for u in diff.updates() {
        println!("{u}");
    }
    write_json(&a.json, &diff)?;
    Ok(0)
}

fn cmd_bench(a: &BenchArgs, seed: u64) -> anyhow::Result<u8> {
    let names: Vec<&str> = a.domains.iter().map(String::as_str).collect();
    for n in &names {
        if corpus::mini(n).is_empty() {
            bail!("no bundled domain `{n}`");
        }
    }
    let mut cfg =
        if a.instance.is_empty() || !names.is_empty() { BenchConfig::mini_suite(&names) } else { BenchConfig::default() };
    for pair in a.instance.chunks(2) {
        let [domain, problem] = read_pair(pair)?;
        let stem = |p: &Path| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        cfg.domains.push(BenchSource {
            domain_name: stem(&pair[0]),
            problem_name: stem(&pair[1]),
            domain,
            problem,
            updates: None,
        });
    }
    if let Some(n) = a.updates {
        cfg.updates_per_variant = n;
        cfg.domains.iter_mut().for_each(|d| d.updates = None);
    }
    cfg.variants_per_domain = a.variants;
    cfg.time_limit = Duration::from_secs_f64(a.time_limit);
    cfg.node_limit = a.node_limit;
    cfg.expl_cost_factor = a.expl_cost_factor;
    cfg.ordering = a.ordering;
    cfg.heuristic = a.heuristic;
    cfg.methods = a.methods.clone();
    cfg.jobs = a.jobs;
    cfg.seed = seed;
    for m in &cfg.methods {
        strategy_by_name(m)?;
    }
    let rows = run_bench(&cfg)?;
    write_csv(&rows, fs::File::create(&a.csv).with_context(|| format!("creating {}", a.csv.display()))?)?;
    println!("{:<12} {:<10} {:>8} {:>10}", "domain", "method", "solved", "mean_s");
    for c in summarize(&rows, cfg.time_limit) {
        println!("{:<12} {:<10} {:>4}/{:<3} {:>10.3}", c.domain, c.method, c.solved, c.total, c.mean_runtime_s);
    }
    println!("wrote {} rows to {}", rows.len(), a.csv.display());
    Ok(0)
}

fn cmd_oracle(a: &OracleArgs) -> anyhow::Result<u8> {
    let problem = a.model.load()?;
    let costs = ExplanationCosts::uniform(a.expl_cost);
    let caps = OracleCaps::default();
    if let Some(p) = &a.mce {
        let plan = parse_plan(&read(p)?)?;
        return match mce(&problem, &plan, &costs, &caps)? {
            Some(e) => {
                println!("{}", serde_json::to_string_pretty(&e)?);
                Ok(0)
            }
            None => {
                println!("no explanation makes this plan optimal");
                Ok(1)
            }
        };
    }
    let sols = enumerate_ea_solutions(&problem, &costs, a.cost_cap, a.len_cap, &caps)?;
    for s in &sols {
        let e: Vec<String> = s.explanation.iter().map(ToString::to_string).collect();
        println!("{} [{}] {}", format_cost_decimal(&s.total_cost()), e.join(", "), s.plan.join(" "));
    }
    Ok(if sols.is_empty() { 1 } else { 0 })
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let seed = match std::env::var("EA_PLAN_SEED") {
        Ok(v) => v.trim().parse().with_context(|| format!("EA_PLAN_SEED=`{v}` is not an integer"))?,
        Err(_) => cli.seed,
    };
    match &cli.cmd {
        Cmd::Compile(a) => cmd_compile(a),
        Cmd::Solve(a) => cmd_solve(a, false),
        Cmd::Baseline(a) => cmd_solve(a, true),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Perturb(a) => cmd_perturb(a, seed),
        Cmd::Bench(a) => cmd_bench(a, seed),
        Cmd::DemoUsar => {
            print!("{}", render_demo(&corpus::usar()?, &run_usar_demo()?));
            Ok(0)
        }
        Cmd::Oracle(a) => cmd_oracle(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv = match config::expand_args(std::env::args_os().collect()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(3);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

pub(crate) fn command() -> clap::Command {
    <Cli as clap::CommandFactory>::command()
}
