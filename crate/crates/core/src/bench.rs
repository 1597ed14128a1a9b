//! Random human models, the benchmark harness and the search-and-rescue
//! walkthrough.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compile::{CompileConfig, EaProblem, ExplanationCosts, ModelUpdate, Ordering, Stage};
use crate::corpus::{self, Instance};
use crate::cost::{cost, format_cost_decimal, Cost};
use crate::error::{Error, Result};
use crate::grounding::{format_plan, load_task, FluentId, GroundOptions, PlanningTask};
use crate::planner::{HeuristicKind, Limits};
use crate::solve::{solve_ea, strategy_by_name, SolveConfig, SolveMode, SolveOutcome, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    RemovePrec(usize, FluentId),
    FlipInit(FluentId),
    DropAdd(usize, FluentId),
    DropDel(usize, FluentId),
    AddAdd(usize, FluentId),
    AddDel(usize, FluentId),
    RemoveGoal(FluentId),
    AddGoal(FluentId),
}

/// Perturbable slots grouped by kind. Each slot touches a distinct cell of
/// the model, so `n` applied slots give exactly `n` diff units.
fn slots(task: &PlanningTask) -> Vec<Vec<Slot>> {
    let n = task.num_fluents();
    let mut kinds: Vec<Vec<Slot>> = vec![Vec::new(); 8];
    for (id, a) in task.actions().iter().enumerate() {
        let eff = a.unconditional();
        let cond: Vec<FluentId> = a.conditional().iter().flat_map(|g| g.add.iter().chain(&g.del)).copied().collect();
        for &p in &a.pre {
            kinds[0].push(Slot::RemovePrec(id, p));
        }
        for &p in &eff.add {
            if !eff.del.contains(&p) {
                kinds[2].push(Slot::DropAdd(id, p));
            }
        }
        for &p in &eff.del {
            if !eff.add.contains(&p) {
                kinds[3].push(Slot::DropDel(id, p));
            }
        }
        for p in 0..n {
            if eff.add.contains(&p) || eff.del.contains(&p) || cond.contains(&p) {
                continue;
            }
            kinds[4].push(Slot::AddAdd(id, p));
            // Only deletes of something the action relies on are plausible.
            if a.pre.contains(&p) {
                kinds[5].push(Slot::AddDel(id, p));
            }
        }
    }
    for p in 0..n {
        kinds[1].push(Slot::FlipInit(p));
        if task.goal().contains(&p) {
            kinds[6].push(Slot::RemoveGoal(p));
        } else {
            kinds[7].push(Slot::AddGoal(p));
        }
    }
    kinds
}

/// A human model that differs from `robot` in exactly `n` update units:
/// removed preconditions, flipped initial facts, dropped or added effects and
/// altered goals. The kind of each change is drawn uniformly first so that
/// the large effect-addition pool does not swamp the rest.
pub fn perturb_model(robot: &PlanningTask, n: usize, seed: u64) -> Result<PlanningTask> {
    let mut kinds = slots(robot);
    let available: usize = kinds.iter().map(Vec::len).sum();
    if available < n {
        return Err(Error::Perturb(format!("{n} updates requested but only {available} slots exist")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(n);
    while chosen.len() < n {
        let open: Vec<usize> = (0..kinds.len()).filter(|&k| !kinds[k].is_empty()).collect();
        let k = *open.choose(&mut rng).expect("slots remain");
        let i = rng.gen_range(0..kinds[k].len());
        chosen.push(kinds[k].swap_remove(i));
    }

    let mut actions = robot.actions().to_vec();
    let mut init = robot.init().to_vec();
    let mut goal = robot.goal().to_vec();
    for s in chosen {
        match s {
            Slot::RemovePrec(a, p) => actions[a].pre.retain(|&x| x != p),
            Slot::FlipInit(p) => {
                if let Some(i) = init.iter().position(|&x| x == p) {
                    init.remove(i);
                } else {
                    init.push(p);
                }
            }
            Slot::DropAdd(a, p) => actions[a].unconditional_mut().add.retain(|&x| x != p),
            Slot::DropDel(a, p) => actions[a].unconditional_mut().del.retain(|&x| x != p),
            Slot::AddAdd(a, p) => actions[a].unconditional_mut().add.push(p),
            Slot::AddDel(a, p) => actions[a].unconditional_mut().del.push(p),
            Slot::RemoveGoal(p) => goal.retain(|&x| x != p),
            Slot::AddGoal(p) => goal.push(p),
        }
    }
    PlanningTask::new(format!("{}-h{seed}", robot.name), robot.fluents().to_vec(), actions, init, goal)
}

/// Explanation costs as a multiple of the cost of the action an update
/// touches. Initial-state and goal updates are priced against the most
/// expensive action.
pub fn scaled_explanation_costs(problem: &EaProblem, factor: Cost) -> ExplanationCosts {
    let robot = problem.robot();
    let max = robot.actions().iter().map(|a| a.cost).max().unwrap_or_else(|| cost(1));
    let mut costs = ExplanationCosts::uniform(factor * max);
    for u in problem.diff().updates() {
        if let Some(a) = u.action.as_deref().and_then(|a| robot.action_id(a)) {
            costs.set(&u, factor * robot.action(a).cost);
        }
    }
    costs
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchSource {
    pub domain_name: String,
    pub problem_name: String,
    pub domain: String,
    pub problem: String,
    /// Overrides [`BenchConfig::updates_per_variant`].
    pub updates: Option<usize>,
}

impl From<Instance> for BenchSource {
    fn from(i: Instance) -> Self {
        BenchSource {
            domain_name: i.domain_name.to_string(),
            problem_name: i.problem_name.to_string(),
            domain: i.domain.to_string(),
            problem: i.problem.to_string(),
            updates: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub domains: Vec<BenchSource>,
    pub updates_per_variant: usize,
    pub variants_per_domain: usize,
    pub time_limit: Duration,
    pub node_limit: Option<usize>,
    pub expl_cost_factor: Cost,
    pub ordering: Ordering,
    pub heuristic: HeuristicKind,
    pub seed: u64,
    /// Strategy names from the solver registry.
    pub methods: Vec<String>,
    /// Worker threads; 0 uses rayon's default.
    pub jobs: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            domains: Vec::new(),
            updates_per_variant: 10,
            variants_per_domain: 3,
            time_limit: Duration::from_secs(1800),
            node_limit: None,
            expl_cost_factor: cost(2),
            ordering: Ordering::PlanPrefix,
            heuristic: HeuristicKind::Hmax,
            seed: 0,
            methods: vec!["optimal".into(), "baseline".into()],
            jobs: 0,
        }
    }
}

impl BenchConfig {
    /// The bundled mini suite with the evaluation protocol's update counts:
    /// 5 for gripper and driverlog, 10 elsewhere.
    pub fn mini_suite(domains: &[&str]) -> Self {
        let pick = |i: &Instance| domains.is_empty() || domains.contains(&i.domain_name);
        let sources = corpus::MINI
            .iter()
            .filter(|i| pick(i))
            .map(|&i| {
                let mut s = BenchSource::from(i);
                if matches!(i.domain_name, "gripper" | "driverlog") {
                    s.updates = Some(5);
                }
                s
            })
            .collect();
        BenchConfig { domains: sources, time_limit: Duration::from_secs(60), ..Default::default() }
    }

    fn variant_seed(&self, domain: &str, variant: usize, problem: &str) -> u64 {
        // FNV-1a, so seeds do not depend on the std hasher.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in domain.bytes().chain([0]).chain(problem.bytes()) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h ^ self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (variant as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub domain: String,
    pub variant: usize,
    pub problem: String,
    pub method: String,
    pub status: String,
    pub cost: String,
    pub expl_cost: String,
    pub task_cost: String,
    pub runtime_s: f64,
    pub expanded: usize,
}

impl BenchRow {
    pub fn solved(&self) -> bool {
        self.status == SolveStatus::Solved.as_str()
    }

    pub fn cost_value(&self) -> Option<Cost> {
        crate::cost::parse_cost(&self.cost)
    }
}

struct Job<'a> {
    source: &'a BenchSource,
    variant: usize,
    method: &'a str,
}

fn prepare(cfg: &BenchConfig, src: &BenchSource, variant: usize) -> Result<EaProblem> {
    let robot = load_task(&src.domain, &src.problem, GroundOptions::default())?;
    let n = src.updates.unwrap_or(cfg.updates_per_variant);
    let human = perturb_model(&robot, n, cfg.variant_seed(&src.domain_name, variant, &src.problem_name))?;
    EaProblem::new(robot, human)
}

fn run_job(cfg: &BenchConfig, job: &Job<'_>) -> BenchRow {
    let mut row = BenchRow {
        domain: job.source.domain_name.clone(),
        variant: job.variant,
        problem: job.source.problem_name.clone(),
        method: job.method.to_string(),
        status: String::new(),
        cost: String::new(),
        expl_cost: String::new(),
        task_cost: String::new(),
        runtime_s: 0.0,
        expanded: 0,
    };
    let outcome = prepare(cfg, job.source, job.variant).and_then(|p| {
        let solve_cfg = SolveConfig {
            compile: CompileConfig {
                costs: scaled_explanation_costs(&p, cfg.expl_cost_factor),
                ordering: cfg.ordering,
                stage: Stage::Propose,
                inference: false,
                restrict_unused: true,
            },
            heuristic: cfg.heuristic,
            limits: Limits { time: Some(cfg.time_limit), nodes: cfg.node_limit },
            ..Default::default()
        };
        strategy_by_name(job.method)?.solve(&p, &solve_cfg)
    });
    match outcome {
        Ok(o) => {
            row.status = o.status.as_str().to_string();
            row.runtime_s = o.wall_time.min(cfg.time_limit.as_secs_f64());
            row.expanded = o.expanded;
            if let Some(s) = &o.solution {
                row.cost = format_cost_decimal(&s.total_cost());
                row.expl_cost = format_cost_decimal(&s.explanation_cost);
                row.task_cost = format_cost_decimal(&s.task_cost);
            }
        }
        Err(e) => {
            log::warn!("{}/{} variant {} {}: {e}", row.domain, row.problem, row.variant, row.method);
            row.status = "error".into();
        }
    }
    row
}

/// Runs every (problem, variant, method) job. Rows come back in a fixed
/// order regardless of scheduling; failures become rows, never errors.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let mut jobs = Vec::new();
    for src in &cfg.domains {
        for variant in 0..cfg.variants_per_domain {
            for m in &cfg.methods {
                strategy_by_name(m)?;
                jobs.push(Job { source: src, variant, method: m });
            }
        }
    }
    let run = || jobs.par_iter().map(|j| run_job(cfg, j)).collect::<Vec<_>>();
    if cfg.jobs == 0 {
        return Ok(run());
    }
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(run))
}

pub fn write_csv<W: io::Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<BenchRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coverage {
    pub domain: String,
    pub method: String,
    pub solved: usize,
    pub total: usize,
    /// Unsolved runs count at the time limit.
    pub mean_runtime_s: f64,
}

pub fn summarize(rows: &[BenchRow], time_limit: Duration) -> Vec<Coverage> {
    let mut groups: BTreeMap<(String, String), Vec<&BenchRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.domain.clone(), r.method.clone())).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((domain, method), rs)| {
            let runtime: f64 = rs.iter().map(|r| if r.solved() { r.runtime_s } else { time_limit.as_secs_f64() }).sum();
            Coverage {
                domain,
                method,
                solved: rs.iter().filter(|r| r.solved()).count(),
                total: rs.len(),
                mean_runtime_s: runtime / rs.len() as f64,
            }
        })
        .collect()
}

/// Co-solved (domain, variant, problem) triples where `method` costs more
/// than `reference`.
pub fn dominance_violations<'a>(rows: &'a [BenchRow], method: &str, reference: &str) -> Vec<(&'a BenchRow, &'a BenchRow)> {
    let key = |r: &BenchRow| (r.domain.clone(), r.variant, r.problem.clone());
    let refs: BTreeMap<_, &BenchRow> = rows.iter().filter(|r| r.method == reference && r.solved()).map(|r| (key(r), r)).collect();
    rows.iter()
        .filter(|r| r.method == method && r.solved())
        .filter_map(|r| refs.get(&key(r)).map(|b| (r, *b)))
        .filter(|(a, b)| a.cost_value() > b.cost_value())
        .collect()
}

#[derive(Debug, Clone)]
pub struct DemoRegime {
    pub label: String,
    pub outcome: SolveOutcome,
}

/// The three search-and-rescue regimes: cheap communication, expensive
/// communication, and expensive communication with penalty-mode search.
/// Explanations are offered as the plan is executed, so opening the door
/// shows the human it was unlocked.
pub fn run_usar_demo() -> Result<Vec<DemoRegime>> {
    let problem = corpus::usar()?;
    let cfg = |expl: i64| SolveConfig {
        compile: CompileConfig {
            costs: ExplanationCosts::uniform(cost(expl)),
            ordering: Ordering::PlanPrefix,
            stage: Stage::Execute,
            inference: true,
            restrict_unused: true,
        },
        ..Default::default()
    };
    let regimes = [
        ("communication cost 1", SolveMode::OptimalGuard, 1),
        ("communication cost 100", SolveMode::OptimalGuard, 100),
        ("communication cost 100, penalty 50", SolveMode::Penalty(cost(50)), 100),
    ];
    regimes
        .into_iter()
        .map(|(label, mode, expl)| Ok(DemoRegime { label: label.to_string(), outcome: solve_ea(&problem, mode, &cfg(expl))? }))
        .collect()
}

pub fn render_demo(problem: &EaProblem, regimes: &[DemoRegime]) -> String {
    let mut out = String::new();
    for r in regimes {
        let o = &r.outcome;
        let _ = writeln!(out, "== {} ==", r.label);
        let _ = writeln!(out, "status: {}", o.status);
        if let Some(s) = &o.solution {
            let said: Vec<&str> = o.augmented_plan.iter().flatten().map(String::as_str).collect();
            let (told, seen): (Vec<&ModelUpdate>, Vec<&ModelUpdate>) =
                s.explanation.iter().partition(|u| o.augmented_plan.is_none() || said.contains(&u.explain_name().as_str()));
            if told.is_empty() {
                let _ = writeln!(out, "explanations: none");
            }
            for u in told {
                let _ = writeln!(out, "explain: {u}");
            }
            for u in seen {
                let _ = writeln!(out, "observed during execution: {u}");
            }
            match problem.robot().resolve_plan(&s.plan) {
                Ok(ids) => out.push_str(&format_plan(problem.robot(), &ids)),
                Err(_) => s.plan.iter().for_each(|a| {
                    let _ = writeln!(out, "({a})");
                }),
            }
            let _ = writeln!(
                out,
                "cost: {} (explanations {}, plan {}){}",
                format_cost_decimal(&o.objective),
                format_cost_decimal(&s.explanation_cost),
                format_cost_decimal(&s.task_cost),
                if o.penalized { ", penalized" } else { "" }
            );
        }
        out.push('\n');
    }
    out
}

/// Updates in `explanation` as display strings, for transcripts and logs.
pub fn describe(explanation: &[ModelUpdate]) -> Vec<String> {
    explanation.iter().map(ToString::to_string).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::diff_models;

    fn bw3() -> PlanningTask {
        load_task(corpus::BLOCKSWORLD_DOMAIN, corpus::BW3_TABLE, GroundOptions::default()).unwrap()
    }

    #[test]
    fn zero_updates_is_identity() {
        let t = bw3();
        assert_eq!(perturb_model(&t, 0, 1).unwrap(), t);
    }

    #[test]
    fn diff_has_exactly_n_units() {
        let t = bw3();
        for seed in 0..40 {
            for n in [1, 5, 10] {
                let h = perturb_model(&t, n, seed).unwrap();
                assert_eq!(diff_models(&t, &h).unwrap().len(), n, "seed {seed} n {n}");
            }
        }
        assert_eq!(diff_models(&t, &perturb_model(&t, 5, 7).unwrap()).unwrap().len(), 5);
    }

    #[test]
    fn seeded_and_deterministic() {
        let t = bw3();
        assert_eq!(perturb_model(&t, 6, 3).unwrap(), perturb_model(&t, 6, 3).unwrap());
        assert_ne!(perturb_model(&t, 6, 3).unwrap(), perturb_model(&t, 6, 4).unwrap());
    }

    #[test]
    fn too_many_updates() {
        let t = bw3();
        assert!(matches!(perturb_model(&t, 100_000, 0), Err(Error::Perturb(_))));
    }

    #[test]
    fn mini_suite_uses_reduced_counts() {
        let cfg = BenchConfig::mini_suite(&["gripper", "elevator"]);
        assert!(cfg.domains.iter().all(|d| d.domain_name == "gripper" || d.domain_name == "elevator"));
        assert!(cfg.domains.iter().filter(|d| d.domain_name == "gripper").all(|d| d.updates == Some(5)));
        assert!(cfg.domains.iter().filter(|d| d.domain_name == "elevator").all(|d| d.updates.is_none()));
    }

    #[test]
    fn bench_rows_and_csv_schema() {
        let mut cfg = BenchConfig::mini_suite(&["elevator"]);
        cfg.domains.truncate(1);
        cfg.variants_per_domain = 2;
        cfg.updates_per_variant = 3;
        cfg.time_limit = Duration::from_secs(20);
        let rows = run_bench(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].method, "optimal");
        assert_eq!(rows[1].method, "baseline");
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "domain,variant,problem,method,status,cost,expl_cost,task_cost,runtime_s,expanded"
        );
        assert_eq!(read_csv(&buf[..]).unwrap(), rows);
        assert!(dominance_violations(&rows, "optimal", "baseline").is_empty());
        let again = run_bench(&cfg).unwrap();
        let strip = |rs: &[BenchRow]| rs.iter().map(|r| (r.status.clone(), r.cost.clone(), r.expanded)).collect::<Vec<_>>();
        assert_eq!(strip(&rows), strip(&again));
    }
}
