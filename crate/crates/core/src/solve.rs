//! Solving compiled EA tasks under the three regimes: plain validity, an
//! optimality guard on the goal test, and a soft penalty for plans the
//! human would not consider optimal.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::compile::{
    compile, extract_solution, AugmentedTask, CompileConfig, EaProblem, EaSolution, ExplanationCosts, ModelDiff, ModelUpdate,
    Ordering, Stage, STARTED_FLUENT,
};
use crate::cost::{rational_gcd, Cost};
use crate::error::{Error, Result};
use crate::grounding::{validate_plan, ActionId, ActionRole, FluentId, PlanningTask, State};
use crate::planner::{astar_with, optimal_cost, GoalPolicy, GoalVerdict, HeuristicKind, Limits, SearchResult, SearchStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    Valid,
    OptimalGuard,
    Penalty(#[serde(with = "crate::cost::serde_cost")] Cost),
}

impl SolveMode {
    /// Registry name of the strategy implementing this mode.
    pub fn strategy(&self) -> &'static str {
        match self {
            SolveMode::Valid => "valid",
            SolveMode::OptimalGuard => "optimal",
            SolveMode::Penalty(_) => "penalty",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Solved,
    Unsolvable,
    Timeout,
    ResourceLimit,
    /// The baseline ran out of candidate update sets.
    ApproximationFailure,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Solved => "solved",
            SolveStatus::Unsolvable => "unsolvable",
            SolveStatus::Timeout => "timeout",
            SolveStatus::ResourceLimit => "resource-limit",
            SolveStatus::ApproximationFailure => "approximation-failure",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<SearchStatus> for SolveStatus {
    fn from(s: SearchStatus) -> Self {
        match s {
            SearchStatus::Solved => SolveStatus::Solved,
            SearchStatus::ProvenUnsolvable => SolveStatus::Unsolvable,
            SearchStatus::Timeout => SolveStatus::Timeout,
            SearchStatus::ResourceLimit => SolveStatus::ResourceLimit,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub compile: CompileConfig,
    pub heuristic: HeuristicKind,
    pub limits: Limits,
    /// Share of the outer limits given to each optimality test.
    pub inner_fraction: f64,
    pub memoize: bool,
    /// Penalty weight; `None` means twice the largest task action cost.
    pub penalty: Option<Cost>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            compile: CompileConfig::default(),
            heuristic: HeuristicKind::Hmax,
            limits: Limits::NONE,
            inner_fraction: 0.25,
            memoize: true,
            penalty: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub method: String,
    pub status: SolveStatus,
    pub solution: Option<EaSolution>,
    /// Objective value: total cost plus any penalty.
    #[serde(with = "crate::cost::serde_cost")]
    pub objective: Cost,
    pub penalized: bool,
    /// Augmented plan, for compiled strategies.
    pub augmented_plan: Option<Vec<String>>,
    pub expanded: usize,
    pub generated: usize,
    pub optimality_tests: usize,
    pub cache_hits: usize,
    pub wall_time: f64,
}

impl SolveOutcome {
    pub(crate) fn empty(method: &str, status: SolveStatus) -> Self {
        SolveOutcome {
            method: method.to_string(),
            status,
            solution: None,
            objective: Cost::from_integer(0),
            penalized: false,
            augmented_plan: None,
            expanded: 0,
            generated: 0,
            optimality_tests: 0,
            cache_hits: 0,
            wall_time: 0.0,
        }
    }
}

/// A way of producing an EA solution, selectable by name.
pub trait SolveStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, problem: &EaProblem, cfg: &SolveConfig) -> Result<SolveOutcome>;
}

struct ValidStrategy;
struct GuardStrategy;
struct PenaltyStrategy;

static STRATEGIES: [&dyn SolveStrategy; 4] =
    [&ValidStrategy, &GuardStrategy, &PenaltyStrategy, &crate::baseline::ModelSpaceSearch];

pub fn strategies() -> &'static [&'static dyn SolveStrategy] {
    &STRATEGIES
}

pub fn strategy_by_name(name: &str) -> Result<&'static dyn SolveStrategy> {
    STRATEGIES.iter().copied().find(|s| s.name() == name).ok_or_else(|| Error::UnknownStrategy {
        kind: "strategy",
        name: name.to_string(),
        available: STRATEGIES.iter().map(|s| s.name()).collect::<Vec<_>>().join(", "),
    })
}

impl FromStr for SolveMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "valid" => Ok(SolveMode::Valid),
            "optimal" | "optimal-guard" => Ok(SolveMode::OptimalGuard),
            "penalty" => Ok(SolveMode::Penalty(Cost::from_integer(0))),
            _ => Err(Error::Config(format!("unknown mode `{s}` (valid, optimal, penalty)"))),
        }
    }
}

/// Solves `problem` in the given regime. A penalty mode with weight 0
/// falls back to `cfg.penalty` or its default.
pub fn solve_ea(problem: &EaProblem, mode: SolveMode, cfg: &SolveConfig) -> Result<SolveOutcome> {
    let mut cfg = cfg.clone();
    if let SolveMode::Penalty(w) = mode {
        if w > Cost::from_integer(0) {
            cfg.penalty = Some(w);
        }
    }
    strategy_by_name(mode.strategy())?.solve(problem, &cfg)
}

pub fn default_penalty(problem: &EaProblem) -> Cost {
    let max = problem.robot().actions().iter().map(|a| a.cost).max().unwrap_or(Cost::from_integer(1));
    max * 2
}

/// Canonical key of an explanation: its meta fluents in id order.
fn explanation_of(aug: &AugmentedTask, s: &State) -> Vec<FluentId> {
    aug.meta_fluents().filter(|(f, u)| s.contains(*f) == u.is_plus()).map(|(f, _)| f).collect()
}

/// Memoized optimality tests, keyed by the explanation.
pub struct OptimalityMemo {
    limits: Limits,
    enabled: bool,
    table: HashMap<Vec<ModelUpdate>, (PlanningTask, Option<Cost>)>,
    pub tests: usize,
    pub hits: usize,
}

impl OptimalityMemo {
    pub fn new(limits: Limits, enabled: bool) -> Self {
        OptimalityMemo { limits, enabled, table: HashMap::new(), tests: 0, hits: 0 }
    }

    fn entry(&mut self, problem: &EaProblem, e: &[ModelUpdate]) -> Result<&(PlanningTask, Option<Cost>)> {
        self.tests += 1;
        if !self.enabled {
            self.table.clear();
        }
        if self.table.contains_key(e) {
            self.hits += 1;
        } else {
            let human = problem.updated_human(e)?;
            let opt = match optimal_cost(&human, self.limits) {
                Ok(c) => c,
                Err(status) => {
                    log::warn!("optimality test for {} updates hit its limit ({}); counted as failure", e.len(), status.as_str());
                    None
                }
            };
            self.table.insert(e.to_vec(), (human, opt));
        }
        Ok(&self.table[e])
    }

    /// Optimal cost of the human model updated by `e`; `None` when it is
    /// unsolvable or the inner search hit its limit.
    pub fn optimum(&mut self, problem: &EaProblem, e: &[ModelUpdate]) -> Result<Option<Cost>> {
        Ok(self.entry(problem, e)?.1)
    }

    /// The optimum for `e` if a previous call already computed it.
    pub fn known_optimum(&self, e: &[ModelUpdate]) -> Option<Option<Cost>> {
        self.table.get(e).map(|(_, opt)| *opt)
    }

    /// Whether `plan` is optimal in the human model updated by `e`.
    pub fn test(&mut self, problem: &EaProblem, e: &[ModelUpdate], plan: &[String]) -> Result<bool> {
        let (human, opt) = self.entry(problem, e)?;
        let Ok(ids) = human.resolve_plan(plan) else {
            return Ok(false);
        };
        let rep = validate_plan(human, &ids);
        Ok(rep.is_valid() && *opt == Some(rep.total_cost))
    }
}

/// Whether `plan` is optimal in `M_H + e`. An inner search that hits its
/// limit makes the test fail.
pub fn optimality_test(problem: &EaProblem, e: &[ModelUpdate], plan: &[String], limits: Limits) -> Result<bool> {
    OptimalityMemo::new(limits, false).test(problem, e, plan)
}

struct ExpectationPolicy<'a> {
    aug: &'a AugmentedTask,
    memo: OptimalityMemo,
    penalty: Option<Cost>,
    error: Option<Error>,
    deadline: Option<Instant>,
    costs_differ: bool,
    /// Set when the explanation is fixed once this fluent holds and the
    /// heuristic is admissible, which makes cost-based pruning sound.
    frozen_after: Option<FluentId>,
    optima: HashMap<Vec<FluentId>, Option<Cost>>,
}

impl GoalPolicy for ExpectationPolicy<'_> {
    fn verdict(&mut self, task: &PlanningTask, state: &State, plan: &[ActionId]) -> GoalVerdict {
        let e: Vec<ModelUpdate> =
            explanation_of(self.aug, state).into_iter().map(|f| self.aug.update_of(f).expect("meta").clone()).collect();
        let names: Vec<String> = plan
            .iter()
            .filter(|&&a| task.action(a).role == ActionRole::TaskLevel)
            .map(|&a| task.action(a).name.clone())
            .collect();
        let ok = match self.memo.test(self.aug.problem(), &e, &names) {
            Ok(ok) => ok,
            Err(err) => {
                self.error.get_or_insert(err);
                false
            }
        };
        match (ok, self.penalty) {
            (true, _) => GoalVerdict::Accept,
            (false, None) => GoalVerdict::Reject,
            (false, Some(w)) => GoalVerdict::Penalize(w),
        }
    }

    // With shared action costs a cheaper path to the same augmented state
    // has the same continuations and is never judged worse, so only cost
    // disagreements force paths apart.
    fn path_sensitive(&self) -> bool {
        self.costs_differ
    }

    // Once the explanation is fixed, a node whose task cost already exceeds
    // the human optimum under that explanation cannot lead to an accepted
    // plan.
    fn prune(&mut self, _task: &PlanningTask, state: &State, task_cost: Cost, h: Cost) -> bool {
        let Some(started) = self.frozen_after else { return false };
        if !state.contains(started) {
            return false;
        }
        // Only optima already paid for by a goal test are used; computing one
        // per explanation here costs more than the pruning saves.
        let key = explanation_of(self.aug, state);
        let opt = match self.optima.get(&key) {
            Some(&opt) => opt,
            None => {
                let e: Vec<ModelUpdate> = key.iter().map(|&f| self.aug.update_of(f).expect("meta").clone()).collect();
                match self.memo.known_optimum(&e) {
                    Some(opt) => {
                        self.optima.insert(key, opt);
                        opt
                    }
                    None => return false,
                }
            }
        };
        opt.is_none_or(|opt| task_cost + h > opt)
    }

    fn exhausted(&self) -> bool {
        self.error.is_some() || self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

fn finish(
    method: &str,
    aug: &AugmentedTask,
    r: SearchResult,
    memo: Option<&OptimalityMemo>,
    start: Instant,
) -> Result<SolveOutcome> {
    let mut out = SolveOutcome::empty(method, r.status.into());
    out.expanded = r.expanded;
    out.generated = r.generated;
    out.penalized = r.penalized;
    out.objective = r.cost;
    if let Some(m) = memo {
        out.optimality_tests = m.tests;
        out.cache_hits = m.hits;
    }
    if let Some(plan) = &r.plan {
        out.solution = Some(extract_solution(aug, plan)?);
        out.augmented_plan = Some(plan.iter().map(|&a| aug.task.action(a).name.clone()).collect());
    }
    out.wall_time = start.elapsed().as_secs_f64();
    Ok(out)
}

fn solve_compiled(method: &str, problem: &EaProblem, cfg: &SolveConfig, penalty: Option<Option<Cost>>) -> Result<SolveOutcome> {
    let start = Instant::now();
    let aug = compile(problem, &cfg.compile)?;
    let factory = cfg.heuristic.factory();
    let Some(penalty) = penalty else {
        let r = astar_with(&aug.task, factory, cfg.limits, &mut crate::planner::AcceptGoal);
        return finish(method, &aug, r, None, start);
    };
    let mut policy = ExpectationPolicy {
        aug: &aug,
        memo: OptimalityMemo::new(cfg.limits.fraction(cfg.inner_fraction), cfg.memoize),
        penalty,
        error: None,
        deadline: cfg.limits.time.map(|t| start + t),
        costs_differ: costs_differ(problem),
        frozen_after: None,
        optima: HashMap::new(),
    };
    let c = &cfg.compile;
    if penalty.is_none()
        && !policy.costs_differ
        && factory.admissible()
        && c.ordering == Ordering::PlanPrefix
        && c.stage == Stage::Propose
    {
        policy.frozen_after = aug.task.fluent_id(STARTED_FLUENT);
    }
    let r = astar_with(&aug.task, factory, cfg.limits, &mut policy);
    if let Some(err) = policy.error.take() {
        return Err(err);
    }
    let memo = policy.memo;
    finish(method, &aug, r, Some(&memo), start)
}

fn costs_differ(problem: &EaProblem) -> bool {
    let human = problem.human();
    problem.robot().actions().iter().any(|a| human.action_id(&a.name).is_none_or(|h| human.action(h).cost != a.cost))
}

impl SolveStrategy for ValidStrategy {
    fn name(&self) -> &'static str {
        "valid"
    }
    fn solve(&self, problem: &EaProblem, cfg: &SolveConfig) -> Result<SolveOutcome> {
        solve_compiled(self.name(), problem, cfg, None)
    }
}

impl SolveStrategy for GuardStrategy {
    fn name(&self) -> &'static str {
        "optimal"
    }
    fn solve(&self, problem: &EaProblem, cfg: &SolveConfig) -> Result<SolveOutcome> {
        solve_compiled(self.name(), problem, cfg, Some(None))
    }
}

impl SolveStrategy for PenaltyStrategy {
    fn name(&self) -> &'static str {
        "penalty"
    }
    fn solve(&self, problem: &EaProblem, cfg: &SolveConfig) -> Result<SolveOutcome> {
        let w = cfg.penalty.unwrap_or_else(|| default_penalty(problem));
        if w <= Cost::from_integer(0) {
            return Err(Error::Config("penalty weight must be positive".into()));
        }
        solve_compiled(self.name(), problem, cfg, Some(Some(w)))
    }
}

/// A certified lower bound on the gap between the optimal and the
/// second-best plan cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaBound {
    #[serde(with = "crate::cost::serde_cost")]
    pub value: Cost,
    pub exact: bool,
}

/// Any two plan costs differ by an integer combination of action costs,
/// hence by a multiple of their rational gcd. For unit costs this is 1.
pub fn delta_lower_bound(task: &PlanningTask) -> DeltaBound {
    let value = rational_gcd(task.actions().iter().map(|a| &a.cost)).unwrap_or(Cost::from_integer(0));
    DeltaBound { value, exact: false }
}

/// Uniform explanation costs small enough that explaining every update is
/// still cheaper than the smallest possible plan-cost gap.
pub fn agent_optimal_costs(diff: &ModelDiff, bound: DeltaBound) -> ExplanationCosts {
    let each = bound.value / Cost::from_integer(diff.len() as i64 + 1);
    let mut costs = ExplanationCosts::uniform(each);
    for u in diff.updates() {
        costs.set(&u, each);
    }
    costs
}
