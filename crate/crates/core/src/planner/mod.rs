//! Forward A* over grounded tasks.
//!
//! Costs are scaled to integers by the LCM of the action cost denominators,
//! so every comparison inside the search is exact. Open-list order is
//! f, then lower h, then generation order; successors are generated in
//! lexicographic action-name order.

mod heuristic;

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cost::{denominator_lcm, Cost};
use crate::grounding::{ActionId, ActionRole, PlanningTask, State};

pub use heuristic::{hadd, heuristic_by_name, hmax, registry, Estimate, Heuristic, HeuristicFactory, HeuristicKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Limits {
    pub time: Option<Duration>,
    pub nodes: Option<usize>,
}

impl Limits {
    pub const NONE: Limits = Limits { time: None, nodes: None };

    pub fn with_time(secs: f64) -> Self {
        Limits { time: Some(Duration::from_secs_f64(secs)), nodes: None }
    }

    /// A share of this budget, used for nested searches.
    pub fn fraction(&self, f: f64) -> Self {
        Limits { time: self.time.map(|t| t.mul_f64(f)), nodes: self.nodes.map(|n| ((n as f64) * f).ceil() as usize) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchStatus {
    Solved,
    ProvenUnsolvable,
    Timeout,
    ResourceLimit,
}

impl SearchStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SearchStatus::Solved => "solved",
            SearchStatus::ProvenUnsolvable => "proven-unsolvable",
            SearchStatus::Timeout => "timeout",
            SearchStatus::ResourceLimit => "resource-limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub plan: Option<Vec<ActionId>>,
    /// Objective value, including any goal penalty.
    #[serde(with = "crate::cost::serde_cost")]
    pub cost: Cost,
    pub penalized: bool,
    pub expanded: usize,
    pub generated: usize,
    pub wall_time: f64,
    pub status: SearchStatus,
}

impl SearchResult {
    pub fn solved(&self) -> bool {
        self.status == SearchStatus::Solved
    }
}

/// What to do with a goal state popped from the open list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoalVerdict {
    Accept,
    Reject,
    /// Accept only at objective `g + penalty`; the node is re-queued.
    Penalize(Cost),
}

pub trait GoalPolicy {
    fn verdict(&mut self, task: &PlanningTask, state: &State, plan: &[ActionId]) -> GoalVerdict;

    /// Whether nodes that reach the same state with different task-level
    /// cost must be kept apart. Needed when the verdict depends on the path.
    fn path_sensitive(&self) -> bool {
        false
    }

    /// Whether a node can be dropped because no goal below it would be
    /// accepted. `task_cost` is the task-level cost so far and `h` the
    /// heuristic estimate of the rest.
    fn prune(&mut self, _task: &PlanningTask, _state: &State, _task_cost: Cost, _h: Cost) -> bool {
        false
    }

    /// Called periodically; returning true aborts the search as a timeout.
    fn exhausted(&self) -> bool {
        false
    }
}

pub struct AcceptGoal;

impl GoalPolicy for AcceptGoal {
    fn verdict(&mut self, _: &PlanningTask, _: &State, _: &[ActionId]) -> GoalVerdict {
        GoalVerdict::Accept
    }
}

/// Integer action costs and the common denominator they were scaled by.
pub fn scale_costs(task: &PlanningTask) -> (Vec<i64>, i64) {
    let scale = denominator_lcm(task.actions().iter().map(|a| &a.cost));
    let costs = task.actions().iter().map(|a| (a.cost * scale).to_integer()).collect();
    (costs, scale)
}

struct Node {
    state: State,
    parent: Option<usize>,
    action: Option<ActionId>,
    g: i64,
    task_g: i64,
}

fn path(nodes: &[Node], mut i: usize) -> Vec<ActionId> {
    let mut out = Vec::new();
    while let (Some(p), Some(a)) = (nodes[i].parent, nodes[i].action) {
        out.push(a);
        i = p;
    }
    out.reverse();
    out
}

pub fn astar(task: &PlanningTask, h: HeuristicKind, limits: Limits) -> SearchResult {
    astar_with(task, h.factory(), limits, &mut AcceptGoal)
}

pub fn astar_with(
    task: &PlanningTask,
    factory: &dyn HeuristicFactory,
    limits: Limits,
    policy: &mut dyn GoalPolicy,
) -> SearchResult {
    let start = Instant::now();
    let deadline = limits.time.map(|t| start + t);
    let (costs, scale) = scale_costs(task);
    let mut heur = factory.build(task, &costs);
    let order = task.actions_by_name();
    let task_level: Vec<bool> = task.actions().iter().map(|a| a.role == ActionRole::TaskLevel).collect();
    let keyed = policy.path_sensitive();

    let mut result = SearchResult {
        plan: None,
        cost: Cost::from_integer(0),
        penalized: false,
        expanded: 0,
        generated: 1,
        wall_time: 0.0,
        status: SearchStatus::ProvenUnsolvable,
    };
    let finish = |mut r: SearchResult| {
        r.wall_time = start.elapsed().as_secs_f64();
        r
    };

    let init = task.initial_state();
    let Some(h0) = heur.estimate(&init) else {
        return finish(result);
    };
    let mut nodes = vec![Node { state: init.clone(), parent: None, action: None, g: 0, task_g: 0 }];
    let mut best: HashMap<(State, i64), i64> = HashMap::new();
    best.insert((init, 0), 0);
    // (f, h, seq, node, penalty) with penalty < 0 meaning an ordinary node.
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    open.push(Reverse((h0, h0, seq, 0usize, -1i64)));

    while let Some(Reverse((f, _, _, idx, penalty))) = open.pop() {
        if penalty >= 0 {
            result.plan = Some(path(&nodes, idx));
            result.cost = Cost::new(f, scale);
            result.penalized = true;
            result.status = SearchStatus::Solved;
            return finish(result);
        }
        let (g, task_g) = (nodes[idx].g, nodes[idx].task_g);
        let key = (nodes[idx].state.clone(), if keyed { task_g } else { 0 });
        if best.get(&key).is_some_and(|&b| b < g) {
            continue;
        }
        if task.is_goal(&nodes[idx].state) {
            let plan = path(&nodes, idx);
            match policy.verdict(task, &nodes[idx].state, &plan) {
                GoalVerdict::Accept => {
                    result.plan = Some(plan);
                    result.cost = Cost::new(g, scale);
                    result.status = SearchStatus::Solved;
                    return finish(result);
                }
                GoalVerdict::Reject => {}
                GoalVerdict::Penalize(w) => {
                    let w = (w * scale).ceil().to_integer().max(0);
                    seq += 1;
                    open.push(Reverse((g + w, 0, seq, idx, w)));
                }
            }
        }
        if limits.nodes.is_some_and(|n| result.expanded >= n) {
            result.status = SearchStatus::ResourceLimit;
            return finish(result);
        }
        if result.expanded.is_multiple_of(64) && (deadline.is_some_and(|d| Instant::now() >= d) || policy.exhausted()) {
            result.status = SearchStatus::Timeout;
            return finish(result);
        }
        result.expanded += 1;
        for &a in &order {
            let act = task.action(a);
            if !act.is_applicable(&nodes[idx].state) {
                continue;
            }
            let succ = act.apply_unchecked(&nodes[idx].state);
            let g2 = g + costs[a];
            let tg2 = if task_level[a] { task_g + costs[a] } else { task_g };
            let key = (succ.clone(), if keyed { tg2 } else { 0 });
            match best.entry(key) {
                Entry::Occupied(mut e) => {
                    if *e.get() <= g2 {
                        continue;
                    }
                    e.insert(g2);
                }
                Entry::Vacant(e) => {
                    e.insert(g2);
                }
            }
            let Some(h) = heur.estimate(&succ) else {
                continue;
            };
            if policy.prune(task, &succ, Cost::new(tg2, scale), Cost::new(h, scale)) {
                continue;
            }
            result.generated += 1;
            seq += 1;
            nodes.push(Node { state: succ, parent: Some(idx), action: Some(a), g: g2, task_g: tg2 });
            open.push(Reverse((g2 + h, h, seq, nodes.len() - 1, -1)));
        }
    }
    finish(result)
}

/// Optimal plan cost with h_max. `Ok(None)` is a proof of unsolvability;
/// `Err` carries the limit that was hit.
pub fn optimal_cost(task: &PlanningTask, limits: Limits) -> Result<Option<Cost>, SearchStatus> {
    let r = astar(task, HeuristicKind::Hmax, limits);
    match r.status {
        SearchStatus::Solved => Ok(Some(r.cost)),
        SearchStatus::ProvenUnsolvable => Ok(None),
        s => Err(s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::cost;
    use crate::grounding::tests::fluents;
    use crate::grounding::{load_task, validate_plan, GroundAction, GroundOptions};

    const BW: &str = include_str!("../../data/blocksworld/domain.pddl");
    const BW3R: &str = include_str!("../../data/blocksworld/bw3-reverse.pddl");
    const BW3T: &str = include_str!("../../data/blocksworld/bw3-table.pddl");

    #[test]
    fn blocksworld_reverse_tower_takes_six() {
        let t = load_task(BW, BW3R, GroundOptions::default()).unwrap();
        for h in [HeuristicKind::Blind, HeuristicKind::Hmax] {
            let r = astar(&t, h, Limits::NONE);
            assert_eq!(r.status, SearchStatus::Solved);
            assert_eq!(r.cost, cost(6));
            assert!(validate_plan(&t, r.plan.as_ref().unwrap()).is_valid());
        }
        let hm = astar(&t, HeuristicKind::Hmax, Limits::NONE);
        let bl = astar(&t, HeuristicKind::Blind, Limits::NONE);
        assert!(hm.expanded <= bl.expanded);
    }

    #[test]
    fn search_is_deterministic() {
        let t = load_task(BW, BW3T, GroundOptions::default()).unwrap();
        let a = astar(&t, HeuristicKind::Hmax, Limits::NONE);
        let b = astar(&t, HeuristicKind::Hmax, Limits::NONE);
        assert_eq!(a.plan, b.plan);
        assert_eq!(a.cost, cost(4));
    }

    #[test]
    fn goal_in_init_gives_empty_plan() {
        let t = PlanningTask::new("g", fluents(&["p"]), vec![], vec![0], vec![0]).unwrap();
        let r = astar(&t, HeuristicKind::Hmax, Limits::NONE);
        assert_eq!(r.plan, Some(vec![]));
        assert_eq!(r.cost, cost(0));
    }

    #[test]
    fn unreachable_goal_is_proven_unsolvable() {
        let mut a = GroundAction::new("noop", cost(1), ActionRole::TaskLevel);
        a.unconditional_mut().add = vec![0];
        let t = PlanningTask::new("u", fluents(&["p", "q"]), vec![a], vec![], vec![1]).unwrap();
        assert_eq!(optimal_cost(&t, Limits::NONE), Ok(None));
        assert_eq!(hmax(&t, &t.initial_state()), Estimate::Unreachable);
    }

    #[test]
    fn node_limit_reports_resource_limit() {
        let t = load_task(BW, BW3R, GroundOptions::default()).unwrap();
        let r = astar(&t, HeuristicKind::Blind, Limits { time: None, nodes: Some(2) });
        assert_eq!(r.status, SearchStatus::ResourceLimit);
        assert!(r.plan.is_none());
    }

    #[test]
    fn fractional_costs_stay_exact() {
        let mk = |n: &str, p: usize, q: usize, c: Cost| {
            let mut a = GroundAction::new(n, c, ActionRole::TaskLevel);
            a.pre = vec![p];
            a.unconditional_mut().add = vec![q];
            a
        };
        let t = PlanningTask::new(
            "frac",
            fluents(&["a", "b", "c"]),
            vec![mk("ab", 0, 1, Cost::new(1, 3)), mk("bc", 1, 2, Cost::new(1, 2)), mk("ac", 0, 2, Cost::new(5, 6))],
            vec![0],
            vec![2],
        )
        .unwrap();
        let r = astar(&t, HeuristicKind::Hmax, Limits::NONE);
        assert_eq!(r.cost, Cost::new(5, 6));
        // both successors have f = 5/6; the lower h of "ac" wins
        assert_eq!(r.plan.unwrap(), vec![t.action_id("ac").unwrap()]);
    }

    struct PenalizeAll(Cost);

    impl GoalPolicy for PenalizeAll {
        fn verdict(&mut self, _: &PlanningTask, _: &State, _: &[ActionId]) -> GoalVerdict {
            GoalVerdict::Penalize(self.0)
        }
    }

    #[test]
    fn penalized_goal_adds_weight() {
        let t = load_task(BW, BW3T, GroundOptions::default()).unwrap();
        let r = astar_with(&t, HeuristicKind::Hmax.factory(), Limits::NONE, &mut PenalizeAll(cost(3)));
        assert!(r.penalized);
        assert_eq!(r.cost, cost(7));
    }
}
