//! Brute-force ground truth for small instances. Nothing here goes through
//! the compilation or the A* engine: update subsets are enumerated
//! explicitly and plans are found by uninformed search over the robot and
//! updated human models run side by side.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compile::{EaProblem, EaSolution, ExplanationCosts, ModelUpdate};
use crate::cost::Cost;
use crate::error::{Error, Result};
use crate::grounding::{validate_plan, ActionId, PlanningTask, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleCaps {
    pub max_diff: usize,
    /// Distinct search labels (states, or state/cost pairs) per search.
    pub max_states: usize,
    pub max_solutions: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps { max_diff: 20, max_states: 100_000, max_solutions: 100_000 }
    }
}

fn subsets(problem: &EaProblem, caps: &OracleCaps) -> Result<Vec<Vec<ModelUpdate>>> {
    let diff = problem.diff().updates();
    if diff.len() > caps.max_diff {
        return Err(Error::OracleCap(format!("diff has {} updates (cap {})", diff.len(), caps.max_diff)));
    }
    Ok((0u64..1 << diff.len())
        .map(|mask| diff.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, u)| u.clone()).collect())
        .collect())
}

fn applicable_both(r: &PlanningTask, h: &PlanningTask, sr: &State, sh: &State, a: ActionId) -> bool {
    r.action(a).is_applicable(sr) && h.action(a).is_applicable(sh)
}

/// Cheapest plan valid in both `r` and `h` (same action ids), by Dijkstra
/// over paired states. Costs are the robot's.
fn paired_min(r: &PlanningTask, h: &PlanningTask, cap: usize) -> Result<Option<Cost>> {
    let start = (r.initial_state(), h.initial_state());
    let mut best: HashMap<(State, State), Cost> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    best.insert(start.clone(), Cost::from_integer(0));
    heap.push(Reverse((Cost::from_integer(0), seq, start)));
    while let Some(Reverse((g, _, (sr, sh)))) = heap.pop() {
        if best.get(&(sr.clone(), sh.clone())).is_some_and(|&b| b < g) {
            continue;
        }
        if r.is_goal(&sr) && h.is_goal(&sh) {
            return Ok(Some(g));
        }
        for a in 0..r.actions().len() {
            if !applicable_both(r, h, &sr, &sh, a) {
                continue;
            }
            let next = (r.action(a).apply_unchecked(&sr), h.action(a).apply_unchecked(&sh));
            let g2 = g + r.action(a).cost;
            if best.get(&next).is_some_and(|&b| b <= g2) {
                continue;
            }
            if best.len() >= cap {
                return Err(Error::OracleCap(format!("more than {cap} paired states")));
            }
            best.insert(next.clone(), g2);
            seq += 1;
            heap.push(Reverse((g2, seq, next)));
        }
    }
    Ok(None)
}

/// Minimum of `C_E(E) + cost(pi)` over all EA solutions, or `None` when no
/// update set admits a plan.
pub fn min_solution_cost(problem: &EaProblem, costs: &ExplanationCosts, caps: &OracleCaps) -> Result<Option<Cost>> {
    let subs = subsets(problem, caps)?;
    let per: Vec<Result<Option<Cost>>> = subs
        .par_iter()
        .map(|e| {
            let h = problem.updated_human(e)?;
            Ok(paired_min(problem.robot(), &h, caps.max_states)?.map(|c| c + costs.total(e)))
        })
        .collect();
    let mut best: Option<Cost> = None;
    for r in per {
        if let Some(c) = r? {
            best = Some(best.map_or(c, |b: Cost| b.min(c)));
        }
    }
    Ok(best)
}

/// Every `<E, pi>` with `|pi| <= plan_len_cap` and total cost at most
/// `cost_cap` that is valid in the robot model and in `M_H + E`.
pub fn enumerate_ea_solutions(
    problem: &EaProblem,
    costs: &ExplanationCosts,
    cost_cap: Cost,
    plan_len_cap: usize,
    caps: &OracleCaps,
) -> Result<Vec<EaSolution>> {
    let subs = subsets(problem, caps)?;
    let per: Vec<Result<Vec<EaSolution>>> = subs
        .par_iter()
        .map(|e| {
            let ec = costs.total(e);
            if ec > cost_cap {
                return Ok(Vec::new());
            }
            let h = problem.updated_human(e)?;
            let r = problem.robot();
            let mut found = Vec::new();
            let mut path = Vec::new();
            let mut budget = caps.max_states;
            dfs(r, &h, r.initial_state(), h.initial_state(), cost_cap - ec, plan_len_cap, &mut path, &mut found, &mut budget)?;
            if found.len() > caps.max_solutions {
                return Err(Error::OracleCap(format!("more than {} solutions", caps.max_solutions)));
            }
            Ok(found
                .into_iter()
                .map(|p: Vec<ActionId>| EaSolution {
                    explanation: e.clone(),
                    task_cost: r.plan_cost(&p),
                    plan: p.iter().map(|&a| r.action(a).name.clone()).collect(),
                    explanation_cost: ec,
                })
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    for r in per {
        out.extend(r?);
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    r: &PlanningTask,
    h: &PlanningTask,
    sr: State,
    sh: State,
    budget_cost: Cost,
    depth: usize,
    path: &mut Vec<ActionId>,
    found: &mut Vec<Vec<ActionId>>,
    budget: &mut usize,
) -> Result<()> {
    if *budget == 0 {
        return Err(Error::OracleCap("plan enumeration node budget exhausted".into()));
    }
    *budget -= 1;
    if r.is_goal(&sr) && h.is_goal(&sh) {
        found.push(path.clone());
    }
    if depth == 0 {
        return Ok(());
    }
    for a in 0..r.actions().len() {
        let c = r.action(a).cost;
        if c > budget_cost || !applicable_both(r, h, &sr, &sh, a) {
            continue;
        }
        path.push(a);
        dfs(
            r,
            h,
            r.action(a).apply_unchecked(&sr),
            h.action(a).apply_unchecked(&sh),
            budget_cost - c,
            depth - 1,
            path,
            found,
            budget,
        )?;
        path.pop();
    }
    Ok(())
}

/// Optimal plan cost by Dijkstra.
pub fn dijkstra_cost(task: &PlanningTask, cap: usize) -> Result<Option<Cost>> {
    paired_min(task, task, cap)
}

/// Cheapest explanation making `plan` optimal in the updated human model;
/// ties go to the lexicographically smallest update list.
pub fn mce(
    problem: &EaProblem,
    plan: &[String],
    costs: &ExplanationCosts,
    caps: &OracleCaps,
) -> Result<Option<Vec<ModelUpdate>>> {
    let mut subs = subsets(problem, caps)?;
    subs.sort_by_cached_key(|e| (costs.total(e), e.iter().map(ModelUpdate::meta_name).collect::<Vec<_>>()));
    for e in subs {
        let h = problem.updated_human(&e)?;
        let Ok(ids) = h.resolve_plan(plan) else { continue };
        let rep = validate_plan(&h, &ids);
        if rep.is_valid() && dijkstra_cost(&h, caps.max_states)? == Some(rep.total_cost) {
            return Ok(Some(e));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactDelta {
    #[serde(with = "crate::cost::serde_cost")]
    pub optimal: Cost,
    /// Gap to the next plan cost; `None` when no costlier plan exists
    /// within the cost cap.
    #[serde(default)]
    pub delta: Option<Cost>,
    pub censored: bool,
}

/// Gap between the optimal plan cost and the next larger achievable plan
/// cost, by uniform-cost search over (state, cost) pairs up to `cost_cap`.
pub fn exact_delta(task: &PlanningTask, cost_cap: Cost, caps: &OracleCaps) -> Result<Option<ExactDelta>> {
    let mut seen: HashSet<(State, Cost)> = HashSet::new();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let init = task.initial_state();
    seen.insert((init.clone(), Cost::from_integer(0)));
    heap.push(Reverse((Cost::from_integer(0), seq, init)));
    let mut optimal: Option<Cost> = None;
    while let Some(Reverse((g, _, s))) = heap.pop() {
        if task.is_goal(&s) {
            match optimal {
                None => optimal = Some(g),
                Some(c) if g > c => return Ok(Some(ExactDelta { optimal: c, delta: Some(g - c), censored: false })),
                Some(_) => {}
            }
        }
        for a in 0..task.actions().len() {
            let act = task.action(a);
            if !act.is_applicable(&s) {
                continue;
            }
            let g2 = g + act.cost;
            if g2 > cost_cap {
                continue;
            }
            let next = act.apply_unchecked(&s);
            if seen.contains(&(next.clone(), g2)) {
                continue;
            }
            if seen.len() >= caps.max_states {
                return Err(Error::OracleCap(format!("more than {} state/cost labels", caps.max_states)));
            }
            seen.insert((next.clone(), g2));
            seq += 1;
            heap.push(Reverse((g2, seq, next)));
        }
    }
    Ok(optimal.map(|c| ExactDelta { optimal: c, delta: None, censored: true }))
}

/// Every reachable state.
pub fn reachable_states(task: &PlanningTask, cap: usize) -> Result<Vec<State>> {
    let mut seen: HashSet<State> = HashSet::new();
    let mut order = vec![task.initial_state()];
    seen.insert(task.initial_state());
    let mut i = 0;
    while i < order.len() {
        let s = order[i].clone();
        i += 1;
        for a in task.applicable_ids(&s) {
            let n = task.action(a).apply_unchecked(&s);
            if seen.insert(n.clone()) {
                if seen.len() > cap {
                    return Err(Error::OracleCap(format!("more than {cap} reachable states")));
                }
                order.push(n);
            }
        }
    }
    Ok(order)
}

/// True cost-to-go for every reachable state (absent when the goal is
/// unreachable from it), by backward Dijkstra on the explicit graph.
pub fn goal_distances(task: &PlanningTask, cap: usize) -> Result<HashMap<State, Cost>> {
    let states = reachable_states(task, cap)?;
    let index: HashMap<&State, usize> = states.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut preds: Vec<Vec<(usize, Cost)>> = vec![Vec::new(); states.len()];
    for (i, s) in states.iter().enumerate() {
        for a in task.applicable_ids(s) {
            let n = task.action(a).apply_unchecked(s);
            preds[index[&n]].push((i, task.action(a).cost));
        }
    }
    let mut dist: Vec<Option<Cost>> = vec![None; states.len()];
    let mut heap = BinaryHeap::new();
    for (i, s) in states.iter().enumerate() {
        if task.is_goal(s) {
            dist[i] = Some(Cost::from_integer(0));
            heap.push(Reverse((Cost::from_integer(0), i)));
        }
    }
    while let Some(Reverse((d, i))) = heap.pop() {
        if dist[i].is_some_and(|b| b < d) {
            continue;
        }
        for &(p, c) in &preds[i] {
            let nd = d + c;
            if dist[p].is_none_or(|b| nd < b) {
                dist[p] = Some(nd);
                heap.push(Reverse((nd, p)));
            }
        }
    }
    Ok(states.into_iter().zip(dist).filter_map(|(s, d)| d.map(|d| (s, d))).collect())
}

/// Robot-optimal plans (by oracle enumeration) as name lists.
pub fn optimal_plans(task: &PlanningTask, len_cap: usize, caps: &OracleCaps) -> Result<BTreeSet<Vec<String>>> {
    let Some(opt) = dijkstra_cost(task, caps.max_states)? else {
        return Ok(BTreeSet::new());
    };
    let mut found = Vec::new();
    let mut budget = caps.max_states;
    dfs(task, task, task.initial_state(), task.initial_state(), opt, len_cap, &mut Vec::new(), &mut found, &mut budget)?;
    Ok(found
        .into_iter()
        .filter(|p| task.plan_cost(p) == opt)
        .map(|p| p.iter().map(|&a| task.action(a).name.clone()).collect())
        .collect())
}
