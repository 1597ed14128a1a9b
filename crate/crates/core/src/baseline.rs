//! Optimistic, approximate model-space search: best-first over subsets of
//! the diff by explanation cost, planning once per subset and stopping at
//! the first subset whose optimal plan matches the robot's optimal cost and
//! runs in the robot model.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::compile::{EaProblem, EaSolution, ExplanationCosts, ModelUpdate};
use crate::cost::Cost;
use crate::error::Result;
use crate::grounding::validate_plan;
use crate::planner::{astar, HeuristicKind, Limits, SearchStatus};
use crate::solve::{SolveConfig, SolveOutcome, SolveStatus, SolveStrategy};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MssNode {
    pub updates: Vec<ModelUpdate>,
    pub candidate_plan: Option<Vec<String>>,
    #[serde(with = "crate::cost::serde_cost")]
    pub cost: Cost,
}

/// Frontier entry: explanation cost, then canonical update names, then the
/// index of the last diff element (children only extend past it).
type Entry = Reverse<(Cost, Vec<String>, Vec<usize>)>;

pub fn model_space_search(problem: &EaProblem, costs: &ExplanationCosts, limits: Limits) -> Result<(SolveOutcome, Vec<MssNode>)> {
    run(problem, costs, limits, HeuristicKind::Hmax)
}

fn run(problem: &EaProblem, costs: &ExplanationCosts, limits: Limits, h: HeuristicKind) -> Result<(SolveOutcome, Vec<MssNode>)> {
    let start = Instant::now();
    let deadline = limits.time.map(|t| start + t);
    let remaining = || Limits { time: deadline.map(|d| d.saturating_duration_since(Instant::now())), nodes: limits.nodes };
    let mut out = SolveOutcome::empty("baseline", SolveStatus::ApproximationFailure);
    let mut trace = Vec::new();
    let done = |mut out: SolveOutcome, trace| {
        out.wall_time = start.elapsed().as_secs_f64();
        Ok((out, trace))
    };

    let robot = problem.robot();
    let r = astar(robot, h, remaining());
    out.expanded += r.expanded;
    out.generated += r.generated;
    let target = match r.status {
        SearchStatus::Solved => r.cost,
        s => {
            out.status = s.into();
            return done(out, trace);
        }
    };
    let diff = problem.diff().updates();
    let mut open: BinaryHeap<Entry> = BinaryHeap::new();
    open.push(Reverse((Cost::from_integer(0), Vec::new(), Vec::new())));
    while let Some(Reverse((cost, _, idx))) = open.pop() {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            out.status = SolveStatus::Timeout;
            return done(out, trace);
        }
        let updates: Vec<ModelUpdate> = idx.iter().map(|&i| diff[i].clone()).collect();
        let human = problem.updated_human(&updates)?;
        let res = astar(&human, h, remaining());
        out.expanded += res.expanded;
        out.generated += res.generated;
        match res.status {
            SearchStatus::Solved | SearchStatus::ProvenUnsolvable => {}
            s => {
                out.status = s.into();
                return done(out, trace);
            }
        }
        let plan = res.plan.map(|p| p.iter().map(|&a| human.action(a).name.clone()).collect::<Vec<String>>());
        trace.push(MssNode { updates: updates.clone(), candidate_plan: plan.clone(), cost });
        if let Some(plan) = plan {
            if res.cost == target {
                if let Ok(ids) = robot.resolve_plan(&plan) {
                    let rep = validate_plan(robot, &ids);
                    if rep.is_valid() {
                        out.status = SolveStatus::Solved;
                        out.objective = cost + rep.total_cost;
                        out.solution =
                            Some(EaSolution { explanation: updates, plan, explanation_cost: cost, task_cost: rep.total_cost });
                        return done(out, trace);
                    }
                }
            }
        }
        let next = idx.last().map_or(0, |&i| i + 1);
        for j in next..diff.len() {
            let mut child = idx.clone();
            child.push(j);
            let mut names: Vec<String> = child.iter().map(|&i| diff[i].meta_name()).collect();
            names.sort();
            open.push(Reverse((cost + costs.cost_of(&diff[j]), names, child)));
        }
    }
    done(out, trace)
}

pub struct ModelSpaceSearch;

impl SolveStrategy for ModelSpaceSearch {
    fn name(&self) -> &'static str {
        "baseline"
    }
    fn solve(&self, problem: &EaProblem, cfg: &SolveConfig) -> Result<SolveOutcome> {
        run(problem, &cfg.compile.costs, cfg.limits, cfg.heuristic).map(|(o, _)| o)
    }
}
