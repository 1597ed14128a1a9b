use serde::{Deserialize, Serialize};

use crate::cost::Cost;
use crate::error::{Error, Result};
use crate::grounding::{validate_plan, ActionId, ActionRole, Failure, PlanningTask, ValidityReport};
use crate::planner::{optimal_cost, Limits};

use super::{AugmentedTask, EaProblem, ModelUpdate};

/// An explanation and the task plan it accompanies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EaSolution {
    /// Updates in canonical order.
    pub explanation: Vec<ModelUpdate>,
    pub plan: Vec<String>,
    /// What the explanatory actions in the augmented plan cost; updates
    /// conveyed by side effects are free.
    #[serde(with = "crate::cost::serde_cost")]
    pub explanation_cost: Cost,
    #[serde(with = "crate::cost::serde_cost")]
    pub task_cost: Cost,
}

impl EaSolution {
    pub fn total_cost(&self) -> Cost {
        self.explanation_cost + self.task_cost
    }
}

/// Reads `<E, pi>` off a valid augmented plan: E holds every plus update
/// whose meta fluent ends true and every minus update whose meta fluent
/// ends false; pi is the task-level subsequence.
pub fn extract_solution(aug: &AugmentedTask, plan: &[ActionId]) -> Result<EaSolution> {
    let task = &aug.task;
    let rep = validate_plan(task, plan);
    if !rep.is_valid() {
        let why = rep.failure.map(|f| format!("step {} `{}`: {}", f.step, f.action, f.reason)).unwrap_or_default();
        return Err(Error::InvalidPlan(why));
    }
    let mut s = task.initial_state();
    let mut sol = EaSolution {
        explanation: Vec::new(),
        plan: Vec::new(),
        explanation_cost: Cost::from_integer(0),
        task_cost: Cost::from_integer(0),
    };
    for &a in plan {
        s = task.action(a).apply_unchecked(&s);
        let act = task.action(a);
        match act.role {
            ActionRole::TaskLevel => {
                sol.plan.push(act.name.clone());
                sol.task_cost += act.cost;
            }
            ActionRole::Explanatory => sol.explanation_cost += act.cost,
            ActionRole::InitSentinel | ActionRole::GoalSentinel => {}
        }
    }
    sol.explanation = aug.meta_fluents().filter(|(f, u)| s.contains(*f) == u.is_plus()).map(|(_, u)| u.clone()).collect();
    sol.explanation.sort();
    Ok(sol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionCheck {
    /// The plan in the robot model.
    pub robot: ValidityReport,
    /// The plan in the updated human model.
    pub human: ValidityReport,
    /// Set when optimality was requested.
    pub optimal_in_human: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_cost")]
    pub human_optimum: Option<Cost>,
    pub valid: bool,
}

mod opt_cost {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::cost::{format_cost, parse_cost, Cost};

    pub fn serialize<S: Serializer>(c: &Option<Cost>, s: S) -> Result<S::Ok, S::Error> {
        match c {
            Some(c) => s.serialize_str(&format_cost(c)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Cost>, D::Error> {
        let v: Option<String> = Option::deserialize(d)?;
        v.map(|t| parse_cost(&t).ok_or_else(|| serde::de::Error::custom(format!("bad cost `{t}`")))).transpose()
    }
}

fn validate_named(task: &PlanningTask, plan: &[String]) -> ValidityReport {
    let mut ids = Vec::with_capacity(plan.len());
    for (step, name) in plan.iter().enumerate() {
        match task.action_id(name) {
            Some(id) => ids.push(id),
            None => {
                let mut rep = validate_plan(task, &ids);
                rep.executable = false;
                rep.goal_reached = false;
                rep.failure = Some(Failure { step, action: name.clone(), reason: "unknown action".into() });
                return rep;
            }
        }
    }
    validate_plan(task, &ids)
}

/// Checks a solution against both models. With `optimality`, also requires
/// the plan to be optimal in the updated human model; an inner search that
/// hits its limit counts as a failed check.
pub fn verify_solution(problem: &EaProblem, sol: &EaSolution, optimality: Option<Limits>) -> Result<SolutionCheck> {
    let updated = problem.updated_human(&sol.explanation)?;
    let robot = validate_named(problem.robot(), &sol.plan);
    let human = validate_named(&updated, &sol.plan);
    let mut check =
        SolutionCheck { valid: robot.is_valid() && human.is_valid(), robot, human, optimal_in_human: None, human_optimum: None };
    if let Some(limits) = optimality {
        let opt = match optimal_cost(&updated, limits) {
            Ok(c) => c,
            Err(status) => {
                log::warn!("optimality check hit its limit ({}); treating as not optimal", status.as_str());
                None
            }
        };
        check.human_optimum = opt;
        let ok = check.human.is_valid() && opt == Some(check.human.total_cost);
        check.optimal_in_human = Some(ok);
        check.valid &= ok;
    }
    Ok(check)
}
