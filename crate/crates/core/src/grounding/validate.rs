use serde::{Deserialize, Serialize};

use crate::cost::{serde_cost, Cost};
use crate::error::{Error, Result};

use super::{ActionId, PlanningTask};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub step: usize,
    pub action: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub executable: bool,
    pub goal_reached: bool,
    #[serde(with = "serde_cost")]
    pub total_cost: Cost,
    pub failure: Option<Failure>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.executable && self.goal_reached
    }
}

/// Executes `plan` from the initial state. The cost is the sum over all
/// listed actions whether or not execution succeeds.
pub fn validate_plan(task: &PlanningTask, plan: &[ActionId]) -> ValidityReport {
    let total_cost = task.plan_cost(plan);
    let mut s = task.initial_state();
    for (step, &a) in plan.iter().enumerate() {
        let act = task.action(a);
        if let Some(reason) = act.violation(task, &s) {
            return ValidityReport {
                executable: false,
                goal_reached: false,
                total_cost,
                failure: Some(Failure { step, action: act.name.clone(), reason }),
            };
        }
        s = act.apply_unchecked(&s);
    }
    let missing: Vec<&str> = task.goal().iter().filter(|&&g| !s.contains(g)).map(|&g| task.fluent_name(g)).collect();
    let goal_reached = missing.is_empty();
    ValidityReport {
        executable: true,
        goal_reached,
        total_cost,
        failure: (!goal_reached).then(|| Failure {
            step: plan.len(),
            action: String::new(),
            reason: format!("goal not reached: missing {}", missing.join(", ")),
        }),
    }
}

/// Reads a plan file of `(name arg ...)` forms, normally one per line;
/// `;` starts a comment. Returns canonical ground action names
/// (`name_arg_...`).
pub fn parse_plan(text: &str) -> Result<Vec<String>> {
    use crate::pddl::sexpr::read;
    let root = read(&format!("(\n{text}\n)"))?;
    let items = root.as_list().unwrap_or_default();
    items
        .iter()
        .map(|step| {
            let bad = || Error::Config(format!("plan line {}: expected `(action args...)`", step.pos().line.saturating_sub(1)));
            let parts = step.as_list().filter(|p| !p.is_empty()).ok_or_else(bad)?;
            let names = parts.iter().map(|p| p.as_symbol().map(str::to_string).ok_or_else(bad)).collect::<Result<Vec<_>>>()?;
            Ok(crate::pddl::ground_name(&names[0], &names[1..]))
        })
        .collect()
}

pub fn format_plan(task: &PlanningTask, plan: &[ActionId]) -> String {
    let mut s = String::new();
    for &a in plan {
        let act = task.action(a);
        s.push('(');
        s.push_str(&act.schema);
        for arg in &act.args {
            s.push(' ');
            s.push_str(arg);
        }
        s.push_str(")\n");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lisp_plan_lines() {
        let p = parse_plan("; plan\n(move p1 p2)\n\n(OpenDoor p8 d1) ; c\n(noop)\n").unwrap();
        assert_eq!(p, vec!["move_p1_p2", "opendoor_p8_d1", "noop"]);
        assert!(parse_plan("move p1 p2").is_err());
    }
}
