use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::grounding::{FluentId, PlanningTask};

use super::{conditional_signature, EaProblem, ModelDiff, ModelUpdate, Part};

fn set(v: &[FluentId]) -> BTreeSet<FluentId> {
    v.iter().copied().collect()
}

/// Every discrepancy between two aligned models as typed updates to the
/// human model. Both tasks must share fluent ids and action names;
/// conditional effects must agree exactly.
pub fn diff_models(robot: &PlanningTask, human: &PlanningTask) -> Result<ModelDiff> {
    if robot.num_fluents() != human.num_fluents() || robot.fluents().iter().zip(human.fluents()).any(|(a, b)| a.name != b.name) {
        return Err(Error::Vocabulary("fluent lists differ; align the models first".into()));
    }
    let name = |f: FluentId| robot.fluent_name(f).to_string();
    let mut diff = ModelDiff::default();
    let mut sides = |part: Part, action: Option<&str>, r: BTreeSet<FluentId>, h: BTreeSet<FluentId>| {
        for (plus, only) in [(true, r.difference(&h)), (false, h.difference(&r))] {
            for &f in only {
                diff.insert(match action {
                    Some(a) => ModelUpdate::action(part, plus, a, name(f)),
                    None if part == Part::Init => ModelUpdate::init(plus, name(f)),
                    None => ModelUpdate::goal(plus, name(f)),
                });
            }
        }
    };
    sides(Part::Init, None, set(robot.init()), set(human.init()));
    sides(Part::Goal, None, set(robot.goal()), set(human.goal()));
    for ra in robot.actions() {
        let ha = human
            .action_id(&ra.name)
            .map(|id| human.action(id))
            .ok_or_else(|| Error::Vocabulary(format!("action `{}` missing from the human model", ra.name)))?;
        if conditional_signature(ra) != conditional_signature(ha) {
            return Err(Error::UnsupportedDifference(format!("conditional effects of `{}` differ between models", ra.name)));
        }
        sides(Part::Prec, Some(&ra.name), set(&ra.pre), set(&ha.pre));
        sides(Part::Adds, Some(&ra.name), set(&ra.unconditional().add), set(&ha.unconditional().add));
        sides(Part::Dels, Some(&ra.name), set(&ra.unconditional().del), set(&ha.unconditional().del));
    }
    if human.actions().len() != robot.actions().len() {
        return Err(Error::Vocabulary("action sets differ; align the models first".into()));
    }
    Ok(diff)
}

/// The human model with `updates` applied. Every update must belong to the
/// problem's diff; applying one twice has no further effect.
pub fn apply_updates(problem: &EaProblem, updates: &[ModelUpdate]) -> Result<PlanningTask> {
    let human = problem.human();
    let mut actions = human.actions().to_vec();
    let mut init = human.init().to_vec();
    let mut goal = human.goal().to_vec();
    for u in updates {
        if !problem.diff().contains(u) {
            return Err(Error::InconsistentUpdate(u.to_string()));
        }
        let f = human.fluent_id(&u.fluent).ok_or_else(|| Error::InconsistentUpdate(u.to_string()))?;
        let edit = |v: &mut Vec<FluentId>| {
            if u.is_plus() {
                if !v.contains(&f) {
                    v.push(f);
                }
            } else {
                v.retain(|&x| x != f);
            }
        };
        match (u.kind.part(), &u.action) {
            (Part::Init, _) => edit(&mut init),
            (Part::Goal, _) => edit(&mut goal),
            (part, Some(a)) => {
                let id = human.action_id(a).ok_or_else(|| Error::InconsistentUpdate(u.to_string()))?;
                let act = &mut actions[id];
                match part {
                    Part::Prec => edit(&mut act.pre),
                    Part::Adds => edit(&mut act.unconditional_mut().add),
                    _ => edit(&mut act.unconditional_mut().del),
                }
            }
            (_, None) => return Err(Error::InconsistentUpdate(u.to_string())),
        }
    }
    PlanningTask::new(human.name.clone(), human.fluents().to_vec(), actions, init, goal)
}
