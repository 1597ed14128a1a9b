//! Grounded STRIPS tasks with conditional effects and implication
//! preconditions, their transition semantics and plan validation.

mod ground;
mod validate;

use std::collections::HashMap;
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::cost::Cost;
use crate::error::{Error, Result};

pub use ground::{ground, ground_pair, ground_with_stats, load_task, GroundOptions, GroundStats};
pub use validate::{format_plan, parse_plan, validate_plan, Failure, ValidityReport};

pub type FluentId = usize;
pub type ActionId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FluentRole {
    Task,
    Belief,
    MetaPlus,
    MetaMinus,
    SentinelInit,
    SentinelGoal,
    /// Bookkeeping for explanation ordering and side-effect guards.
    Auxiliary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fluent {
    pub id: FluentId,
    pub name: String,
    pub role: FluentRole,
}

/// `guard -> consequent`: if `guard` holds then `consequent` must hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Implication {
    pub guard: FluentId,
    pub consequent: FluentId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EffectGroup {
    pub when: Vec<FluentId>,
    pub when_not: Vec<FluentId>,
    pub add: Vec<FluentId>,
    pub del: Vec<FluentId>,
}

impl EffectGroup {
    pub fn is_unconditional(&self) -> bool {
        self.when.is_empty() && self.when_not.is_empty()
    }

    pub fn fires(&self, s: &State) -> bool {
        self.when.iter().all(|&f| s.contains(f)) && !self.when_not.iter().any(|&f| s.contains(f))
    }

    pub(crate) fn normalize(&mut self) {
        for v in [&mut self.when, &mut self.when_not, &mut self.add, &mut self.del] {
            v.sort_unstable();
            v.dedup();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionRole {
    TaskLevel,
    Explanatory,
    InitSentinel,
    GoalSentinel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundAction {
    pub name: String,
    /// Lifted schema and arguments, for lisp-style plan output.
    pub schema: String,
    pub args: Vec<String>,
    pub pre: Vec<FluentId>,
    pub neg_pre: Vec<FluentId>,
    pub implications: Vec<Implication>,
    /// `effects[0]` is always the unconditional group (possibly empty).
    pub effects: Vec<EffectGroup>,
    #[serde(with = "crate::cost::serde_cost")]
    pub cost: Cost,
    pub role: ActionRole,
}

impl GroundAction {
    pub fn new(name: impl Into<String>, cost: Cost, role: ActionRole) -> Self {
        let name = name.into();
        GroundAction {
            schema: name.clone(),
            name,
            args: Vec::new(),
            pre: Vec::new(),
            neg_pre: Vec::new(),
            implications: Vec::new(),
            effects: vec![EffectGroup::default()],
            cost,
            role,
        }
    }

    pub fn unconditional(&self) -> &EffectGroup {
        &self.effects[0]
    }

    pub fn unconditional_mut(&mut self) -> &mut EffectGroup {
        &mut self.effects[0]
    }

    pub fn conditional(&self) -> &[EffectGroup] {
        &self.effects[1..]
    }

    pub(crate) fn normalize(&mut self) {
        self.pre.sort_unstable();
        self.pre.dedup();
        self.neg_pre.sort_unstable();
        self.neg_pre.dedup();
        self.implications.sort_unstable();
        self.implications.dedup();
        for e in &mut self.effects {
            e.normalize();
        }
    }

    /// First violated precondition, rendered with fluent names.
    pub fn violation(&self, task: &PlanningTask, s: &State) -> Option<String> {
        if let Some(&f) = self.pre.iter().find(|&&f| !s.contains(f)) {
            return Some(format!("precondition ({}) is false", task.fluent_name(f)));
        }
        if let Some(&f) = self.neg_pre.iter().find(|&&f| s.contains(f)) {
            return Some(format!("precondition (not ({})) is false", task.fluent_name(f)));
        }
        self.implications.iter().find(|i| s.contains(i.guard) && !s.contains(i.consequent)).map(|i| {
            format!("precondition (imply ({}) ({})) is false", task.fluent_name(i.guard), task.fluent_name(i.consequent))
        })
    }

    pub fn is_applicable(&self, s: &State) -> bool {
        self.pre.iter().all(|&f| s.contains(f))
            && !self.neg_pre.iter().any(|&f| s.contains(f))
            && self.implications.iter().all(|i| !s.contains(i.guard) || s.contains(i.consequent))
    }

    /// Successor state. Effect conditions are evaluated in `s`; all deletes
    /// are applied before all adds, so a fluent both added and deleted ends
    /// up true.
    pub fn apply_unchecked(&self, s: &State) -> State {
        let mut next = s.clone();
        let firing: Vec<&EffectGroup> = self.effects.iter().filter(|e| e.fires(s)).collect();
        for e in &firing {
            for &f in &e.del {
                next.0.set(f, false);
            }
        }
        for e in &firing {
            for &f in &e.add {
                next.0.insert(f);
            }
        }
        next
    }

    /// Every fluent the action may add or delete.
    pub fn touched(&self) -> impl Iterator<Item = FluentId> + '_ {
        self.effects.iter().flat_map(|e| e.add.iter().chain(e.del.iter()).copied())
    }
}

/// Set of true fluents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(pub FixedBitSet);

impl State {
    pub fn empty(width: usize) -> Self {
        State(FixedBitSet::with_capacity(width))
    }

    pub fn from_fluents(width: usize, fluents: impl IntoIterator<Item = FluentId>) -> Self {
        let mut s = Self::empty(width);
        for f in fluents {
            s.0.insert(f);
        }
        s
    }

    pub fn contains(&self, f: FluentId) -> bool {
        self.0.contains(f)
    }

    pub fn insert(&mut self, f: FluentId) {
        self.0.insert(f)
    }

    pub fn remove(&mut self, f: FluentId) {
        self.0.set(f, false)
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn contains_all(&self, fs: &[FluentId]) -> bool {
        fs.iter().all(|&f| self.contains(f))
    }

    pub fn iter(&self) -> impl Iterator<Item = FluentId> + '_ {
        self.0.ones()
    }
}

/// Grounded task `<F, A, I, G, C>`; costs live on the actions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanningTask {
    pub name: String,
    fluents: Vec<Fluent>,
    actions: Vec<GroundAction>,
    init: Vec<FluentId>,
    goal: Vec<FluentId>,
    #[serde(skip)]
    fluent_index: HashMap<String, FluentId>,
    #[serde(skip)]
    action_index: HashMap<String, ActionId>,
}

impl PartialEq for PlanningTask {
    fn eq(&self, other: &Self) -> bool {
        self.fluents == other.fluents && self.actions == other.actions && self.init == other.init && self.goal == other.goal
    }
}

impl PlanningTask {
    /// Builds a task, checking that ids are dense, names unique and every
    /// reference in range.
    pub fn new(
        name: impl Into<String>,
        fluents: Vec<Fluent>,
        mut actions: Vec<GroundAction>,
        mut init: Vec<FluentId>,
        mut goal: Vec<FluentId>,
    ) -> Result<Self> {
        let n = fluents.len();
        let mut fluent_index = HashMap::with_capacity(n);
        for (i, f) in fluents.iter().enumerate() {
            if f.id != i {
                return Err(Error::InvalidTask(format!("fluent `{}` has id {} at position {i}", f.name, f.id)));
            }
            if fluent_index.insert(f.name.clone(), i).is_some() {
                return Err(Error::InvalidTask(format!("duplicate fluent `{}`", f.name)));
            }
        }
        let mut action_index = HashMap::with_capacity(actions.len());
        for (i, a) in actions.iter_mut().enumerate() {
            a.normalize();
            if a.effects.first().is_none_or(|e| !e.is_unconditional()) {
                a.effects.insert(0, EffectGroup::default());
            }
            if action_index.insert(a.name.clone(), i).is_some() {
                return Err(Error::InvalidTask(format!("duplicate action `{}`", a.name)));
            }
            if a.cost < Cost::from_integer(0) {
                return Err(Error::InvalidTask(format!("negative cost on `{}`", a.name)));
            }
            let refs = a
                .pre
                .iter()
                .chain(&a.neg_pre)
                .chain(a.implications.iter().flat_map(|i| [&i.guard, &i.consequent]))
                .chain(a.effects.iter().flat_map(|e| e.when.iter().chain(&e.when_not).chain(&e.add).chain(&e.del)));
            for &f in refs {
                if f >= n {
                    return Err(Error::InvalidTask(format!("action `{}` references fluent {f} out of range", a.name)));
                }
            }
        }
        for v in [&mut init, &mut goal] {
            v.sort_unstable();
            v.dedup();
            if let Some(&f) = v.iter().find(|&&f| f >= n) {
                return Err(Error::InvalidTask(format!("fluent {f} out of range")));
            }
        }
        Ok(PlanningTask { name: name.into(), fluents, actions, init, goal, fluent_index, action_index })
    }

    /// Rebuilds the name indexes after deserialization.
    pub fn reindex(mut self) -> Result<Self> {
        let (name, fluents, actions, init, goal) =
            (std::mem::take(&mut self.name), self.fluents, self.actions, self.init, self.goal);
        Self::new(name, fluents, actions, init, goal)
    }

    pub fn fluents(&self) -> &[Fluent] {
        &self.fluents
    }

    pub fn actions(&self) -> &[GroundAction] {
        &self.actions
    }

    pub fn action(&self, id: ActionId) -> &GroundAction {
        &self.actions[id]
    }

    pub fn init(&self) -> &[FluentId] {
        &self.init
    }

    pub fn goal(&self) -> &[FluentId] {
        &self.goal
    }

    pub fn num_fluents(&self) -> usize {
        self.fluents.len()
    }

    pub fn fluent_name(&self, f: FluentId) -> &str {
        &self.fluents[f].name
    }

    pub fn fluent_id(&self, name: &str) -> Option<FluentId> {
        self.fluent_index.get(name).copied()
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.action_index.get(name).copied()
    }

    pub fn initial_state(&self) -> State {
        State::from_fluents(self.num_fluents(), self.init.iter().copied())
    }

    pub fn is_goal(&self, s: &State) -> bool {
        s.contains_all(&self.goal)
    }

    pub fn applicable(&self, s: &State, a: ActionId) -> bool {
        self.actions[a].is_applicable(s)
    }

    pub fn applicable_ids<'a>(&'a self, s: &'a State) -> impl Iterator<Item = ActionId> + 'a {
        (0..self.actions.len()).filter(move |&a| self.actions[a].is_applicable(s))
    }

    /// Checked transition.
    pub fn apply(&self, s: &State, a: ActionId) -> Result<State> {
        let act = &self.actions[a];
        match act.violation(self, s) {
            Some(reason) => Err(Error::Inapplicable { action: act.name.clone(), reason }),
            None => Ok(act.apply_unchecked(s)),
        }
    }

    pub fn state_names(&self, s: &State) -> Vec<&str> {
        s.iter().map(|f| self.fluent_name(f)).collect()
    }

    /// Action ids sorted by name; the planners' successor order.
    pub fn actions_by_name(&self) -> Vec<ActionId> {
        let mut ids: Vec<ActionId> = (0..self.actions.len()).collect();
        ids.sort_by(|&a, &b| self.actions[a].name.cmp(&self.actions[b].name));
        ids
    }

    pub fn resolve_plan(&self, names: &[String]) -> Result<Vec<ActionId>> {
        names.iter().map(|n| self.action_id(n).ok_or_else(|| Error::UnknownAction(n.clone()))).collect()
    }

    pub fn plan_cost(&self, plan: &[ActionId]) -> Cost {
        plan.iter().map(|&a| self.actions[a].cost).sum()
    }
}

impl fmt::Display for PlanningTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} fluents, {} actions", self.name, self.fluents.len(), self.actions.len())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::cost::cost;

    pub fn fluents(names: &[&str]) -> Vec<Fluent> {
        names.iter().enumerate().map(|(id, n)| Fluent { id, name: n.to_string(), role: FluentRole::Task }).collect()
    }

    fn move_task() -> PlanningTask {
        let mut mv = GroundAction::new("move_p1_p2", cost(10), ActionRole::TaskLevel);
        mv.pre = vec![0, 2];
        mv.unconditional_mut().add = vec![1];
        mv.unconditional_mut().del = vec![0];
        let mut open = GroundAction::new("open_door_d1_p3", cost(1), ActionRole::TaskLevel);
        open.effects.push(EffectGroup { when: vec![4], add: vec![3], ..Default::default() });
        let noop = GroundAction::new("noop", cost(0), ActionRole::TaskLevel);
        PlanningTask::new(
            "t",
            fluents(&["at_p1", "at_p2", "clear_p1_p2", "open_d1", "unlocked_d1"]),
            vec![mv, open, noop],
            vec![0, 2],
            vec![1],
        )
        .unwrap()
    }

    #[test]
    fn move_updates_position() {
        let t = move_task();
        let s = t.apply(&t.initial_state(), 0).unwrap();
        assert_eq!(t.state_names(&s), vec!["at_p2", "clear_p1_p2"]);
        assert!(t.is_goal(&s));
    }

    #[test]
    fn empty_effects_are_identity() {
        let t = move_task();
        let s = t.initial_state();
        assert_eq!(t.apply(&s, 2).unwrap(), s);
    }

    #[test]
    fn conditional_effect_needs_condition() {
        let t = move_task();
        let s = t.apply(&t.initial_state(), 1).unwrap();
        assert!(!s.contains(3));
        let mut unlocked = t.initial_state();
        unlocked.insert(4);
        assert!(t.apply(&unlocked, 1).unwrap().contains(3));
    }

    #[test]
    fn inapplicable_reports_first_violation() {
        let t = move_task();
        let s = State::from_fluents(5, [0]);
        match t.apply(&s, 0) {
            Err(Error::Inapplicable { reason, .. }) => assert!(reason.contains("clear_p1_p2"), "{reason}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn add_wins_on_collision() {
        let mut a = GroundAction::new("flip", cost(1), ActionRole::TaskLevel);
        a.unconditional_mut().add = vec![0];
        a.effects.push(EffectGroup { when: vec![0], del: vec![0], ..Default::default() });
        let t = PlanningTask::new("c", fluents(&["p"]), vec![a], vec![0], vec![]).unwrap();
        assert!(t.apply(&t.initial_state(), 0).unwrap().contains(0));
    }

    #[test]
    fn implication_guards() {
        let mut a = GroundAction::new("a", cost(1), ActionRole::TaskLevel);
        a.implications = vec![Implication { guard: 0, consequent: 1 }];
        let t = PlanningTask::new("i", fluents(&["mu", "b"]), vec![a], vec![], vec![]).unwrap();
        assert!(t.applicable(&State::from_fluents(2, []), 0));
        assert!(!t.applicable(&State::from_fluents(2, [0]), 0));
        assert!(t.applicable(&State::from_fluents(2, [0, 1]), 0));
    }

    #[test]
    fn rejects_duplicate_and_out_of_range() {
        assert!(PlanningTask::new("x", fluents(&["p", "p"]), vec![], vec![], vec![]).is_err());
        assert!(PlanningTask::new("x", fluents(&["p"]), vec![], vec![3], vec![]).is_err());
    }
}
