use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cost::Cost;
use crate::error::{Error, Result};
use crate::grounding::{ActionRole, EffectGroup, Fluent, FluentId, FluentRole, GroundAction, Implication, PlanningTask};

use super::{EaProblem, ModelUpdate, Part};

pub const INIT_SENTINEL: &str = "ea_init";
pub const GOAL_SENTINEL: &str = "ea_goal";
pub const START_ACTION: &str = "ea_start";
pub const FINISH_ACTION: &str = "ea_finish";
/// Set by the first task-level action under plan-prefix ordering.
pub const STARTED_FLUENT: &str = "ea_started";

/// Where explanatory actions may appear in a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ordering {
    /// Anywhere. Cheapest to search, but an explanation placed after the
    /// action it concerns can yield an unsound extraction.
    Free,
    /// Before the first use of the action the update concerns; init
    /// updates before any task action.
    BeforeFirstUse,
    /// Before any task action.
    #[default]
    PlanPrefix,
}

impl FromStr for Ordering {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(Ordering::Free),
            "before-first-use" => Ok(Ordering::BeforeFirstUse),
            "prefix" | "plan-prefix" => Ok(Ordering::PlanPrefix),
            _ => Err(Error::Config(format!("unknown ordering `{s}` (free, before-first-use, prefix)"))),
        }
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ordering::Free => "free",
            Ordering::BeforeFirstUse => "before-first-use",
            Ordering::PlanPrefix => "prefix",
        })
    }
}

/// Whether the plan is only proposed, or executed in front of the observer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    #[default]
    Propose,
    Execute,
}

impl FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "propose" => Ok(Stage::Propose),
            "execute" => Ok(Stage::Execute),
            _ => Err(Error::Config(format!("unknown stage `{s}` (propose, execute)"))),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Propose => "propose",
            Stage::Execute => "execute",
        })
    }
}

/// Cost of communicating each update: a uniform default plus overrides
/// keyed by meta-fluent name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplanationCosts {
    pub default: Cost,
    pub per_update: BTreeMap<String, Cost>,
}

impl Default for ExplanationCosts {
    fn default() -> Self {
        Self::uniform(Cost::from_integer(1))
    }
}

impl ExplanationCosts {
    pub fn uniform(c: Cost) -> Self {
        ExplanationCosts { default: c, per_update: BTreeMap::new() }
    }

    pub fn set(&mut self, u: &ModelUpdate, c: Cost) {
        self.per_update.insert(u.meta_name(), c);
    }

    pub fn cost_of(&self, u: &ModelUpdate) -> Cost {
        self.per_update.get(&u.meta_name()).copied().unwrap_or(self.default)
    }

    pub fn total<'a>(&self, us: impl IntoIterator<Item = &'a ModelUpdate>) -> Cost {
        us.into_iter().map(|u| self.cost_of(u)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompileConfig {
    pub costs: ExplanationCosts,
    pub ordering: Ordering,
    pub stage: Stage,
    /// Conditional-effect inference; only used in the execute stage.
    pub inference: bool,
    /// Restrict inference to conditions no earlier action has touched.
    pub restrict_unused: bool,
}

impl Default for CompileConfig {
    fn default() -> Self {
        CompileConfig {
            costs: ExplanationCosts::default(),
            ordering: Ordering::default(),
            stage: Stage::default(),
            inference: true,
            restrict_unused: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeReport {
    pub fluents: usize,
    pub actions: usize,
    pub base_fluents: usize,
    pub base_actions: usize,
    pub diff: usize,
    /// Bookkeeping fluents for ordering and inference.
    pub aux_fluents: usize,
}

impl SizeReport {
    /// `|F'| <= 2|F| + |diff| + 2` (not counting bookkeeping fluents) and
    /// `|A'| <= |A| + |diff| + 2`.
    pub fn within_bound(&self) -> bool {
        self.fluents - self.aux_fluents <= 2 * self.base_fluents + self.diff + 2
            && self.actions <= self.base_actions + self.diff + 2
    }
}

/// The compiled task plus what is needed to read its plans back.
#[derive(Debug, Clone)]
pub struct AugmentedTask {
    pub task: PlanningTask,
    pub config: CompileConfig,
    problem: EaProblem,
    meta: BTreeMap<FluentId, ModelUpdate>,
    meta_ids: HashMap<String, FluentId>,
    aux_fluents: usize,
}

impl AugmentedTask {
    pub fn problem(&self) -> &EaProblem {
        &self.problem
    }

    /// Back pointer from a meta fluent to its update.
    pub fn update_of(&self, f: FluentId) -> Option<&ModelUpdate> {
        self.meta.get(&f)
    }

    pub fn meta_fluent(&self, u: &ModelUpdate) -> Option<FluentId> {
        self.meta_ids.get(&u.meta_name()).copied()
    }

    pub fn meta_fluents(&self) -> impl Iterator<Item = (FluentId, &ModelUpdate)> {
        self.meta.iter().map(|(&f, u)| (f, u))
    }

    /// Belief fluent of base fluent `f`.
    pub fn belief(&self, f: FluentId) -> FluentId {
        self.problem.robot().num_fluents() + f
    }

    pub fn size(&self) -> SizeReport {
        SizeReport {
            fluents: self.task.num_fluents(),
            actions: self.task.actions().len(),
            base_fluents: self.problem.robot().num_fluents(),
            base_actions: self.problem.robot().actions().len(),
            diff: self.problem.diff().len(),
            aux_fluents: self.aux_fluents,
        }
    }
}

fn set(v: &[FluentId]) -> BTreeSet<FluentId> {
    v.iter().copied().collect()
}

/// Builds the augmented task for `problem` under `cfg`.
pub fn compile(problem: &EaProblem, cfg: &CompileConfig) -> Result<AugmentedTask> {
    let robot = problem.robot();
    let human = problem.human();
    let diff = problem.diff();
    let n = robot.num_fluents();
    let updates = diff.updates();
    let execute = cfg.stage == Stage::Execute;
    let infer = execute && cfg.inference;

    let mut fluents: Vec<Fluent> = Vec::with_capacity(2 * n + updates.len() + 2);
    let push = |fluents: &mut Vec<Fluent>, name: String, role: FluentRole| {
        let id = fluents.len();
        fluents.push(Fluent { id, name, role });
        id
    };
    for f in robot.fluents() {
        push(&mut fluents, f.name.clone(), FluentRole::Task);
    }
    for f in robot.fluents() {
        push(&mut fluents, format!("bel_{}", f.name), FluentRole::Belief);
    }
    let bel = |f: FluentId| n + f;
    let mut meta = BTreeMap::new();
    let mut meta_ids = HashMap::new();
    for u in &updates {
        let role = if u.is_plus() { FluentRole::MetaPlus } else { FluentRole::MetaMinus };
        let id = push(&mut fluents, u.meta_name(), role);
        meta.insert(id, u.clone());
        meta_ids.insert(u.meta_name(), id);
    }
    let init_s = push(&mut fluents, INIT_SENTINEL.into(), FluentRole::SentinelInit);
    let goal_s = push(&mut fluents, GOAL_SENTINEL.into(), FluentRole::SentinelGoal);
    let core = fluents.len();

    let has_init_updates = updates.iter().any(|u| u.kind.part() == Part::Init);
    let started = match cfg.ordering {
        Ordering::PlanPrefix if !updates.is_empty() => Some(push(&mut fluents, STARTED_FLUENT.into(), FluentRole::Auxiliary)),
        Ordering::BeforeFirstUse if has_init_updates => Some(push(&mut fluents, STARTED_FLUENT.into(), FluentRole::Auxiliary)),
        _ => None,
    };
    let mut used: BTreeMap<String, FluentId> = BTreeMap::new();
    if cfg.ordering == Ordering::BeforeFirstUse {
        let actions: BTreeSet<&String> = updates.iter().filter_map(|u| u.action.as_ref()).collect();
        for a in actions {
            used.insert(a.clone(), push(&mut fluents, format!("ea_used__{a}"), FluentRole::Auxiliary));
        }
    }
    let mut touched: BTreeMap<FluentId, FluentId> = BTreeMap::new();
    if infer && cfg.restrict_unused {
        let conds: BTreeSet<FluentId> =
            robot.actions().iter().flat_map(|a| a.conditional().iter().flat_map(|g| g.when.iter().copied())).collect();
        let changed: BTreeSet<FluentId> = robot.actions().iter().chain(human.actions()).flat_map(|a| a.touched()).collect();
        for c in conds.intersection(&changed) {
            let id = push(&mut fluents, format!("ea_touched__{}", robot.fluent_name(*c)), FluentRole::Auxiliary);
            touched.insert(*c, id);
        }
    }
    let aux_fluents = fluents.len() - core;
    let mu = |u: ModelUpdate| meta_ids.get(&u.meta_name()).copied();

    let mut actions = Vec::with_capacity(robot.actions().len() + updates.len() + 2);
    for ra in robot.actions() {
        let ha = human.action(human.action_id(&ra.name).expect("aligned models"));
        let name = ra.name.as_str();
        let mut a = GroundAction::new(name, ra.cost, ActionRole::TaskLevel);
        a.schema = ra.schema.clone();
        a.args = ra.args.clone();
        let (rp, hp) = (set(&ra.pre), set(&ha.pre));
        a.pre = ra.pre.clone();
        a.pre.extend(rp.intersection(&hp).map(|&f| bel(f)));
        for (plus, only) in [(true, rp.difference(&hp)), (false, hp.difference(&rp))] {
            for &f in only {
                let guard = mu(ModelUpdate::action(Part::Prec, plus, name, robot.fluent_name(f))).expect("diff update");
                a.implications.push(Implication { guard, consequent: bel(f) });
            }
        }
        let mut uncond =
            EffectGroup { add: ra.unconditional().add.clone(), del: ra.unconditional().del.clone(), ..Default::default() };
        let mut groups = Vec::new();
        for (part, r, h) in [
            (Part::Adds, set(&ra.unconditional().add), set(&ha.unconditional().add)),
            (Part::Dels, set(&ra.unconditional().del), set(&ha.unconditional().del)),
        ] {
            let belief_side = |g: &mut EffectGroup, f: FluentId| {
                if part == Part::Adds {
                    g.add.push(bel(f))
                } else {
                    g.del.push(bel(f))
                }
            };
            for &f in r.intersection(&h) {
                belief_side(&mut uncond, f);
            }
            for (plus, only) in [(true, r.difference(&h)), (false, h.difference(&r))] {
                for &f in only {
                    let m = mu(ModelUpdate::action(part, plus, name, robot.fluent_name(f))).expect("diff update");
                    if execute {
                        // the observer sees what really happens and learns the
                        // robot's effect from it
                        if plus {
                            belief_side(&mut uncond, f);
                            uncond.add.push(m);
                        } else {
                            uncond.del.push(m);
                        }
                    } else {
                        let mut g = EffectGroup { when: vec![m], ..Default::default() };
                        belief_side(&mut g, f);
                        groups.push(g);
                    }
                }
            }
        }
        for g in ra.conditional() {
            groups.push(g.clone());
            groups.push(EffectGroup {
                when: g.when.iter().map(|&c| bel(c)).collect(),
                when_not: vec![],
                add: g.add.iter().map(|&f| bel(f)).collect(),
                del: g.del.iter().map(|&f| bel(f)).collect(),
            });
            if infer {
                let mut add: Vec<FluentId> = g.add.iter().chain(&g.when).map(|&f| bel(f)).collect();
                add.extend(g.when.iter().filter_map(|&c| mu(ModelUpdate::init(true, robot.fluent_name(c)))));
                groups.push(EffectGroup {
                    when: g.when.clone(),
                    when_not: g.when.iter().filter_map(|c| touched.get(c).copied()).collect(),
                    add,
                    del: g.del.iter().map(|&f| bel(f)).collect(),
                });
            }
        }
        if let Some(s) = started {
            uncond.add.push(s);
        }
        if let Some(&u) = used.get(name) {
            uncond.add.push(u);
        }
        let mut hit: BTreeSet<FluentId> = ra.touched().collect();
        hit.extend(ha.touched());
        uncond.add.extend(hit.iter().filter_map(|f| touched.get(f).copied()));
        a.effects = std::iter::once(uncond).chain(groups).collect();
        actions.push(a);
    }

    let mut a0 = GroundAction::new(START_ACTION, Cost::from_integer(0), ActionRole::InitSentinel);
    a0.pre = vec![init_s];
    {
        let e = a0.unconditional_mut();
        e.add = robot.init().to_vec();
        e.add.extend(human.init().iter().map(|&f| bel(f)));
        e.add.extend(meta.iter().filter(|(_, u)| !u.is_plus()).map(|(&f, _)| f));
        e.del = vec![init_s];
    }
    actions.push(a0);

    let mut ainf = GroundAction::new(FINISH_ACTION, Cost::from_integer(0), ActionRole::GoalSentinel);
    let (rg, hg) = (set(robot.goal()), set(human.goal()));
    ainf.pre = robot.goal().to_vec();
    ainf.pre.extend(rg.intersection(&hg).map(|&f| bel(f)));
    for (plus, only) in [(true, rg.difference(&hg)), (false, hg.difference(&rg))] {
        for &f in only {
            let guard = mu(ModelUpdate::goal(plus, robot.fluent_name(f))).expect("diff update");
            ainf.implications.push(Implication { guard, consequent: bel(f) });
        }
    }
    ainf.unconditional_mut().add = vec![goal_s];
    actions.push(ainf);

    for u in &updates {
        let m = meta_ids[&u.meta_name()];
        let mut a = GroundAction::new(u.explain_name(), cfg.costs.cost_of(u), ActionRole::Explanatory);
        a.neg_pre.push(init_s);
        match (cfg.ordering, u.kind.part(), &u.action) {
            (Ordering::PlanPrefix, _, _) | (Ordering::BeforeFirstUse, Part::Init, _) => a.neg_pre.extend(started),
            (Ordering::BeforeFirstUse, _, Some(act)) => a.neg_pre.extend(used.get(act)),
            _ => {}
        }
        let f = robot.fluent_id(&u.fluent).expect("diff over shared vocabulary");
        let e = a.unconditional_mut();
        match (u.is_plus(), u.kind.part()) {
            (true, Part::Init) => e.add = vec![m, bel(f)],
            (false, Part::Init) => {
                e.del = vec![m, bel(f)];
            }
            (true, _) => e.add = vec![m],
            (false, _) => e.del = vec![m],
        }
        actions.push(a);
    }

    let task = PlanningTask::new(format!("{}-ea", robot.name), fluents, actions, vec![init_s], vec![goal_s])?;
    let aug = AugmentedTask { task, config: cfg.clone(), problem: problem.clone(), meta, meta_ids, aux_fluents };
    debug_assert!(aug.size().within_bound());
    Ok(aug)
}

/// Switches an augmented task to the given interaction stage. The propose
/// stage has no observation channel, so the task is returned as is.
pub fn annotate_side_effects(aug: &AugmentedTask, stage: Stage, inference: bool) -> Result<AugmentedTask> {
    if stage == Stage::Propose {
        return Ok(aug.clone());
    }
    let cfg = CompileConfig { stage, inference, ..aug.config.clone() };
    compile(&aug.problem, &cfg)
}
