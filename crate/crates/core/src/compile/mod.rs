//! Expectation-aware compilation: model diffs, the augmented task and
//! solution extraction.

mod augment;
mod diff;
mod extract;

use std::cmp::Ordering as CmpOrdering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grounding::{ground_pair, EffectGroup, Fluent, FluentRole, GroundAction, GroundOptions, PlanningTask};
use crate::pddl::{parse_domain, parse_problem};

pub use augment::{
    annotate_side_effects, compile, AugmentedTask, CompileConfig, ExplanationCosts, Ordering, SizeReport, Stage, STARTED_FLUENT,
};
pub use diff::{apply_updates, diff_models};
pub use extract::{extract_solution, verify_solution, EaSolution, SolutionCheck};

/// Precondition fluent given to the copy of an action that exists in only
/// one of the two models. It is never true.
pub const UNAVAILABLE: &str = "ea_unavailable";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateKind {
    InitAdd,
    InitRemove,
    GoalAdd,
    GoalRemove,
    PrecAdd,
    PrecRemove,
    AddeffAdd,
    AddeffRemove,
    DeleffAdd,
    DeleffRemove,
}

/// The model component an update touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Part {
    Init,
    Goal,
    Prec,
    Adds,
    Dels,
}

impl UpdateKind {
    pub const ALL: [UpdateKind; 10] = [
        UpdateKind::InitAdd,
        UpdateKind::InitRemove,
        UpdateKind::GoalAdd,
        UpdateKind::GoalRemove,
        UpdateKind::PrecAdd,
        UpdateKind::PrecRemove,
        UpdateKind::AddeffAdd,
        UpdateKind::AddeffRemove,
        UpdateKind::DeleffAdd,
        UpdateKind::DeleffRemove,
    ];

    pub fn new(part: Part, plus: bool) -> Self {
        use UpdateKind::*;
        match (part, plus) {
            (Part::Init, true) => InitAdd,
            (Part::Init, false) => InitRemove,
            (Part::Goal, true) => GoalAdd,
            (Part::Goal, false) => GoalRemove,
            (Part::Prec, true) => PrecAdd,
            (Part::Prec, false) => PrecRemove,
            (Part::Adds, true) => AddeffAdd,
            (Part::Adds, false) => AddeffRemove,
            (Part::Dels, true) => DeleffAdd,
            (Part::Dels, false) => DeleffRemove,
        }
    }

    pub fn part(self) -> Part {
        use UpdateKind::*;
        match self {
            InitAdd | InitRemove => Part::Init,
            GoalAdd | GoalRemove => Part::Goal,
            PrecAdd | PrecRemove => Part::Prec,
            AddeffAdd | AddeffRemove => Part::Adds,
            DeleffAdd | DeleffRemove => Part::Dels,
        }
    }

    /// Adds to the human model something only the robot model has.
    pub fn is_plus(self) -> bool {
        matches!(
            self,
            UpdateKind::InitAdd | UpdateKind::GoalAdd | UpdateKind::PrecAdd | UpdateKind::AddeffAdd | UpdateKind::DeleffAdd
        )
    }

    pub fn as_str(self) -> &'static str {
        use UpdateKind::*;
        match self {
            InitAdd => "init-add",
            InitRemove => "init-remove",
            GoalAdd => "goal-add",
            GoalRemove => "goal-remove",
            PrecAdd => "prec-add",
            PrecRemove => "prec-remove",
            AddeffAdd => "addeff-add",
            AddeffRemove => "addeff-remove",
            DeleffAdd => "deleff-add",
            DeleffRemove => "deleff-remove",
        }
    }

    fn meta_tag(self) -> &'static str {
        match self.part() {
            Part::Init => "init",
            Part::Goal => "goal",
            Part::Prec => "prec",
            Part::Adds => "adds",
            Part::Dels => "dels",
        }
    }
}

impl fmt::Display for UpdateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One atomic correction to the human model.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelUpdate {
    pub kind: UpdateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    pub fluent: String,
}

impl ModelUpdate {
    pub fn init(plus: bool, fluent: impl Into<String>) -> Self {
        ModelUpdate { kind: UpdateKind::new(Part::Init, plus), action: None, fluent: fluent.into() }
    }

    pub fn goal(plus: bool, fluent: impl Into<String>) -> Self {
        ModelUpdate { kind: UpdateKind::new(Part::Goal, plus), action: None, fluent: fluent.into() }
    }

    pub fn action(part: Part, plus: bool, action: impl Into<String>, fluent: impl Into<String>) -> Self {
        ModelUpdate { kind: UpdateKind::new(part, plus), action: Some(action.into()), fluent: fluent.into() }
    }

    pub fn is_plus(&self) -> bool {
        self.kind.is_plus()
    }

    /// Canonical meta-fluent name, e.g. `mu+_prec__move_p1_p2__clear_p1_p2`
    /// or `mu-_init__clear_p16_p17`.
    pub fn meta_name(&self) -> String {
        let sign = if self.is_plus() { '+' } else { '-' };
        match &self.action {
            Some(a) => format!("mu{sign}_{}__{a}__{}", self.kind.meta_tag(), self.fluent),
            None => format!("mu{sign}_{}__{}", self.kind.meta_tag(), self.fluent),
        }
    }

    pub fn explain_name(&self) -> String {
        format!("explain_{}", self.meta_name())
    }
}

impl Ord for ModelUpdate {
    fn cmp(&self, other: &Self) -> CmpOrdering {
        self.meta_name().cmp(&other.meta_name())
    }
}

impl PartialOrd for ModelUpdate {
    fn partial_cmp(&self, other: &Self) -> Option<CmpOrdering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ModelUpdate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verb = if self.is_plus() { "add" } else { "remove" };
        let dir = if self.is_plus() { "to" } else { "from" };
        match (&self.action, self.kind.part()) {
            (None, Part::Init) => write!(f, "{verb}-({})-{dir}-I", self.fluent),
            (None, _) => write!(f, "{verb}-({})-{dir}-G", self.fluent),
            (Some(a), _) => write!(f, "{verb}-({})-{dir}-{}-of-{a}", self.fluent, self.kind.meta_tag()),
        }
    }
}

/// Discrepancies between the two models, split by direction.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDiff {
    pub plus: BTreeSet<ModelUpdate>,
    pub minus: BTreeSet<ModelUpdate>,
}

impl ModelDiff {
    pub fn len(&self) -> usize {
        self.plus.len() + self.minus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plus.is_empty() && self.minus.is_empty()
    }

    pub fn contains(&self, u: &ModelUpdate) -> bool {
        if u.is_plus() {
            self.plus.contains(u)
        } else {
            self.minus.contains(u)
        }
    }

    /// All updates in canonical order.
    pub fn updates(&self) -> Vec<ModelUpdate> {
        let mut v: Vec<ModelUpdate> = self.plus.iter().chain(&self.minus).cloned().collect();
        v.sort();
        v
    }

    pub fn insert(&mut self, u: ModelUpdate) {
        if u.is_plus() {
            self.plus.insert(u);
        } else {
            self.minus.insert(u);
        }
    }
}

/// A robot/human model pair over one fluent vocabulary and one action-name
/// universe, with its diff.
#[derive(Debug, Clone)]
pub struct EaProblem {
    robot: PlanningTask,
    human: PlanningTask,
    diff: ModelDiff,
}

impl EaProblem {
    /// Aligns the two tasks and computes their diff. Fluent sets must be
    /// equal by name; an action missing from one side is copied over with
    /// the never-true [`UNAVAILABLE`] precondition.
    pub fn new(robot: PlanningTask, human: PlanningTask) -> Result<Self> {
        let (robot, human) = align(robot, human)?;
        let diff = diff_models(&robot, &human)?;
        Ok(EaProblem { robot, human, diff })
    }

    pub fn from_pddl(robot_domain: &str, robot_problem: &str, human_domain: &str, human_problem: &str) -> Result<Self> {
        Self::from_pddl_with(robot_domain, robot_problem, human_domain, human_problem, GroundOptions::default())
    }

    pub fn from_pddl_with(
        robot_domain: &str,
        robot_problem: &str,
        human_domain: &str,
        human_problem: &str,
        opts: GroundOptions,
    ) -> Result<Self> {
        let rd = parse_domain(robot_domain)?;
        let rp = parse_problem(robot_problem, &rd)?;
        let hd = parse_domain(human_domain)?;
        let hp = parse_problem(human_problem, &hd)?;
        let (r, h) = ground_pair((&rd, &rp), (&hd, &hp), opts)?;
        Self::new(r, h)
    }

    pub fn robot(&self) -> &PlanningTask {
        &self.robot
    }

    pub fn human(&self) -> &PlanningTask {
        &self.human
    }

    pub fn diff(&self) -> &ModelDiff {
        &self.diff
    }

    /// The human model after `updates`; see [`apply_updates`].
    pub fn updated_human(&self, updates: &[ModelUpdate]) -> Result<PlanningTask> {
        apply_updates(self, updates)
    }
}

fn align(robot: PlanningTask, human: PlanningTask) -> Result<(PlanningTask, PlanningTask)> {
    for (t, who) in [(&robot, "robot"), (&human, "human")] {
        if let Some(a) = t.actions().iter().find(|a| !a.neg_pre.is_empty() || !a.implications.is_empty()) {
            return Err(Error::InvalidTask(format!(
                "{who} action `{}` has negative or implication preconditions; base models must be positive",
                a.name
            )));
        }
    }
    let rnames: BTreeSet<&str> = robot.fluents().iter().map(|f| f.name.as_str()).collect();
    let hnames: BTreeSet<&str> = human.fluents().iter().map(|f| f.name.as_str()).collect();
    if rnames != hnames {
        let only_r: Vec<&&str> = rnames.difference(&hnames).take(5).collect();
        let only_h: Vec<&&str> = hnames.difference(&rnames).take(5).collect();
        return Err(Error::Vocabulary(format!("robot-only fluents {only_r:?}, human-only fluents {only_h:?}")));
    }
    let ranames: BTreeSet<&str> = robot.actions().iter().map(|a| a.name.as_str()).collect();
    let hanames: BTreeSet<&str> = human.actions().iter().map(|a| a.name.as_str()).collect();
    let same_order = robot.fluents().iter().zip(human.fluents()).all(|(a, b)| a.name == b.name);
    if ranames == hanames && same_order {
        return Ok((robot, human));
    }

    let mut fluents: Vec<Fluent> = robot.fluents().to_vec();
    let needs_phantom = ranames != hanames;
    let phantom = match robot.fluent_id(UNAVAILABLE) {
        Some(id) => Some(id),
        None if needs_phantom => {
            fluents.push(Fluent { id: fluents.len(), name: UNAVAILABLE.into(), role: FluentRole::Task });
            Some(fluents.len() - 1)
        }
        None => None,
    };
    // human fluent id -> shared id
    let hmap: Vec<usize> = human.fluents().iter().map(|f| robot.fluent_id(&f.name).expect("same vocabulary")).collect();
    let human_actions: Vec<GroundAction> = human.actions().iter().map(|a| remap(a, &hmap)).collect();
    let mut r_actions: Vec<GroundAction> = robot.actions().to_vec();
    let mut h_actions = human_actions;
    let h_by_name: HashMap<String, GroundAction> = h_actions.iter().map(|a| (a.name.clone(), a.clone())).collect();
    let r_by_name: HashMap<String, GroundAction> = r_actions.iter().map(|a| (a.name.clone(), a.clone())).collect();
    for name in hanames.difference(&ranames) {
        let mut a = h_by_name[*name].clone();
        a.pre.push(phantom.expect("phantom allocated"));
        r_actions.push(a);
    }
    for name in ranames.difference(&hanames) {
        let mut a = r_by_name[*name].clone();
        a.pre.push(phantom.expect("phantom allocated"));
        h_actions.push(a);
    }
    r_actions.sort_by(|a, b| a.name.cmp(&b.name));
    h_actions.sort_by(|a, b| a.name.cmp(&b.name));
    let hinit = human.init().iter().map(|&f| hmap[f]).collect();
    let hgoal = human.goal().iter().map(|&f| hmap[f]).collect();
    let r = PlanningTask::new(robot.name.clone(), fluents.clone(), r_actions, robot.init().to_vec(), robot.goal().to_vec())?;
    let h = PlanningTask::new(human.name.clone(), fluents, h_actions, hinit, hgoal)?;
    Ok((r, h))
}

fn remap(a: &GroundAction, map: &[usize]) -> GroundAction {
    let m = |v: &Vec<usize>| v.iter().map(|&f| map[f]).collect::<Vec<_>>();
    let mut out = a.clone();
    out.pre = m(&a.pre);
    out.effects = a
        .effects
        .iter()
        .map(|e| EffectGroup { when: m(&e.when), when_not: m(&e.when_not), add: m(&e.add), del: m(&e.del) })
        .collect();
    out
}

/// Conditional groups as a canonical set, for comparing the two models.
/// `(when, when_not, add, del)` of each conditional group.
pub(crate) type Signature = BTreeSet<(Vec<usize>, Vec<usize>, Vec<usize>, Vec<usize>)>;

pub(crate) fn conditional_signature(a: &GroundAction) -> Signature {
    a.conditional()
        .iter()
        .map(|e| {
            let mut g = e.clone();
            g.normalize();
            (g.when, g.when_not, g.add, g.del)
        })
        .collect()
}
