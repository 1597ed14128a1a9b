//! Delete-relaxation heuristics behind a name-keyed registry.
//!
//! All heuristics work in the planner's scaled integer cost units. The
//! relaxation ignores deletes. Negative conditions and implications are
//! honoured only where the fluent involved can no longer change from the
//! evaluated state (explanation fluents once the plan proper has begun, for
//! instance) and dropped otherwise, so h_max stays admissible.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cost::Cost;
use crate::error::{Error, Result};
use crate::grounding::{FluentId, PlanningTask, State};

use super::scale_costs;

/// Per-state estimator built for one task. `None` means the goal is
/// unreachable even in the relaxation.
pub trait Heuristic: Send {
    fn estimate(&mut self, s: &State) -> Option<i64>;
}

pub trait HeuristicFactory: Send + Sync {
    fn name(&self) -> &'static str;
    fn admissible(&self) -> bool;
    fn build(&self, task: &PlanningTask, costs: &[i64]) -> Box<dyn Heuristic>;
}

struct BlindFactory;
struct HmaxFactory;
struct HaddFactory;

static REGISTRY: [&dyn HeuristicFactory; 3] = [&BlindFactory, &HmaxFactory, &HaddFactory];

pub fn registry() -> &'static [&'static dyn HeuristicFactory] {
    &REGISTRY
}

pub fn heuristic_by_name(name: &str) -> Result<&'static dyn HeuristicFactory> {
    REGISTRY.iter().copied().find(|f| f.name() == name).ok_or_else(|| Error::UnknownStrategy {
        kind: "heuristic",
        name: name.to_string(),
        available: REGISTRY.iter().map(|f| f.name()).collect::<Vec<_>>().join(", "),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeuristicKind {
    Blind,
    #[default]
    Hmax,
    Hadd,
}

impl HeuristicKind {
    pub fn name(self) -> &'static str {
        match self {
            HeuristicKind::Blind => "blind",
            HeuristicKind::Hmax => "hmax",
            HeuristicKind::Hadd => "hadd",
        }
    }

    pub fn factory(self) -> &'static dyn HeuristicFactory {
        heuristic_by_name(self.name()).expect("built-in heuristic registered")
    }

    pub fn admissible(self) -> bool {
        self.factory().admissible()
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HeuristicKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blind" => Ok(HeuristicKind::Blind),
            "hmax" => Ok(HeuristicKind::Hmax),
            "hadd" => Ok(HeuristicKind::Hadd),
            other => heuristic_by_name(other).map(|_| unreachable!()),
        }
    }
}

struct Blind;

impl Heuristic for Blind {
    fn estimate(&mut self, _: &State) -> Option<i64> {
        Some(0)
    }
}

impl HeuristicFactory for BlindFactory {
    fn name(&self) -> &'static str {
        "blind"
    }
    fn admissible(&self) -> bool {
        true
    }
    fn build(&self, _: &PlanningTask, _: &[i64]) -> Box<dyn Heuristic> {
        Box::new(Blind)
    }
}

impl HeuristicFactory for HmaxFactory {
    fn name(&self) -> &'static str {
        "hmax"
    }
    fn admissible(&self) -> bool {
        true
    }
    fn build(&self, task: &PlanningTask, costs: &[i64]) -> Box<dyn Heuristic> {
        Box::new(Relaxed::new(task, costs, false))
    }
}

impl HeuristicFactory for HaddFactory {
    fn name(&self) -> &'static str {
        "hadd"
    }
    fn admissible(&self) -> bool {
        false
    }
    fn build(&self, task: &PlanningTask, costs: &[i64]) -> Box<dyn Heuristic> {
        Box::new(Relaxed::new(task, costs, true))
    }
}

struct RelaxedOp {
    /// Action preconditions plus the group's effect conditions.
    pre: Vec<FluentId>,
    neg: Vec<FluentId>,
    /// Implication consequents, each with the guards that demand it.
    implied: Vec<(FluentId, Vec<FluentId>)>,
    add: Vec<FluentId>,
    del: Vec<FluentId>,
    cost: i64,
}

/// Which operators can never fire again and which fluents can no longer be
/// added or deleted, given the never-deleted fluents a state holds.
struct Frozen {
    dead: Vec<bool>,
    no_add: Vec<bool>,
    no_del: Vec<bool>,
}

const BASE: usize = usize::MAX;

/// Generalized Dijkstra over relaxed operators, one per effect group; `sum`
/// picks h_add over h_max. A constraint on a fluent that no live operator
/// can change is evaluated exactly against the state; anything else
/// negative is dropped.
struct Relaxed {
    ops: Vec<RelaxedOp>,
    /// `(op, slot)`: `slot` is [`BASE`] or an index into `implied`.
    pre_of: Vec<Vec<(usize, usize)>>,
    goal: Vec<FluentId>,
    sum: bool,
    /// Never-deleted fluents that appear negatively somewhere.
    sticky: Vec<FluentId>,
    frozen: HashMap<Vec<bool>, Frozen>,
    dist: Vec<i64>,
    missing: Vec<usize>,
    acc: Vec<i64>,
    usable: Vec<bool>,
    active: Vec<Vec<bool>>,
}

const INF: i64 = i64::MAX;

fn frozen_for<'a>(
    cache: &'a mut HashMap<Vec<bool>, Frozen>,
    ops: &[RelaxedOp],
    sticky: &[FluentId],
    n: usize,
    s: &State,
) -> &'a Frozen {
    let key: Vec<bool> = sticky.iter().map(|&f| s.contains(f)).collect();
    cache.entry(key).or_insert_with_key(|key| {
        let held: Vec<FluentId> = sticky.iter().zip(key).filter(|(_, &b)| b).map(|(&f, _)| f).collect();
        let dead: Vec<bool> = ops.iter().map(|o| o.neg.iter().any(|f| held.contains(f))).collect();
        let (mut no_add, mut no_del) = (vec![true; n], vec![true; n]);
        for (o, _) in ops.iter().zip(&dead).filter(|(_, &d)| !d) {
            o.add.iter().for_each(|&f| no_add[f] = false);
            o.del.iter().for_each(|&f| no_del[f] = false);
        }
        Frozen { dead, no_add, no_del }
    })
}

impl Relaxed {
    fn new(task: &PlanningTask, costs: &[i64], sum: bool) -> Self {
        let n = task.num_fluents();
        let mut ops = Vec::new();
        for (a, &cost) in task.actions().iter().zip(costs) {
            for (k, g) in a.effects.iter().enumerate() {
                if k > 0 && g.add.is_empty() && g.del.is_empty() {
                    continue;
                }
                let mut pre: Vec<FluentId> = a.pre.iter().chain(&g.when).copied().collect();
                pre.sort_unstable();
                pre.dedup();
                let mut neg: Vec<FluentId> = a.neg_pre.iter().chain(&g.when_not).copied().collect();
                neg.sort_unstable();
                neg.dedup();
                let mut implied: BTreeMap<FluentId, Vec<FluentId>> = BTreeMap::new();
                for i in &a.implications {
                    if pre.binary_search(&i.consequent).is_err() {
                        implied.entry(i.consequent).or_default().push(i.guard);
                    }
                }
                // Conditional groups also pay the action's cost, which keeps
                // every relaxed operator as expensive as the real one.
                ops.push(RelaxedOp {
                    pre,
                    neg,
                    implied: implied.into_iter().collect(),
                    add: g.add.clone(),
                    del: g.del.clone(),
                    cost,
                });
            }
        }
        let mut pre_of = vec![Vec::new(); n];
        let mut deleted = vec![false; n];
        let mut negated = vec![false; n];
        for (i, o) in ops.iter().enumerate() {
            for &p in &o.pre {
                pre_of[p].push((i, BASE));
            }
            for (k, (c, _)) in o.implied.iter().enumerate() {
                pre_of[*c].push((i, k));
            }
            o.del.iter().for_each(|&f| deleted[f] = true);
            o.neg.iter().for_each(|&f| negated[f] = true);
            o.implied.iter().flat_map(|(_, g)| g).for_each(|&f| negated[f] = true);
        }
        let sticky = (0..n).filter(|&f| !deleted[f] && negated[f]).collect();
        let m = ops.len();
        let active = ops.iter().map(|o| vec![false; o.implied.len()]).collect();
        Relaxed {
            ops,
            pre_of,
            goal: task.goal().to_vec(),
            sum,
            sticky,
            frozen: HashMap::new(),
            dist: vec![INF; n],
            missing: vec![0; m],
            acc: vec![0; m],
            usable: vec![false; m],
            active,
        }
    }

    fn fire(&mut self, op: usize, heap: &mut BinaryHeap<Reverse<(i64, FluentId)>>) {
        let o = &self.ops[op];
        let v = self.acc[op].saturating_add(o.cost);
        for &a in &o.add {
            if v < self.dist[a] {
                self.dist[a] = v;
                heap.push(Reverse((v, a)));
            }
        }
    }
}

impl Heuristic for Relaxed {
    fn estimate(&mut self, s: &State) -> Option<i64> {
        if s.contains_all(&self.goal) {
            return Some(0);
        }
        let fz = frozen_for(&mut self.frozen, &self.ops, &self.sticky, self.dist.len(), s);
        let stuck_true = |f: FluentId| s.contains(f) && fz.no_del[f];
        let stuck_false = |f: FluentId| !s.contains(f) && fz.no_add[f];
        for (i, o) in self.ops.iter().enumerate() {
            self.usable[i] = !fz.dead[i] && !o.neg.iter().any(|&f| stuck_true(f)) && !o.pre.iter().any(|&f| stuck_false(f));
            self.missing[i] = o.pre.len();
            for (k, (_, guards)) in o.implied.iter().enumerate() {
                self.active[i][k] = guards.iter().any(|&g| stuck_true(g));
                self.missing[i] += self.active[i][k] as usize;
            }
        }

        self.dist.iter_mut().for_each(|d| *d = INF);
        self.acc.iter_mut().for_each(|a| *a = 0);
        let mut heap = BinaryHeap::new();
        for f in s.iter() {
            self.dist[f] = 0;
            heap.push(Reverse((0, f)));
        }
        for i in 0..self.ops.len() {
            if self.usable[i] && self.missing[i] == 0 {
                self.fire(i, &mut heap);
            }
        }
        while let Some(Reverse((d, f))) = heap.pop() {
            if d > self.dist[f] {
                continue;
            }
            for k in 0..self.pre_of[f].len() {
                let (op, slot) = self.pre_of[f][k];
                if !self.usable[op] || (slot != BASE && !self.active[op][slot]) {
                    continue;
                }
                self.acc[op] = if self.sum { self.acc[op].saturating_add(d) } else { self.acc[op].max(d) };
                self.missing[op] -= 1;
                if self.missing[op] == 0 {
                    self.fire(op, &mut heap);
                }
            }
        }
        let mut h = 0i64;
        for &g in &self.goal {
            let d = self.dist[g];
            if d == INF {
                return None;
            }
            h = if self.sum { h.saturating_add(d) } else { h.max(d) };
        }
        Some(h)
    }
}

/// Heuristic value in task cost units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Estimate {
    Finite(#[serde(with = "crate::cost::serde_cost")] Cost),
    Unreachable,
}

fn evaluate(kind: HeuristicKind, task: &PlanningTask, s: &State) -> Estimate {
    let (costs, scale) = scale_costs(task);
    match kind.factory().build(task, &costs).estimate(s) {
        Some(h) => Estimate::Finite(Cost::new(h, scale)),
        None => Estimate::Unreachable,
    }
}

pub fn hmax(task: &PlanningTask, s: &State) -> Estimate {
    evaluate(HeuristicKind::Hmax, task, s)
}

pub fn hadd(task: &PlanningTask, s: &State) -> Estimate {
    evaluate(HeuristicKind::Hadd, task, s)
}
