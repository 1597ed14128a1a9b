//! Typed enumeration of schema instantiations with optional
//! relaxed-reachability pruning.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::cost::Cost;
use crate::error::{Error, Result};
use crate::pddl::{is_variable, ActionSchema, Atom, CostExpr, LiftedDomain, LiftedProblem};

use super::{ActionRole, EffectGroup, Fluent, FluentRole, GroundAction, PlanningTask};

#[derive(Debug, Clone, Copy)]
pub struct GroundOptions {
    /// Drop actions unreachable in the delete relaxation (and static-fact
    /// violations during enumeration).
    pub prune: bool,
    /// Allow two parameters of one schema to bind the same object.
    pub allow_repeated_args: bool,
    pub max_actions: usize,
}

impl Default for GroundOptions {
    fn default() -> Self {
        GroundOptions { prune: true, allow_repeated_args: false, max_actions: 200_000 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GroundStats {
    pub enumerated: usize,
    pub pruned: usize,
}

#[derive(Debug, Clone)]
struct RawEffect {
    when: Vec<String>,
    add: Vec<String>,
    del: Vec<String>,
}

#[derive(Debug, Clone)]
struct RawAction {
    name: String,
    schema: String,
    args: Vec<String>,
    pre: Vec<String>,
    effects: Vec<RawEffect>,
    cost: Cost,
}

#[derive(Debug, Clone)]
struct RawTask {
    name: String,
    init: BTreeSet<String>,
    goal: BTreeSet<String>,
    actions: Vec<RawAction>,
}

fn static_predicates(doms: &[&LiftedDomain]) -> BTreeSet<String> {
    let mut fluent: BTreeSet<&str> = BTreeSet::new();
    for d in doms {
        for a in d.actions.values() {
            for e in &a.effects {
                fluent.extend(e.add.iter().chain(&e.del).map(|x| x.predicate.as_str()));
            }
        }
    }
    doms.iter().flat_map(|d| d.predicates.keys()).filter(|p| !fluent.contains(p.as_str())).cloned().collect()
}

fn substitute(a: &Atom, binding: &BTreeMap<&str, &str>) -> Atom {
    Atom {
        predicate: a.predicate.clone(),
        args: a.args.iter().map(|t| if is_variable(t) { binding[t.as_str()].to_string() } else { t.clone() }).collect(),
    }
}

struct Grounder<'a> {
    dom: &'a LiftedDomain,
    prob: &'a LiftedProblem,
    opts: GroundOptions,
    statics: &'a BTreeSet<String>,
    static_facts: &'a BTreeSet<Atom>,
    out: Vec<RawAction>,
    enumerated: usize,
}

impl<'a> Grounder<'a> {
    fn schema(&mut self, schema: &ActionSchema) -> Result<()> {
        let objects = self.prob.all_objects(self.dom);
        let candidates: Vec<Vec<&str>> = schema
            .parameters
            .iter()
            .map(|p| objects.iter().filter(|(_, t)| self.dom.is_subtype(t, &p.ty)).map(|(o, _)| *o).collect())
            .collect();
        // Static precondition atoms, checked once all their variables are bound.
        let static_pre: Vec<(usize, &Atom)> = if self.opts.prune {
            schema
                .precondition
                .iter()
                .filter(|a| self.statics.contains(&a.predicate))
                .map(|a| {
                    let last = a
                        .args
                        .iter()
                        .filter_map(|t| schema.parameters.iter().position(|p| &p.name == t))
                        .max()
                        .map_or(0, |i| i + 1);
                    (last, a)
                })
                .collect()
        } else {
            Vec::new()
        };
        let mut binding: Vec<&str> = Vec::with_capacity(schema.parameters.len());
        self.enumerate(schema, &candidates, &static_pre, &mut binding)
    }

    fn enumerate<'s>(
        &mut self,
        schema: &ActionSchema,
        candidates: &[Vec<&'s str>],
        static_pre: &[(usize, &Atom)],
        binding: &mut Vec<&'s str>,
    ) -> Result<()> {
        let depth = binding.len();
        let map: BTreeMap<&str, &str> =
            schema.parameters.iter().zip(binding.iter()).map(|(p, o)| (p.name.as_str(), *o)).collect();
        for (level, atom) in static_pre {
            if *level == depth && !self.static_facts.contains(&substitute(atom, &map)) {
                return Ok(());
            }
        }
        if depth == schema.parameters.len() {
            self.enumerated += 1;
            if self.out.len() >= self.opts.max_actions {
                return Err(Error::GroundingCap { cap: self.opts.max_actions });
            }
            let action = self.instantiate(schema, &map)?;
            self.out.push(action);
            return Ok(());
        }
        for &obj in &candidates[depth] {
            if !self.opts.allow_repeated_args && binding.contains(&obj) {
                continue;
            }
            binding.push(obj);
            self.enumerate(schema, candidates, static_pre, binding)?;
            binding.pop();
        }
        Ok(())
    }

    fn instantiate(&self, schema: &ActionSchema, map: &BTreeMap<&str, &str>) -> Result<RawAction> {
        let args: Vec<String> = schema.parameters.iter().map(|p| map[p.name.as_str()].to_string()).collect();
        let names = |set: &BTreeSet<Atom>| set.iter().map(|a| substitute(a, map).ground_name()).collect::<Vec<_>>();
        let cost = match &schema.cost {
            CostExpr::Const(c) => *c,
            CostExpr::Function(f) => {
                let key = substitute(f, map);
                *self.prob.cost_table.get(&key).ok_or_else(|| Error::Grounding(format!("no value for cost term {key}")))?
            }
        };
        Ok(RawAction {
            name: crate::pddl::ground_name(&schema.name, &args),
            schema: schema.name.clone(),
            args,
            pre: names(&schema.precondition),
            effects: schema
                .effects
                .iter()
                .map(|e| RawEffect { when: names(&e.condition), add: names(&e.add), del: names(&e.del) })
                .collect(),
            cost,
        })
    }
}

fn raw_task(
    dom: &LiftedDomain,
    prob: &LiftedProblem,
    opts: GroundOptions,
    statics: &BTreeSet<String>,
    static_facts: &BTreeSet<Atom>,
) -> Result<(RawTask, usize)> {
    if prob.domain_name != dom.name {
        return Err(Error::Grounding(format!("problem `{}` is for domain `{}`", prob.name, prob.domain_name)));
    }
    let mut g = Grounder { dom, prob, opts, statics, static_facts, out: Vec::new(), enumerated: 0 };
    for schema in dom.actions.values() {
        g.schema(schema)?;
    }
    let enumerated = g.enumerated;
    Ok((
        RawTask {
            name: prob.name.clone(),
            init: prob.init.iter().map(Atom::ground_name).collect(),
            goal: prob.goal.iter().map(Atom::ground_name).collect(),
            actions: g.out,
        },
        enumerated,
    ))
}

/// Names of actions reachable in the delete relaxation from `init`.
fn relaxed_reachable(task: &RawTask) -> HashSet<String> {
    let mut facts: HashSet<&str> = task.init.iter().map(String::as_str).collect();
    let mut reached: HashSet<String> = HashSet::new();
    let mut changed = true;
    while changed {
        changed = false;
        for a in &task.actions {
            if reached.contains(&a.name) || !a.pre.iter().all(|p| facts.contains(p.as_str())) {
                continue;
            }
            reached.insert(a.name.clone());
            changed = true;
            for e in &a.effects {
                facts.extend(e.add.iter().map(String::as_str));
            }
        }
    }
    reached
}

fn vocabulary<'a>(tasks: impl IntoIterator<Item = &'a RawTask>) -> BTreeMap<String, usize> {
    let mut names: BTreeSet<&str> = BTreeSet::new();
    for t in tasks {
        names.extend(t.init.iter().chain(&t.goal).map(String::as_str));
        for a in &t.actions {
            names.extend(a.pre.iter().map(String::as_str));
            for e in &a.effects {
                names.extend(e.when.iter().chain(&e.add).chain(&e.del).map(String::as_str));
            }
        }
    }
    names.into_iter().enumerate().map(|(i, n)| (n.to_string(), i)).collect()
}

fn build(raw: RawTask, vocab: &BTreeMap<String, usize>) -> Result<PlanningTask> {
    let ids = |v: &[String]| v.iter().map(|n| vocab[n]).collect::<Vec<_>>();
    let fluents = vocab.iter().map(|(n, &id)| Fluent { id, name: n.clone(), role: FluentRole::Task }).collect();
    let mut actions: Vec<GroundAction> = raw
        .actions
        .iter()
        .map(|a| {
            let mut g = GroundAction::new(a.name.clone(), a.cost, ActionRole::TaskLevel);
            g.schema = a.schema.clone();
            g.args = a.args.clone();
            g.pre = ids(&a.pre);
            g.effects = a
                .effects
                .iter()
                .map(|e| EffectGroup { when: ids(&e.when), when_not: Vec::new(), add: ids(&e.add), del: ids(&e.del) })
                .collect();
            g
        })
        .collect();
    actions.sort_by(|a, b| a.name.cmp(&b.name));
    let init = raw.init.iter().map(|n| vocab[n]).collect();
    let goal = raw.goal.iter().map(|n| vocab[n]).collect();
    PlanningTask::new(raw.name, fluents, actions, init, goal)
}

pub fn ground(dom: &LiftedDomain, prob: &LiftedProblem, opts: GroundOptions) -> Result<PlanningTask> {
    ground_with_stats(dom, prob, opts).map(|(t, _)| t)
}

/// Parses and grounds a domain/problem text pair.
pub fn load_task(domain: &str, problem: &str, opts: GroundOptions) -> Result<PlanningTask> {
    let d = crate::pddl::parse_domain(domain)?;
    let p = crate::pddl::parse_problem(problem, &d)?;
    ground(&d, &p, opts)
}

/// Grounds a single model. Fluent and action ids follow lexicographic name
/// order, so grounding is deterministic.
pub fn ground_with_stats(dom: &LiftedDomain, prob: &LiftedProblem, opts: GroundOptions) -> Result<(PlanningTask, GroundStats)> {
    let statics = static_predicates(&[dom]);
    let static_facts: BTreeSet<Atom> = prob.init.iter().filter(|a| statics.contains(&a.predicate)).cloned().collect();
    let (mut raw, enumerated) = raw_task(dom, prob, opts, &statics, &static_facts)?;
    if opts.prune {
        let keep = relaxed_reachable(&raw);
        raw.actions.retain(|a| keep.contains(&a.name));
    }
    let stats = GroundStats { enumerated, pruned: enumerated - raw.actions.len() };
    let vocab = vocabulary([&raw]);
    Ok((build(raw, &vocab)?, stats))
}

/// Grounds a robot/human model pair over one shared fluent vocabulary.
/// Pruning is joint: an action survives if it is relaxed-reachable in
/// either model, so both tasks keep the same action universe wherever the
/// lifted domains agree.
pub fn ground_pair(
    robot: (&LiftedDomain, &LiftedProblem),
    human: (&LiftedDomain, &LiftedProblem),
    opts: GroundOptions,
) -> Result<(PlanningTask, PlanningTask)> {
    let statics = static_predicates(&[robot.0, human.0]);
    let static_facts: BTreeSet<Atom> =
        robot.1.init.iter().chain(&human.1.init).filter(|a| statics.contains(&a.predicate)).cloned().collect();
    let (mut r, _) = raw_task(robot.0, robot.1, opts, &statics, &static_facts)?;
    let (mut h, _) = raw_task(human.0, human.1, opts, &statics, &static_facts)?;
    if opts.prune {
        let mut keep = relaxed_reachable(&r);
        keep.extend(relaxed_reachable(&h));
        r.actions.retain(|a| keep.contains(&a.name));
        h.actions.retain(|a| keep.contains(&a.name));
    }
    let vocab = vocabulary([&r, &h]);
    Ok((build(r, &vocab)?, build(h, &vocab)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_problem};

    const BW: &str = include_str!("../../data/blocksworld/domain.pddl");
    const BW3: &str = include_str!("../../data/blocksworld/bw3-table.pddl");

    #[test]
    fn blocksworld_three_blocks_enumerates_18() {
        let d = parse_domain(BW).unwrap();
        let p = parse_problem(BW3, &d).unwrap();
        let opts = GroundOptions { prune: false, ..Default::default() };
        let (t, stats) = ground_with_stats(&d, &p, opts).unwrap();
        assert_eq!(t.actions().len(), 18);
        assert_eq!(stats.enumerated, 18);
        assert_eq!(stats.pruned, 0);
    }

    #[test]
    fn empty_domain_grounds_to_no_actions() {
        let d = parse_domain("(define (domain e) (:predicates (p)))").unwrap();
        let p = parse_problem("(define (problem x) (:domain e) (:init (p)) (:goal (and (p))))", &d).unwrap();
        let t = ground(&d, &p, GroundOptions::default()).unwrap();
        assert!(t.actions().is_empty());
        assert!(t.is_goal(&t.initial_state()));
    }

    #[test]
    fn cap_is_enforced() {
        let d = parse_domain(BW).unwrap();
        let p = parse_problem(BW3, &d).unwrap();
        let opts = GroundOptions { prune: false, max_actions: 5, ..Default::default() };
        assert!(matches!(ground(&d, &p, opts), Err(Error::GroundingCap { cap: 5 })));
    }

    #[test]
    fn grounding_is_deterministic() {
        let d = parse_domain(BW).unwrap();
        let p = parse_problem(BW3, &d).unwrap();
        let a = ground(&d, &p, GroundOptions::default()).unwrap();
        let b = ground(&d, &p, GroundOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
