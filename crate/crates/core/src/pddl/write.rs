//! Deterministic PDDL output. Everything is emitted in lexicographic order
//! so files are byte-stable.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::cost::{format_cost_decimal, Cost};
use crate::grounding::{EffectGroup, PlanningTask};

use super::{Atom, CostExpr, LiftedDomain, LiftedProblem, TypedName, OBJECT_TYPE};

fn typed(names: &[TypedName]) -> String {
    names
        .iter()
        .map(|p| if p.ty == OBJECT_TYPE { p.name.clone() } else { format!("{} - {}", p.name, p.ty) })
        .collect::<Vec<_>>()
        .join(" ")
}

fn typed_map(map: &BTreeMap<String, String>) -> String {
    map.iter().map(|(n, t)| if t == OBJECT_TYPE { n.clone() } else { format!("{n} - {t}") }).collect::<Vec<_>>().join(" ")
}

fn conj<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> String {
    let parts: Vec<String> = atoms.into_iter().map(Atom::to_string).collect();
    format!("(and{})", parts.iter().map(|p| format!(" {p}")).collect::<String>())
}

pub fn write_domain(dom: &LiftedDomain) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "(define (domain {})", dom.name);
    if !dom.requirements.is_empty() {
        let _ = writeln!(s, "  (:requirements {})", dom.requirements.iter().cloned().collect::<Vec<_>>().join(" "));
    }
    if !dom.types.is_empty() {
        let _ = writeln!(s, "  (:types {})", typed_map(&dom.types));
    }
    if !dom.constants.is_empty() {
        let _ = writeln!(s, "  (:constants {})", typed_map(&dom.constants));
    }
    let _ = writeln!(s, "  (:predicates");
    for (name, params) in &dom.predicates {
        let p = typed(params);
        let _ = writeln!(s, "    ({name}{}{p})", if p.is_empty() { "" } else { " " });
    }
    let _ = writeln!(s, "  )");
    if !dom.functions.is_empty() {
        let fs: Vec<String> = dom
            .functions
            .iter()
            .map(|(n, ps)| {
                let p = typed(ps);
                format!("({n}{}{p}) - number", if p.is_empty() { "" } else { " " })
            })
            .collect();
        let _ = writeln!(s, "  (:functions {})", fs.join(" "));
    }
    for a in dom.actions.values() {
        let _ = writeln!(s, "  (:action {}", a.name);
        let _ = writeln!(s, "    :parameters ({})", typed(&a.parameters));
        let _ = writeln!(s, "    :precondition {}", conj(&a.precondition));
        let mut eff: Vec<String> = Vec::new();
        for e in &a.effects {
            let mut lits: Vec<String> = e.del.iter().map(|d| format!("(not {d})")).collect();
            lits.extend(e.add.iter().map(Atom::to_string));
            if e.condition.is_empty() {
                eff.extend(lits);
            } else {
                eff.push(format!("(when {} (and {}))", conj(&e.condition), lits.join(" ")));
            }
        }
        match &a.cost {
            CostExpr::Const(c) if *c == Cost::from_integer(1) && !dom.requirements.contains(":action-costs") => {}
            CostExpr::Const(c) => eff.push(format!("(increase (total-cost) {})", format_cost_decimal(c))),
            CostExpr::Function(f) => eff.push(format!("(increase (total-cost) {f})")),
        }
        let _ = writeln!(s, "    :effect (and {}))", eff.join(" "));
    }
    s.push_str(")\n");
    s
}

pub fn write_problem(prob: &LiftedProblem) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "(define (problem {})", prob.name);
    let _ = writeln!(s, "  (:domain {})", prob.domain_name);
    if !prob.objects.is_empty() {
        let _ = writeln!(s, "  (:objects {})", typed_map(&prob.objects));
    }
    let _ = writeln!(s, "  (:init");
    for a in &prob.init {
        let _ = writeln!(s, "    {a}");
    }
    for (f, v) in &prob.cost_table {
        let _ = writeln!(s, "    (= {f} {})", format_cost_decimal(v));
    }
    let _ = writeln!(s, "  )");
    let _ = writeln!(s, "  (:goal {})", conj(&prob.goal));
    if prob.minimize_total_cost {
        let _ = writeln!(s, "  (:metric minimize (total-cost))");
    }
    s.push_str(")\n");
    s
}

/// Grounded domain and problem text for a (possibly compiled) task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskPddl {
    pub domain: String,
    pub problem: String,
}

fn group(task: &PlanningTask, e: &EffectGroup) -> Vec<String> {
    let mut lits: Vec<String> = e.del.iter().map(|&f| format!("(not ({}))", task.fluent_name(f))).collect();
    lits.extend(e.add.iter().map(|&f| format!("({})", task.fluent_name(f))));
    if e.is_unconditional() {
        return lits;
    }
    let mut cond: Vec<String> = e.when.iter().map(|&f| format!("({})", task.fluent_name(f))).collect();
    cond.extend(e.when_not.iter().map(|&f| format!("(not ({}))", task.fluent_name(f))));
    vec![format!("(when (and {}) (and {}))", cond.join(" "), lits.join(" "))]
}

/// Emits a grounded task as PDDL with 0-ary predicates. Requirements are
/// the minimal set the text needs: plain STRIPS unless the task carries
/// negative or implication preconditions, conditional effects or
/// non-unit costs.
pub fn serialize_task(task: &PlanningTask) -> TaskPddl {
    let actions = task.actions();
    let neg = actions.iter().any(|a| !a.neg_pre.is_empty() || a.effects.iter().any(|e| !e.when_not.is_empty()));
    let disj = actions.iter().any(|a| !a.implications.is_empty());
    let cond = actions.iter().any(|a| a.effects.len() > 1);
    let costs = actions.iter().any(|a| a.cost != Cost::from_integer(1));
    let mut reqs = vec![":strips"];
    if neg {
        reqs.push(":negative-preconditions");
    }
    if disj {
        reqs.push(":disjunctive-preconditions");
    }
    if cond {
        reqs.push(":conditional-effects");
    }
    if costs {
        reqs.push(":action-costs");
    }
    let mut fluent_names: Vec<&str> = task.fluents().iter().map(|f| f.name.as_str()).collect();
    fluent_names.sort_unstable();
    let mut d = String::new();
    let _ = writeln!(d, "(define (domain {})", task.name);
    let _ = writeln!(d, "  (:requirements {})", reqs.join(" "));
    let _ = writeln!(d, "  (:predicates");
    for n in &fluent_names {
        let _ = writeln!(d, "    ({n})");
    }
    let _ = writeln!(d, "  )");
    if costs {
        let _ = writeln!(d, "  (:functions (total-cost) - number)");
    }
    for id in task.actions_by_name() {
        let a = task.action(id);
        let _ = writeln!(d, "  (:action {}", a.name);
        let _ = writeln!(d, "    :parameters ()");
        let mut pre: Vec<String> = a.pre.iter().map(|&f| format!("({})", task.fluent_name(f))).collect();
        pre.extend(a.neg_pre.iter().map(|&f| format!("(not ({}))", task.fluent_name(f))));
        pre.extend(
            a.implications
                .iter()
                .map(|i| format!("(imply ({}) ({}))", task.fluent_name(i.guard), task.fluent_name(i.consequent))),
        );
        let _ = writeln!(d, "    :precondition (and{})", pre.iter().map(|p| format!(" {p}")).collect::<String>());
        let mut eff: Vec<String> = a.effects.iter().flat_map(|e| group(task, e)).collect();
        if costs {
            eff.push(format!("(increase (total-cost) {})", format_cost_decimal(&a.cost)));
        }
        let _ = writeln!(d, "    :effect (and{}))", eff.iter().map(|p| format!(" {p}")).collect::<String>());
    }
    d.push_str(")\n");

    let mut p = String::new();
    let _ = writeln!(p, "(define (problem {}-problem)", task.name);
    let _ = writeln!(p, "  (:domain {})", task.name);
    let mut init: Vec<&str> = task.init().iter().map(|&f| task.fluent_name(f)).collect();
    init.sort_unstable();
    let _ = writeln!(p, "  (:init");
    for n in init {
        let _ = writeln!(p, "    ({n})");
    }
    let _ = writeln!(p, "  )");
    let mut goal: Vec<&str> = task.goal().iter().map(|&f| task.fluent_name(f)).collect();
    goal.sort_unstable();
    let _ = writeln!(p, "  (:goal (and{}))", goal.iter().map(|g| format!(" ({g})")).collect::<String>());
    if costs {
        let _ = writeln!(p, "  (:metric minimize (total-cost))");
    }
    p.push_str(")\n");
    TaskPddl { domain: d, problem: p }
}
