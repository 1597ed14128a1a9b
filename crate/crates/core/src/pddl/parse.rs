use std::collections::{BTreeMap, BTreeSet};

use super::sexpr::{read, Pos, Sexpr};
use super::{
    is_variable, ActionSchema, Atom, CondEffect, CostExpr, LiftedDomain, LiftedProblem, PddlError, TypedName, OBJECT_TYPE,
};
use crate::cost::parse_cost;

const INPUT_REQUIREMENTS: &[&str] = &[":strips", ":typing", ":action-costs", ":conditional-effects"];

const UNSUPPORTED_HEADS: &[&str] =
    &["not", "or", "imply", "forall", "exists", "=", "either", "assign", "decrease", "scale-up", "scale-down"];

type PResult<T> = Result<T, PddlError>;

fn syntax(pos: Pos, message: impl Into<String>) -> PddlError {
    PddlError::Syntax { line: pos.line, col: pos.col, message: message.into() }
}

fn unsupported(pos: Pos, construct: impl Into<String>) -> PddlError {
    PddlError::Unsupported { construct: construct.into(), line: pos.line, col: pos.col }
}

fn semantic(pos: Pos, message: impl Into<String>) -> PddlError {
    PddlError::Semantic { line: pos.line, col: pos.col, message: message.into() }
}

fn list(e: &Sexpr, what: &str) -> PResult<Vec<Sexpr>> {
    e.as_list().map(<[Sexpr]>::to_vec).ok_or_else(|| syntax(e.pos(), format!("expected list for {what}")))
}

fn symbol<'a>(e: &'a Sexpr, what: &str) -> PResult<&'a str> {
    e.as_symbol().ok_or_else(|| syntax(e.pos(), format!("expected symbol for {what}")))
}

/// `(define (<kind> <name>) ...)` -> (name, sections)
fn header(e: &Sexpr, kind: &str) -> PResult<(String, Vec<Sexpr>)> {
    let items = list(e, "define")?;
    if items.first().and_then(Sexpr::as_symbol) != Some("define") {
        return Err(syntax(e.pos(), "expected `(define ...)`"));
    }
    let head = items.get(1).ok_or_else(|| syntax(e.pos(), format!("missing ({kind} <name>)")))?;
    let h = list(head, kind)?;
    if h.len() != 2 || h[0].as_symbol() != Some(kind) {
        return Err(syntax(head.pos(), format!("expected ({kind} <name>)")));
    }
    Ok((symbol(&h[1], "name")?.to_string(), items[2..].to_vec()))
}

/// `a b - t c` style list. Untyped names get `object`.
fn typed_list(items: &[Sexpr]) -> PResult<Vec<(String, String, Pos)>> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let it = &items[i];
        match it {
            Sexpr::Symbol(s, _) if s == "-" => {
                let ty = items.get(i + 1).ok_or_else(|| syntax(it.pos(), "type expected after `-`"))?;
                if ty.head() == Some("either") {
                    return Err(unsupported(ty.pos(), "either"));
                }
                let ty = symbol(ty, "type")?;
                out.extend(pending.drain(..).map(|(n, p)| (n, ty.to_string(), p)));
                i += 2;
            }
            Sexpr::Symbol(s, p) => {
                pending.push((s.clone(), *p));
                i += 1;
            }
            Sexpr::List(_, p) => return Err(syntax(*p, "unexpected list in typed list")),
        }
    }
    out.extend(pending.into_iter().map(|(n, p)| (n, OBJECT_TYPE.to_string(), p)));
    Ok(out)
}

fn atom(e: &Sexpr) -> PResult<Atom> {
    let items = list(e, "atom")?;
    let head = items.first().ok_or_else(|| syntax(e.pos(), "empty atom"))?;
    let pred = symbol(head, "predicate")?;
    if UNSUPPORTED_HEADS.contains(&pred) {
        let what = match pred {
            "not" => "negative precondition",
            other => other,
        };
        return Err(unsupported(e.pos(), what));
    }
    let timed = matches!((pred, items.get(1).and_then(Sexpr::as_symbol)), ("at", Some("start" | "end")) | ("over", Some("all")));
    if timed {
        return Err(unsupported(e.pos(), "timed literal"));
    }
    let args = items[1..].iter().map(|a| symbol(a, "argument").map(str::to_string)).collect::<PResult<_>>()?;
    Ok(Atom { predicate: pred.to_string(), args })
}

/// Positive conjunction: `()`, `(and ...)` or a single atom.
fn conjunction(e: &Sexpr) -> PResult<Vec<(Atom, Pos)>> {
    let items = list(e, "condition")?;
    if items.is_empty() {
        return Ok(Vec::new());
    }
    if e.head() == Some("and") {
        let mut out = Vec::new();
        for it in &items[1..] {
            out.extend(conjunction(it)?);
        }
        return Ok(out);
    }
    Ok(vec![(atom(e)?, e.pos())])
}

#[derive(Default)]
struct EffectAcc {
    groups: Vec<CondEffect>,
    cost: Option<CostExpr>,
    atoms: Vec<(Atom, Pos)>,
}

fn effect(e: &Sexpr, acc: &mut EffectAcc, in_when: bool) -> PResult<()> {
    let items = list(e, "effect")?;
    if items.is_empty() {
        return Ok(());
    }
    match e.head() {
        Some("and") => {
            for it in &items[1..] {
                effect(it, acc, in_when)?;
            }
        }
        Some("not") => {
            if items.len() != 2 {
                return Err(syntax(e.pos(), "`not` takes one atom"));
            }
            let a = atom(&items[1])?;
            acc.atoms.push((a.clone(), items[1].pos()));
            acc.groups.push(CondEffect { del: [a].into(), ..Default::default() });
        }
        Some("when") => {
            if in_when {
                return Err(unsupported(e.pos(), "nested when"));
            }
            if items.len() != 3 {
                return Err(syntax(e.pos(), "`when` takes a condition and an effect"));
            }
            let cond = conjunction(&items[1])?;
            let mut inner = EffectAcc::default();
            effect(&items[2], &mut inner, true)?;
            if inner.cost.is_some() {
                return Err(unsupported(items[2].pos(), "conditional cost"));
            }
            let mut g = CondEffect::default();
            for (a, p) in &cond {
                acc.atoms.push((a.clone(), *p));
                g.condition.insert(a.clone());
            }
            for ig in inner.groups {
                g.add.extend(ig.add);
                g.del.extend(ig.del);
            }
            acc.atoms.extend(inner.atoms);
            acc.groups.push(g);
        }
        Some("increase") => {
            if items.len() != 3 || items[1].head() != Some("total-cost") {
                return Err(unsupported(e.pos(), "numeric fluents"));
            }
            if in_when {
                return Err(unsupported(e.pos(), "conditional cost"));
            }
            let c = match &items[2] {
                Sexpr::Symbol(s, p) => CostExpr::Const(parse_cost(s).ok_or_else(|| syntax(*p, format!("bad cost `{s}`")))?),
                other => CostExpr::Function(atom(other)?),
            };
            if acc.cost.is_some() {
                return Err(semantic(e.pos(), "multiple cost increases in one action"));
            }
            acc.cost = Some(c);
        }
        Some("forall") => return Err(unsupported(e.pos(), "forall")),
        Some(h @ ("assign" | "decrease" | "scale-up" | "scale-down")) => return Err(unsupported(e.pos(), h)),
        _ => {
            let a = atom(e)?;
            acc.atoms.push((a.clone(), e.pos()));
            acc.groups.push(CondEffect { add: [a].into(), ..Default::default() });
        }
    }
    Ok(())
}

fn check_requirements(items: &[Sexpr]) -> PResult<BTreeSet<String>> {
    let mut reqs = BTreeSet::new();
    for it in items {
        let r = symbol(it, "requirement")?;
        if !INPUT_REQUIREMENTS.contains(&r) {
            return Err(unsupported(it.pos(), r));
        }
        reqs.insert(r.to_string());
    }
    Ok(reqs)
}

pub fn parse_domain(text: &str) -> Result<LiftedDomain, PddlError> {
    let root = read(text)?;
    let (name, sections) = header(&root, "domain")?;
    let mut dom = LiftedDomain {
        name,
        requirements: BTreeSet::new(),
        types: BTreeMap::new(),
        constants: BTreeMap::new(),
        predicates: BTreeMap::new(),
        functions: BTreeMap::new(),
        actions: BTreeMap::new(),
    };
    let mut action_sections = Vec::new();
    for sec in &sections {
        let items = list(sec, "section")?;
        let key = items.first().map(|h| symbol(h, "section keyword")).transpose()?.unwrap_or("");
        let rest = &items[1.min(items.len())..];
        match key {
            ":requirements" => dom.requirements = check_requirements(rest)?,
            ":types" => {
                for (t, parent, p) in typed_list(rest)? {
                    if t == OBJECT_TYPE {
                        continue;
                    }
                    if dom.types.insert(t.clone(), parent).is_some() {
                        return Err(semantic(p, format!("duplicate type `{t}`")));
                    }
                }
            }
            ":constants" => {
                for (c, t, p) in typed_list(rest)? {
                    if dom.constants.insert(c.clone(), t).is_some() {
                        return Err(semantic(p, format!("duplicate constant `{c}`")));
                    }
                }
            }
            ":predicates" => {
                for it in rest {
                    let decl = list(it, "predicate declaration")?;
                    let pname = symbol(decl.first().ok_or_else(|| syntax(it.pos(), "empty predicate"))?, "predicate")?;
                    let params = typed_list(&decl[1..])?.into_iter().map(|(n, ty, _)| TypedName { name: n, ty }).collect();
                    if dom.predicates.insert(pname.to_string(), params).is_some() {
                        return Err(semantic(it.pos(), format!("duplicate predicate `{pname}`")));
                    }
                }
            }
            ":functions" => {
                let mut i = 0;
                while i < rest.len() {
                    let decl = list(&rest[i], "function declaration")?;
                    let fname = symbol(decl.first().ok_or_else(|| syntax(rest[i].pos(), "empty function"))?, "function")?;
                    let params = typed_list(&decl[1..])?.into_iter().map(|(n, ty, _)| TypedName { name: n, ty }).collect();
                    dom.functions.insert(fname.to_string(), params);
                    i += 1;
                    if rest.get(i).and_then(Sexpr::as_symbol) == Some("-") {
                        let ty = rest.get(i + 1).and_then(Sexpr::as_symbol).unwrap_or("");
                        if ty != "number" {
                            return Err(unsupported(rest[i].pos(), format!("function type `{ty}`")));
                        }
                        i += 2;
                    }
                }
            }
            ":action" => action_sections.push(sec.clone()),
            ":derived" | ":durative-action" | ":axiom" | ":process" | ":event" | ":constraints" => {
                return Err(unsupported(sec.pos(), key))
            }
            other => return Err(syntax(sec.pos(), format!("unknown domain section `{other}`"))),
        }
    }
    for t in dom.types.values().chain(dom.constants.values()) {
        if t != OBJECT_TYPE && !dom.types.contains_key(t) {
            return Err(semantic(root.pos(), format!("undeclared type `{t}`")));
        }
    }
    for sec in &action_sections {
        let schema = parse_action(&dom, sec)?;
        if dom.actions.contains_key(&schema.name) {
            return Err(semantic(sec.pos(), format!("duplicate action `{}`", schema.name)));
        }
        dom.actions.insert(schema.name.clone(), schema);
    }
    Ok(dom)
}

fn parse_action(dom: &LiftedDomain, sec: &Sexpr) -> PResult<ActionSchema> {
    let items = list(sec, "action")?;
    let name = symbol(items.get(1).ok_or_else(|| syntax(sec.pos(), "action name expected"))?, "action name")?.to_string();
    let mut params = Vec::new();
    let mut pre = Vec::new();
    let mut acc = EffectAcc::default();
    let mut i = 2;
    while i < items.len() {
        let key = symbol(&items[i], "action keyword")?;
        let val = items.get(i + 1).ok_or_else(|| syntax(items[i].pos(), format!("value expected after {key}")))?;
        match key {
            ":parameters" => {
                params = typed_list(&list(val, "parameters")?)?
                    .into_iter()
                    .map(|(n, ty, p)| {
                        if !is_variable(&n) {
                            return Err(syntax(p, format!("parameter `{n}` must start with `?`")));
                        }
                        Ok(TypedName { name: n, ty })
                    })
                    .collect::<PResult<Vec<_>>>()?;
            }
            ":precondition" => pre = conjunction(val)?,
            ":effect" => effect(val, &mut acc, false)?,
            other => return Err(syntax(items[i].pos(), format!("unknown action keyword `{other}`"))),
        }
        i += 2;
    }
    let vars: BTreeMap<&str, &str> = params.iter().map(|p| (p.name.as_str(), p.ty.as_str())).collect();
    if vars.len() != params.len() {
        return Err(semantic(sec.pos(), format!("duplicate parameter in `{name}`")));
    }
    for p in &params {
        if p.ty != OBJECT_TYPE && !dom.types.contains_key(&p.ty) {
            return Err(semantic(sec.pos(), format!("undeclared type `{}`", p.ty)));
        }
    }
    for (a, pos) in pre.iter().chain(acc.atoms.iter()) {
        check_lifted_atom(dom, &vars, a, *pos)?;
    }
    if let Some(CostExpr::Function(f)) = &acc.cost {
        let decl = dom
            .functions
            .get(&f.predicate)
            .ok_or_else(|| semantic(sec.pos(), format!("undeclared function `{}`", f.predicate)))?;
        if decl.len() != f.args.len() {
            return Err(semantic(sec.pos(), format!("arity mismatch for function `{}`", f.predicate)));
        }
        for a in &f.args {
            if is_variable(a) && !vars.contains_key(a.as_str()) {
                return Err(semantic(sec.pos(), format!("undeclared variable `{a}` in `{name}`")));
            }
        }
    }
    let mut schema = ActionSchema {
        name,
        parameters: params,
        precondition: pre.into_iter().map(|(a, _)| a).collect(),
        effects: acc.groups,
        cost: acc.cost.unwrap_or_default(),
    };
    schema.canonicalize();
    Ok(schema)
}

fn check_lifted_atom(dom: &LiftedDomain, vars: &BTreeMap<&str, &str>, a: &Atom, pos: Pos) -> PResult<()> {
    let decl =
        dom.predicates.get(&a.predicate).ok_or_else(|| semantic(pos, format!("undeclared predicate `{}`", a.predicate)))?;
    if decl.len() != a.args.len() {
        return Err(semantic(
            pos,
            format!("arity mismatch for `{}`: expected {}, got {}", a.predicate, decl.len(), a.args.len()),
        ));
    }
    for (arg, param) in a.args.iter().zip(decl) {
        let ty = if is_variable(arg) {
            *vars.get(arg.as_str()).ok_or_else(|| semantic(pos, format!("undeclared variable `{arg}`")))?
        } else {
            dom.constants.get(arg).map(String::as_str).ok_or_else(|| semantic(pos, format!("undeclared constant `{arg}`")))?
        };
        if !dom.is_subtype(ty, &param.ty) && !dom.is_subtype(&param.ty, ty) {
            return Err(semantic(pos, format!("type mismatch for `{arg}` in `{}`", a.predicate)));
        }
    }
    Ok(())
}

pub fn parse_problem(text: &str, dom: &LiftedDomain) -> Result<LiftedProblem, PddlError> {
    let root = read(text)?;
    let (name, sections) = header(&root, "problem")?;
    let mut prob = LiftedProblem {
        name,
        domain_name: String::new(),
        objects: BTreeMap::new(),
        init: BTreeSet::new(),
        goal: BTreeSet::new(),
        cost_table: BTreeMap::new(),
        minimize_total_cost: false,
    };
    let mut init_items: Vec<Sexpr> = Vec::new();
    let mut goal_atoms = Vec::new();
    for sec in &sections {
        let items = list(sec, "section")?;
        let key = items.first().map(|h| symbol(h, "section keyword")).transpose()?.unwrap_or("");
        let rest = &items[1.min(items.len())..];
        match key {
            ":domain" => {
                let d = symbol(rest.first().ok_or_else(|| syntax(sec.pos(), "domain name expected"))?, "domain")?;
                if d != dom.name {
                    return Err(semantic(sec.pos(), format!("problem is for domain `{d}`, not `{}`", dom.name)));
                }
                prob.domain_name = d.to_string();
            }
            ":requirements" => {
                check_requirements(rest)?;
            }
            ":objects" => {
                for (o, t, p) in typed_list(rest)? {
                    if t != OBJECT_TYPE && !dom.types.contains_key(&t) {
                        return Err(semantic(p, format!("undeclared type `{t}`")));
                    }
                    if prob.objects.insert(o.clone(), t).is_some() {
                        return Err(semantic(p, format!("duplicate object `{o}`")));
                    }
                }
            }
            ":init" => init_items = rest.to_vec(),
            ":goal" => {
                let g = rest.first().ok_or_else(|| syntax(sec.pos(), "goal expected"))?;
                goal_atoms = conjunction(g)?;
            }
            ":metric" => {
                let ok = rest.len() == 2 && rest[0].as_symbol() == Some("minimize") && rest[1].head() == Some("total-cost");
                if !ok {
                    return Err(unsupported(sec.pos(), "metric other than (minimize (total-cost))"));
                }
                prob.minimize_total_cost = true;
            }
            other => return Err(syntax(sec.pos(), format!("unknown problem section `{other}`"))),
        }
    }
    if prob.domain_name.is_empty() {
        return Err(semantic(root.pos(), "missing (:domain ...)"));
    }
    let objects: BTreeMap<String, String> =
        dom.constants.iter().chain(prob.objects.iter()).map(|(a, b)| (a.clone(), b.clone())).collect();
    for it in &init_items {
        if it.head() == Some("=") {
            let parts = list(it, "numeric init")?;
            if parts.len() != 3 {
                return Err(syntax(it.pos(), "expected (= (f args) value)"));
            }
            let f = atom(&parts[1])?;
            let decl = dom
                .functions
                .get(&f.predicate)
                .ok_or_else(|| semantic(it.pos(), format!("undeclared function `{}`", f.predicate)))?;
            if decl.len() != f.args.len() {
                return Err(semantic(it.pos(), format!("arity mismatch for function `{}`", f.predicate)));
            }
            let v = symbol(&parts[2], "value")?;
            let v = parse_cost(v).ok_or_else(|| syntax(parts[2].pos(), format!("bad number `{v}`")))?;
            prob.cost_table.insert(f, v);
            continue;
        }
        let a = atom(it)?;
        check_ground_atom(dom, &objects, &a, it.pos())?;
        prob.init.insert(a);
    }
    for (a, pos) in goal_atoms {
        check_ground_atom(dom, &objects, &a, pos)?;
        prob.goal.insert(a);
    }
    Ok(prob)
}

fn check_ground_atom(dom: &LiftedDomain, objects: &BTreeMap<String, String>, a: &Atom, pos: Pos) -> PResult<()> {
    let decl =
        dom.predicates.get(&a.predicate).ok_or_else(|| semantic(pos, format!("undeclared predicate `{}`", a.predicate)))?;
    if decl.len() != a.args.len() {
        return Err(semantic(
            pos,
            format!("arity mismatch for `{}`: expected {}, got {}", a.predicate, decl.len(), a.args.len()),
        ));
    }
    for (arg, param) in a.args.iter().zip(decl) {
        let ty = objects.get(arg).ok_or_else(|| semantic(pos, format!("undeclared object `{arg}`")))?;
        if !dom.is_subtype(ty, &param.ty) {
            return Err(semantic(pos, format!("object `{arg}` of type `{ty}` does not fit `{}`", param.ty)));
        }
    }
    Ok(())
}
