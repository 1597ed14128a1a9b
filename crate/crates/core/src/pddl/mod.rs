//! PDDL front end for the `:strips :typing :action-costs` subset, plus
//! positive-condition `when` effects. Output additionally uses negative and
//! implication preconditions for compiled tasks.

mod parse;
pub mod sexpr;
mod write;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::Cost;

pub use parse::{parse_domain, parse_problem};
pub use write::{serialize_task, write_domain, write_problem, TaskPddl};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PddlError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },

    #[error("unsupported PDDL feature `{construct}` at {line}:{col}")]
    Unsupported { construct: String, line: usize, col: usize },

    #[error("{message} (at {line}:{col})")]
    Semantic { line: usize, col: usize, message: String },
}

pub const OBJECT_TYPE: &str = "object";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

/// A predicate applied to constants or `?variables`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Atom { predicate: predicate.into(), args: args.into_iter().map(Into::into).collect() }
    }

    /// `clear_p2_p3` for `(clear p2 p3)`.
    pub fn ground_name(&self) -> String {
        ground_name(&self.predicate, &self.args)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

pub fn ground_name(head: &str, args: &[String]) -> String {
    let mut s = head.to_string();
    for a in args {
        s.push('_');
        s.push_str(a);
    }
    s
}

pub fn is_variable(term: &str) -> bool {
    term.starts_with('?')
}

/// One effect group: when every `condition` atom holds, apply `del` then `add`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CondEffect {
    pub condition: BTreeSet<Atom>,
    pub add: BTreeSet<Atom>,
    pub del: BTreeSet<Atom>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostExpr {
    Const(Cost),
    /// Numeric function term whose value comes from the problem's `:init`.
    Function(Atom),
}

impl Default for CostExpr {
    fn default() -> Self {
        CostExpr::Const(Cost::from_integer(1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSchema {
    pub name: String,
    pub parameters: Vec<TypedName>,
    pub precondition: BTreeSet<Atom>,
    /// `effects[0]` is the unconditional group; the rest are conditional and
    /// sorted.
    pub effects: Vec<CondEffect>,
    pub cost: CostExpr,
}

impl ActionSchema {
    pub fn unconditional(&self) -> &CondEffect {
        &self.effects[0]
    }

    pub fn conditional(&self) -> &[CondEffect] {
        &self.effects[1..]
    }

    pub(crate) fn canonicalize(&mut self) {
        let mut uncond = CondEffect::default();
        let mut cond: BTreeMap<BTreeSet<Atom>, CondEffect> = BTreeMap::new();
        for e in self.effects.drain(..) {
            if e.condition.is_empty() {
                uncond.add.extend(e.add);
                uncond.del.extend(e.del);
            } else {
                let slot = cond
                    .entry(e.condition.clone())
                    .or_insert_with(|| CondEffect { condition: e.condition.clone(), ..Default::default() });
                slot.add.extend(e.add);
                slot.del.extend(e.del);
            }
        }
        self.effects.push(uncond);
        self.effects.extend(cond.into_values());
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftedDomain {
    pub name: String,
    pub requirements: BTreeSet<String>,
    /// type -> parent type
    pub types: BTreeMap<String, String>,
    pub constants: BTreeMap<String, String>,
    pub predicates: BTreeMap<String, Vec<TypedName>>,
    pub functions: BTreeMap<String, Vec<TypedName>>,
    pub actions: BTreeMap<String, ActionSchema>,
}

impl LiftedDomain {
    /// True if `ty` equals `ancestor` or inherits from it.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        if ancestor == OBJECT_TYPE {
            return true;
        }
        let mut cur = ty;
        for _ in 0..=self.types.len() {
            if cur == ancestor {
                return true;
            }
            match self.types.get(cur) {
                Some(parent) => cur = parent,
                None => return false,
            }
        }
        false
    }

    pub fn has_conditional_effects(&self) -> bool {
        self.actions.values().any(|a| a.effects.len() > 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftedProblem {
    pub name: String,
    pub domain_name: String,
    pub objects: BTreeMap<String, String>,
    pub init: BTreeSet<Atom>,
    pub goal: BTreeSet<Atom>,
    /// Values of numeric function terms used as action costs.
    pub cost_table: BTreeMap<Atom, Cost>,
    pub minimize_total_cost: bool,
}

impl LiftedProblem {
    /// Declared objects merged with the domain's constants.
    pub fn all_objects<'a>(&'a self, dom: &'a LiftedDomain) -> BTreeMap<&'a str, &'a str> {
        dom.constants.iter().chain(self.objects.iter()).map(|(o, t)| (o.as_str(), t.as_str())).collect()
    }
}
