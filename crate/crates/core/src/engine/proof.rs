//! Proof trees and an independent replay checker.

use std::sync::Arc;

use serde::Serialize;

use super::program::Program;
use super::solve::{rename, Bindings, Solver};
use super::term::{BodyItem, Builtin, Term, VarId};

/// One node of a derivation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Proof {
    /// `atom` was resolved against clause `rule_id`; `children` prove the
    /// clause body left to right.
    Clause { rule_id: String, fact: bool, atom: Term, children: Vec<Arc<Proof>> },
    /// `atom` is ground and has no proof.
    Naf { atom: Term },
    /// A builtin check that succeeded on these arguments.
    Builtin { name: String, args: Vec<Term> },
    /// Alternative `index` of a disjunction (or a parenthesised group).
    Branch { index: usize, children: Vec<Arc<Proof>> },
}

/// Proof leaves that stand for facts about the world.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Leaf<'a> {
    Fact { rule_id: &'a str, atom: &'a Term },
    Absent(&'a Term),
}

impl Proof {
    pub fn atom(&self) -> Option<&Term> {
        match self {
            Proof::Clause { atom, .. } | Proof::Naf { atom } => Some(atom),
            _ => None,
        }
    }

    pub fn children(&self) -> &[Arc<Proof>] {
        match self {
            Proof::Clause { children, .. } | Proof::Branch { children, .. } => children,
            _ => &[],
        }
    }

    /// Height of the tree counting clause resolutions only.
    pub fn height(&self) -> u32 {
        let below = self.children().iter().map(|c| c.height()).max().unwrap_or(0);
        match self {
            Proof::Clause { .. } => below + 1,
            _ => below,
        }
    }

    /// Fact leaves and negation-as-failure leaves, in proof order.
    pub fn leaves(&self) -> Vec<Leaf<'_>> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<Leaf<'a>>) {
        match self {
            Proof::Clause { rule_id, fact: true, atom, .. } => out.push(Leaf::Fact { rule_id, atom }),
            Proof::Naf { atom } => out.push(Leaf::Absent(atom)),
            _ => self.children().iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    /// Ids of every clause used, in pre-order, with repeats.
    pub fn rule_ids(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |p| {
            if let Proof::Clause { rule_id, .. } = p {
                out.push(rule_id.as_str());
            }
        });
        out
    }

    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Proof)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Nested `{rule, atom, children}` summary suitable for JSON payloads.
    pub fn summary(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Proof::Clause { rule_id, atom, children, .. } => json!({
                "rule": rule_id,
                "atom": atom.to_string(),
                "children": children.iter().map(|c| c.summary()).collect::<Vec<_>>(),
            }),
            Proof::Naf { atom } => json!({ "not": atom.to_string() }),
            Proof::Builtin { name, args } => json!({
                "builtin": name,
                "args": args.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
            }),
            Proof::Branch { index, children } => json!({
                "branch": index,
                "children": children.iter().map(|c| c.summary()).collect::<Vec<_>>(),
            }),
        }
    }

    pub(crate) fn map_terms(self: &Arc<Self>, f: &mut impl FnMut(&Term) -> Term) -> Arc<Proof> {
        Arc::new(match &**self {
            Proof::Clause { rule_id, fact, atom, children } => Proof::Clause {
                rule_id: rule_id.clone(),
                fact: *fact,
                atom: f(atom),
                children: children.iter().map(|c| c.map_terms(f)).collect(),
            },
            Proof::Naf { atom } => Proof::Naf { atom: f(atom) },
            Proof::Builtin { name, args } => Proof::Builtin { name: name.clone(), args: args.iter().map(&mut *f).collect() },
            Proof::Branch { index, children } => Proof::Branch {
                index: *index,
                children: children.iter().map(|c| c.map_terms(f)).collect(),
            },
        })
    }

    pub(crate) fn is_ground(&self) -> bool {
        match self {
            Proof::Clause { atom, children, .. } => atom.is_ground() && children.iter().all(|c| c.is_ground()),
            Proof::Naf { atom } => atom.is_ground(),
            Proof::Builtin { args, .. } => args.iter().all(Term::is_ground),
            Proof::Branch { children, .. } => children.iter().all(|c| c.is_ground()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("proof replay failed at `{at}`: {reason}")]
pub struct ReplayError {
    pub at: String,
    pub reason: String,
}

fn fail(at: impl ToString, reason: impl Into<String>) -> ReplayError {
    ReplayError { at: at.to_string(), reason: reason.into() }
}

/// Re-checks `proof` against `program`: every clause node must be an instance
/// of the named clause whose body matches the children, every fact leaf a
/// program fact, every builtin true, and every negated atom unprovable within
/// `depth_limit`.
pub fn replay(program: &Program, proof: &Proof, depth_limit: u32) -> Result<(), ReplayError> {
    let mut solver = Solver::new(program, depth_limit);
    check_node(program, proof, &mut solver)
}

fn check_node(program: &Program, proof: &Proof, solver: &mut Solver<'_>) -> Result<(), ReplayError> {
    match proof {
        Proof::Clause { rule_id, fact, atom, children } => {
            let clause = program.clause(rule_id).ok_or_else(|| fail(atom, format!("unknown clause `{rule_id}`")))?;
            if *fact != clause.is_fact() {
                return Err(fail(atom, "fact flag does not match clause"));
            }
            let mut b = Bindings::new(0);
            let off = offset_past(atom, proof);
            b.alloc(off);
            let coff = b.alloc(clause.var_count());
            if !b.unify(&rename(&clause.head, coff), atom) {
                return Err(fail(atom, format!("does not match head of `{rule_id}`")));
            }
            let rest = check_items(program, &clause.body, coff, children, &mut b, solver)?;
            if !rest.is_empty() {
                return Err(fail(atom, "more children than body items"));
            }
            Ok(())
        }
        Proof::Branch { .. } | Proof::Naf { .. } | Proof::Builtin { .. } => {
            Err(fail("<root>", "a proof must be rooted at a clause node"))
        }
    }
}

/// Smallest variable id above every variable occurring in the proof.
fn offset_past(atom: &Term, proof: &Proof) -> u32 {
    let mut max = 0u32;
    let mut note = |t: &Term| {
        let mut vs: Vec<VarId> = Vec::new();
        t.collect_vars(&mut vs);
        for v in vs {
            max = max.max(v.0 + 1);
        }
    };
    note(atom);
    proof.visit(&mut |p| match p {
        Proof::Clause { atom, .. } | Proof::Naf { atom } => note(atom),
        Proof::Builtin { args, .. } => args.iter().for_each(&mut note),
        Proof::Branch { .. } => {}
    });
    max
}

fn check_items<'c>(
    program: &Program,
    items: &[BodyItem],
    off: u32,
    mut children: &'c [Arc<Proof>],
    b: &mut Bindings,
    solver: &mut Solver<'_>,
) -> Result<&'c [Arc<Proof>], ReplayError> {
    for item in items {
        let (child, rest) = children.split_first().ok_or_else(|| fail(describe(item), "missing child proof"))?;
        children = rest;
        match (item, &**child) {
            (BodyItem::Literal(l), Proof::Clause { atom, .. }) if l.positive => {
                let goal = b.resolve_renamed(&l.atom, off);
                if !b.unify(&goal, atom) {
                    return Err(fail(atom, format!("does not match body literal `{goal}`")));
                }
                check_node(program, child, solver)?;
            }
            (BodyItem::Literal(l), Proof::Naf { atom }) if !l.positive => {
                let goal = b.resolve_renamed(&l.atom, off);
                if !b.unify(&goal, atom) || !atom.is_ground() {
                    return Err(fail(atom, "negated atom does not match"));
                }
                let held = solver.holds(atom).map_err(|e| fail(atom, e.to_string()))?;
                if held {
                    return Err(fail(atom, "negated atom is provable"));
                }
            }
            (BodyItem::Builtin(Builtin::Disjunction { alternatives, .. }), Proof::Branch { index, children: inner }) => {
                let alt = alternatives.get(*index).ok_or_else(|| fail(describe(item), "branch index out of range"))?;
                let left = check_items(program, alt, off, inner, b, solver)?;
                if !left.is_empty() {
                    return Err(fail(describe(item), "branch has extra children"));
                }
            }
            (BodyItem::Builtin(bi), Proof::Builtin { name, args }) => check_builtin(bi, name, args, off, b)?,
            _ => return Err(fail(describe(item), "child proof has the wrong shape")),
        }
    }
    Ok(children)
}

fn check_builtin(bi: &Builtin, name: &str, args: &[Term], off: u32, b: &mut Bindings) -> Result<(), ReplayError> {
    let (want, x, y) = match bi {
        Builtin::LessEq(x, y) => ("<=", x, y),
        Builtin::Member(x, y) => ("member", x, y),
        Builtin::Bounded(x, y) => ("bounded", x, y),
        Builtin::Disjunction { .. } => return Err(fail(name, "disjunction is not a leaf")),
    };
    if want != name || args.len() != 2 {
        return Err(fail(name, format!("expected builtin `{want}`")));
    }
    let (gx, gy) = (b.resolve_renamed(x, off), b.resolve_renamed(y, off));
    if !b.unify(&gx, &args[0]) || !b.unify(&gy, &args[1]) {
        return Err(fail(name, "builtin arguments do not match"));
    }
    let ok = match want {
        "<=" => matches!((&args[0], &args[1]), (Term::Number(p), Term::Number(q)) if p <= q),
        "member" => args[1].as_list().is_some_and(|l| l.contains(&&args[0])),
        _ => match (args[0].as_list(), &args[1]) {
            (Some(l), Term::Number(n)) => crate::engine::Fixed::from_int(l.len() as i64) <= *n,
            _ => false,
        },
    };
    if ok {
        Ok(())
    } else {
        Err(fail(name, "builtin does not hold"))
    }
}

fn describe(item: &BodyItem) -> String {
    match item {
        BodyItem::Literal(l) => l.atom.to_string(),
        BodyItem::Builtin(Builtin::LessEq(..)) => "<=".into(),
        BodyItem::Builtin(Builtin::Member(..)) => "member".into(),
        BodyItem::Builtin(Builtin::Bounded(..)) => "bounded".into(),
        BodyItem::Builtin(Builtin::Disjunction { .. }) => "disjunction".into(),
    }
}
