//! Bottom-up evaluation of function-free programs.
//!
//! Strata are evaluated in order by naive iteration, so negated literals only
//! ever consult completed lower strata.

use rustc_hash::{FxHashMap as HashMap, FxHashSet as HashSet};

use super::program::Program;
use super::solve::Solver;
use super::term::{BodyItem, Builtin, Clause, Literal, PredKey, Term, VarId};
use super::EngineError;

/// Depth used when a program has to be answered top-down.
pub const DEFAULT_DEPTH: u32 = 64;

/// The set of ground atoms in a program's stratified least model.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LeastModel {
    relations: HashMap<PredKey, HashSet<Vec<Term>>>,
}

impl LeastModel {
    pub fn contains(&self, atom: &Term) -> bool {
        atom.pred_key()
            .and_then(|k| self.relations.get(&k))
            .is_some_and(|rel| rel.contains(atom.args()))
    }

    /// All atoms, sorted.
    pub fn atoms(&self) -> Vec<Term> {
        let mut out: Vec<Term> = self
            .relations
            .iter()
            .flat_map(|(k, rel)| {
                rel.iter().map(move |args| {
                    if args.is_empty() {
                        Term::Atom(k.name.clone())
                    } else {
                        Term::Compound(k.name.clone(), args.as_slice().into())
                    }
                })
            })
            .collect();
        out.sort();
        out
    }

    pub fn len(&self) -> usize {
        self.relations.values().map(HashSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A clause with disjunctions expanded away and positive literals first.
struct FlatRule<'a> {
    clause: &'a Clause,
    body: Vec<&'a BodyItem>,
}

fn expand(items: &[BodyItem]) -> Vec<Vec<&BodyItem>> {
    let mut bodies: Vec<Vec<&BodyItem>> = vec![Vec::new()];
    for item in items {
        match item {
            BodyItem::Builtin(Builtin::Disjunction { alternatives, .. }) => {
                let alts: Vec<Vec<&BodyItem>> = alternatives.iter().flat_map(|a| expand(a)).collect();
                bodies = bodies
                    .iter()
                    .flat_map(|b| alts.iter().map(move |a| b.iter().chain(a.iter()).copied().collect()))
                    .collect();
            }
            other => bodies.iter_mut().for_each(|b| b.push(other)),
        }
    }
    bodies
}

fn vars_of(t: &Term, out: &mut Vec<VarId>) {
    t.collect_vars(out);
}

fn is_safe(clause: &Clause, body: &[&BodyItem]) -> bool {
    let mut bound = Vec::new();
    for item in body {
        if let BodyItem::Literal(Literal { positive: true, atom, .. }) = item {
            vars_of(atom, &mut bound);
        }
    }
    let mut needed = Vec::new();
    vars_of(&clause.head, &mut needed);
    for item in body {
        item.for_each_term(&mut |t| vars_of(t, &mut needed));
    }
    needed.iter().all(|v| bound.contains(v))
}

/// Computes the least model, or `None` when the program has compound terms,
/// list builtins, or clauses that are not range-restricted.
pub fn least_model(program: &Program) -> Result<Option<LeastModel>, EngineError> {
    if !program.is_function_free() {
        return Ok(None);
    }
    let mut by_layer: Vec<Vec<FlatRule>> = Vec::new();
    for clause in program.clauses() {
        let layer = program.strata().layer(&clause.pred_key()).unwrap_or(0);
        if by_layer.len() <= layer {
            by_layer.resize_with(layer + 1, Vec::new);
        }
        for mut body in expand(&clause.body) {
            if !is_safe(clause, &body) {
                return Ok(None);
            }
            body.sort_by_key(|i| !matches!(i, BodyItem::Literal(Literal { positive: true, .. })));
            by_layer[layer].push(FlatRule { clause, body });
        }
    }

    let mut model = LeastModel::default();
    for rules in &by_layer {
        loop {
            let mut fresh: Vec<(PredKey, Vec<Term>)> = Vec::new();
            for rule in rules {
                let mut env = vec![None; rule.clause.var_count() as usize];
                derive(rule, 0, &mut env, &model, &mut fresh)?;
            }
            let mut changed = false;
            for (k, args) in fresh {
                changed |= model.relations.entry(k).or_default().insert(args);
            }
            if !changed {
                break;
            }
        }
    }
    Ok(Some(model))
}

fn subst(t: &Term, env: &[Option<Term>]) -> Option<Term> {
    match t {
        Term::Var(v) => env[v.0 as usize].clone(),
        other => Some(other.clone()),
    }
}

fn derive(
    rule: &FlatRule,
    at: usize,
    env: &mut Vec<Option<Term>>,
    model: &LeastModel,
    out: &mut Vec<(PredKey, Vec<Term>)>,
) -> Result<(), EngineError> {
    let Some(item) = rule.body.get(at) else {
        let head = &rule.clause.head;
        let args = head.args().iter().map(|a| subst(a, env).expect("safe clause")).collect();
        out.push((rule.clause.pred_key(), args));
        return Ok(());
    };
    match item {
        BodyItem::Literal(lit) if lit.positive => {
            let key = lit.atom.pred_key().expect("callable");
            let Some(rel) = model.relations.get(&key) else { return Ok(()) };
            for tuple in rel {
                let saved = env.clone();
                let ok = lit.atom.args().iter().zip(tuple).all(|(pat, val)| match pat {
                    Term::Var(v) => match &env[v.0 as usize] {
                        Some(bound) => bound == val,
                        None => {
                            env[v.0 as usize] = Some(val.clone());
                            true
                        }
                    },
                    other => other == val,
                });
                if ok {
                    derive(rule, at + 1, env, model, out)?;
                }
                *env = saved;
            }
            Ok(())
        }
        BodyItem::Literal(lit) => {
            let key = lit.atom.pred_key().expect("callable");
            let args: Vec<Term> = lit.atom.args().iter().map(|a| subst(a, env).expect("safe clause")).collect();
            let present = model.relations.get(&key).is_some_and(|r| r.contains(&args));
            if present {
                Ok(())
            } else {
                derive(rule, at + 1, env, model, out)
            }
        }
        BodyItem::Builtin(Builtin::LessEq(x, y)) => {
            let (x, y) = (subst(x, env).expect("safe clause"), subst(y, env).expect("safe clause"));
            match (&x, &y) {
                (Term::Number(p), Term::Number(q)) => {
                    if p <= q {
                        derive(rule, at + 1, env, model, out)
                    } else {
                        Ok(())
                    }
                }
                _ => Err(EngineError::Type(format!("`{x} <= {y}` compares non-numbers"))),
            }
        }
        BodyItem::Builtin(_) => unreachable!("excluded by is_function_free and expand"),
    }
}

/// True iff the ground `atom` is in the stratified least model of `program`.
/// Function-free programs are evaluated bottom-up; anything else is answered
/// by resolution with [`DEFAULT_DEPTH`].
pub fn ground_entails(program: &Program, atom: &Term) -> Result<bool, EngineError> {
    if !atom.is_ground() {
        return Err(EngineError::Type(format!("`{atom}` is not ground")));
    }
    match least_model(program)? {
        Some(model) => Ok(model.contains(atom)),
        None => Solver::new(program, DEFAULT_DEPTH).holds(atom),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::parser::parse_ground_term;

    fn entails(src: &str, atom: &str) -> bool {
        ground_entails(&Program::parse(src).unwrap(), &parse_ground_term(atom).unwrap()).unwrap()
    }

    #[test]
    fn facts() {
        assert!(entails("p(a).", "p(a)"));
        assert!(!entails("p(a).", "p(b)"));
    }

    #[test]
    fn transitive_closure() {
        let src = "edge(a,b).\nedge(b,c).\npath(X,Y) :- edge(X,Y).\npath(X,Y) :- edge(X,Z), path(Z,Y).";
        assert!(entails(src, "path(a,c)"));
        assert!(!entails(src, "path(c,a)"));
    }

    #[test]
    fn negation_uses_lower_strata() {
        let src = "n(a).\nn(b).\nbad(b).\ngood(X) :- n(X), \\+(bad(X)).\nany :- good(X).";
        assert!(entails(src, "good(a)"));
        assert!(!entails(src, "good(b)"));
        assert!(entails(src, "any"));
    }

    #[test]
    fn falls_back_for_lists() {
        let src = "ok(CS) :- member(x, CS).";
        assert!(least_model(&Program::parse(src).unwrap()).unwrap().is_none());
        assert!(entails(src, "ok([y, x])"));
    }
}
