//! Per-domain verdicts and the bounded search for condition sets.

use std::collections::BTreeSet;
use std::sync::Arc;

use itertools::Itertools;
use serde::Serialize;

use super::{Action, ActionKind, ConditionSet, DomainError, DomainModule, FactBase};
use crate::engine::{PredKey, Program, Proof, Solver, Term};

/// Resolution depth used for every domain query.
pub const EVAL_DEPTH: u32 = 32;

/// Answer of one domain for one action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum DomainVerdict {
    /// Each condition set is minimal; `proofs[i]` proves `permitted` for
    /// `condition_sets[i]`.
    Permitted { condition_sets: Vec<ConditionSet>, proofs: Vec<Arc<Proof>> },
    Denied { proof: Arc<Proof> },
    Silent,
    OutOfScope,
}

impl DomainVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            DomainVerdict::Permitted { .. } => "permitted",
            DomainVerdict::Denied { .. } => "denied",
            DomainVerdict::Silent => "silent",
            DomainVerdict::OutOfScope => "out_of_scope",
        }
    }

    pub fn is_permitted(&self) -> bool {
        matches!(self, DomainVerdict::Permitted { .. })
    }

    pub fn condition_sets(&self) -> &[ConditionSet] {
        match self {
            DomainVerdict::Permitted { condition_sets, .. } => condition_sets,
            _ => &[],
        }
    }

    pub fn proofs(&self) -> Vec<&Arc<Proof>> {
        match self {
            DomainVerdict::Permitted { proofs, .. } => proofs.iter().collect(),
            DomainVerdict::Denied { proof } => vec![proof],
            _ => Vec::new(),
        }
    }
}

/// Loaded domains plus the repository's local rules, merged and stratified
/// once. Fact bases are added per evaluation with [`Context::world`].
#[derive(Debug, Clone)]
pub struct Context {
    domains: Vec<Arc<DomainModule>>,
    base: Program,
    abducibles: BTreeSet<PredKey>,
}

impl Context {
    pub fn new(domains: Vec<Arc<DomainModule>>, local: Option<&Program>) -> Result<Context, DomainError> {
        let mut parts: Vec<&Program> = vec![super::prelude()];
        parts.extend(domains.iter().map(|d| d.program()));
        parts.extend(local);
        let base = Program::merge(parts)?;
        let abducibles = domains.iter().flat_map(|d| d.abducibles().iter().map(|a| a.predicate.clone())).collect();
        Ok(Context { domains, base, abducibles })
    }

    /// A context holding one domain and no local rules.
    pub fn single(domain: &DomainModule) -> Result<Context, DomainError> {
        Context::new(vec![Arc::new(domain.clone())], None)
    }

    pub fn domains(&self) -> &[Arc<DomainModule>] {
        &self.domains
    }

    pub fn domain(&self, id: &str) -> Option<&DomainModule> {
        self.domains.iter().find(|d| d.id == id).map(|d| &**d)
    }

    pub fn program(&self) -> &Program {
        &self.base
    }

    /// Sorted union of the registries of all loaded domains for `kind`.
    pub fn registry_for(&self, kind: ActionKind) -> Vec<String> {
        let set: BTreeSet<String> = self.domains.iter().flat_map(|d| d.registry_for(kind)).collect();
        set.into_iter().collect()
    }

    /// The rules plus `facts`. Every asserted fact must belong to a declared
    /// abducible.
    pub fn world(&self, facts: &FactBase) -> Result<World<'_>, DomainError> {
        for key in facts.predicates() {
            if !self.abducibles.contains(&key) {
                return Err(DomainError::UnknownAbducible(key.to_string()));
            }
        }
        let program = self.base.with_facts(facts.evaluation_atoms(), "fact")?;
        Ok(World { ctx: self, program })
    }
}

/// A context with one fact base added.
pub struct World<'c> {
    ctx: &'c Context,
    program: Program,
}

fn domain_goal(pred: &str, domain: &str, action: Term, n: usize) -> Term {
    Term::compound(pred, vec![Term::atom(domain), action, Term::number(crate::engine::Fixed::from_int(n as i64))])
}

impl<'c> World<'c> {
    pub fn context(&self) -> &'c Context {
        self.ctx
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn solver(&self) -> Solver<'_> {
        Solver::new(&self.program, EVAL_DEPTH)
    }

    fn known(&self, domain: &str) -> Result<(), DomainError> {
        match self.ctx.domain(domain) {
            Some(_) => Ok(()),
            None => Err(DomainError::UnknownDomain(domain.into())),
        }
    }

    pub fn in_scope(&self, solver: &mut Solver<'_>, domain: &str, action: &Action) -> Result<Option<Arc<Proof>>, DomainError> {
        let goal = Term::compound("inScope", vec![Term::atom(domain), action.term_with(&ConditionSet::new())]);
        Ok(solver.prove(&goal)?)
    }

    /// Proof of `permitted(domain, action[CS := cs], n)`.
    pub fn permitted(
        &self,
        solver: &mut Solver<'_>,
        domain: &str,
        action: &Action,
        cs: &ConditionSet,
        n: usize,
    ) -> Result<Option<Arc<Proof>>, DomainError> {
        Ok(solver.prove(&domain_goal("permitted", domain, action.term_with(cs), n))?)
    }

    pub fn denied(
        &self,
        solver: &mut Solver<'_>,
        domain: &str,
        action: &Action,
        cs: &ConditionSet,
        n: usize,
    ) -> Result<Option<Arc<Proof>>, DomainError> {
        Ok(solver.prove(&domain_goal("denied", domain, action.term_with(cs), n))?)
    }

    /// Escalation reasons `R` with `escalate(domain, action, R)` provable.
    pub fn escalations(&self, solver: &mut Solver<'_>, domain: &str, action: &Action) -> Result<Vec<String>, DomainError> {
        let query = crate::engine::Query {
            atom: Term::compound(
                "escalate",
                vec![Term::atom(domain), action.term_with(&ConditionSet::new()), Term::Var(crate::engine::VarId(0))],
            ),
            var_names: vec!["R".into()],
        };
        let res = solver.solve(&query)?;
        Ok(res.solutions.iter().filter_map(|s| s.get("R").map(|t| t.to_string())).collect())
    }

    /// Minimal condition sets within `max_n` for which the domain permits the
    /// action, with their proofs.
    pub fn find_condition_sets(
        &self,
        domain: &str,
        action: &Action,
        max_n: usize,
    ) -> Result<Vec<(ConditionSet, Arc<Proof>)>, DomainError> {
        self.known(domain)?;
        let registry = self.ctx.domain(domain).map(|d| d.registry_for(action.kind)).unwrap_or_default();
        let mut solver = self.solver();
        minimal_sets(&registry, max_n, |cs| self.permitted(&mut solver, domain, action, cs, cs.len()))
    }

    /// The domain's verdict. With a known condition set the bound `n` is
    /// passed to the rules as is; otherwise the minimal sets within `n` are
    /// searched for.
    pub fn evaluate(&self, domain: &str, action: &Action, bound: usize) -> Result<DomainVerdict, DomainError> {
        self.known(domain)?;
        let mut solver = self.solver();
        if self.in_scope(&mut solver, domain, action)?.is_none() {
            return Ok(DomainVerdict::OutOfScope);
        }
        let contradiction = |cs: &ConditionSet| DomainError::Contradiction {
            domain: domain.into(),
            action: action.term_with(cs).to_string(),
        };
        if let Some(cs) = &action.conditions {
            let p = self.permitted(&mut solver, domain, action, cs, bound)?;
            let d = self.denied(&mut solver, domain, action, cs, bound)?;
            return match (p, d) {
                (Some(_), Some(_)) => Err(contradiction(cs)),
                (Some(p), None) => Ok(DomainVerdict::Permitted { condition_sets: vec![cs.clone()], proofs: vec![p] }),
                (None, Some(d)) => Ok(DomainVerdict::Denied { proof: d }),
                (None, None) => Ok(DomainVerdict::Silent),
            };
        }
        let found = self.find_condition_sets(domain, action, bound)?;
        if !found.is_empty() {
            for (cs, _) in &found {
                if self.denied(&mut solver, domain, action, cs, cs.len())?.is_some() {
                    return Err(contradiction(cs));
                }
            }
            let (condition_sets, proofs) = found.into_iter().unzip();
            return Ok(DomainVerdict::Permitted { condition_sets, proofs });
        }
        match self.denied(&mut solver, domain, action, &ConditionSet::new(), 0)? {
            Some(proof) => Ok(DomainVerdict::Denied { proof }),
            None => Ok(DomainVerdict::Silent),
        }
    }
}

/// Iterative deepening over subsets of `registry` (sorted), smallest first,
/// skipping supersets of sets already accepted. Results come out sorted by
/// size, then lexicographically.
pub fn minimal_sets<T, E>(
    registry: &[String],
    max_n: usize,
    mut accept: impl FnMut(&ConditionSet) -> Result<Option<T>, E>,
) -> Result<Vec<(ConditionSet, T)>, E> {
    let mut found: Vec<(ConditionSet, T)> = Vec::new();
    for k in 0..=max_n.min(registry.len()) {
        for combo in registry.iter().combinations(k) {
            let cs: ConditionSet = combo.into_iter().cloned().collect();
            if found.iter().any(|(f, _)| f.is_subset(&cs)) {
                continue;
            }
            if let Some(t) = accept(&cs)? {
                found.push((cs, t));
            }
        }
    }
    Ok(found)
}

/// Verdict of `domain` alone (no local rules) on `action` under `facts`.
pub fn evaluate(domain: &DomainModule, action: &Action, facts: &FactBase, bound: usize) -> Result<DomainVerdict, DomainError> {
    let ctx = Context::single(domain)?;
    ctx.world(facts)?.evaluate(&domain.id, action, bound)
}

/// Minimal condition sets of `domain` alone for `action`.
pub fn find_condition_sets(
    domain: &DomainModule,
    action: &Action,
    facts: &FactBase,
    max_n: usize,
) -> Result<Vec<ConditionSet>, DomainError> {
    let ctx = Context::single(domain)?;
    let found = ctx.world(facts)?.find_condition_sets(&domain.id, action, max_n)?;
    Ok(found.into_iter().map(|(cs, _)| cs).collect())
}
