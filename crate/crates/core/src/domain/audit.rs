//! Exhaustive contradiction and silence audits over a finite universe of
//! fact assignments for one symbolic dataset.

use std::fmt;
use std::sync::Arc;

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use super::evaluate::minimal_sets;
use super::{Action, ConditionSet, Context, DomainError, DomainModule, DomainVerdict, FactBase};
use crate::engine::{parse_query, Fixed, Proof, Term};

/// Dataset name used by audits.
pub const AUDIT_DATASET: &str = "ds";

/// One point of the audit universe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Assignment {
    /// Truth value of each audited unary abducible, in manifest order.
    pub booleans: Vec<(String, bool)>,
    /// Value of each numeric axis; `None` means the fact is absent.
    pub numeric: Vec<(String, Option<Fixed>)>,
    #[serde(skip)]
    facts: FactBase,
}

impl Assignment {
    pub fn facts(&self) -> &FactBase {
        &self.facts
    }

    pub fn get(&self, predicate: &str) -> Option<bool> {
        self.booleans.iter().find(|(p, _)| p == predicate).map(|(_, v)| *v)
    }

    pub fn value(&self, axis: &str) -> Option<Option<Fixed>> {
        self.numeric.iter().find(|(n, _)| n == axis).map(|(_, v)| *v)
    }

    fn key(&self) -> (Vec<bool>, Vec<Option<Fixed>>) {
        (self.booleans.iter().map(|b| b.1).collect(), self.numeric.iter().map(|n| n.1).collect())
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        let mut first = true;
        let mut sep = |f: &mut fmt::Formatter<'_>| {
            if !std::mem::take(&mut first) {
                f.write_str(", ")?;
            }
            Ok::<_, fmt::Error>(())
        };
        for (p, v) in &self.booleans {
            sep(f)?;
            if !v {
                f.write_str("¬")?;
            }
            f.write_str(p)?;
        }
        for (n, v) in &self.numeric {
            sep(f)?;
            match v {
                Some(x) => write!(f, "{n}={x}")?,
                None => write!(f, "{n}=absent")?,
            }
        }
        f.write_str("}")
    }
}

/// The domain's audit universe: every audited unary abducible true or false,
/// times every numeric grid value (plus "absent" where declared).
pub fn assignments(domain: &DomainModule) -> Result<Vec<Assignment>, DomainError> {
    let preds: Vec<String> = domain
        .abducibles()
        .iter()
        .filter(|a| a.audit && a.predicate.arity == 1)
        .map(|a| a.predicate.name.to_string())
        .collect();
    let spec = domain.audit_spec();
    let mut axes = Vec::new();
    for axis in &spec.numeric {
        let q = parse_query(&axis.template)?;
        let mut values: Vec<Option<Fixed>> = axis.values.iter().copied().map(Some).collect();
        if axis.absent {
            values.push(None);
        }
        axes.push((axis.name.clone(), q, values));
    }
    let numeric_grid: Vec<Vec<Option<Fixed>>> = if axes.is_empty() {
        vec![Vec::new()]
    } else {
        axes.iter().map(|(_, _, v)| v.clone()).multi_cartesian_product().collect()
    };

    let mut out = Vec::new();
    for bits in 0u64..(1u64 << preds.len()) {
        for point in &numeric_grid {
            let booleans: Vec<(String, bool)> =
                preds.iter().enumerate().map(|(i, p)| (p.clone(), bits & (1 << i) != 0)).collect();
            let mut facts = FactBase::for_dataset(AUDIT_DATASET);
            for (p, v) in &booleans {
                if *v {
                    facts.insert(Term::compound(p, vec![Term::atom(AUDIT_DATASET)])).expect("ground");
                }
            }
            let mut numeric = Vec::new();
            for ((name, q, _), value) in axes.iter().zip(point) {
                if let Some(x) = value {
                    let fact = instantiate(&q.atom, &q.var_names, *x);
                    facts.insert(fact).map_err(|e| DomainError::Manifest {
                        domain: domain.id.clone(),
                        message: e.to_string(),
                    })?;
                }
                numeric.push((name.clone(), *value));
            }
            out.push(Assignment { booleans, numeric, facts });
        }
    }
    out.sort_by_key(Assignment::key);
    Ok(out)
}

fn instantiate(t: &Term, names: &[crate::engine::Symbol], x: Fixed) -> Term {
    match t {
        Term::Var(v) => match names.get(v.0 as usize).map(|n| &**n) {
            Some("X") => Term::number(x),
            _ => Term::atom(AUDIT_DATASET),
        },
        Term::Compound(f, args) => Term::Compound(f.clone(), args.iter().map(|a| instantiate(a, names, x)).collect()),
        other => other.clone(),
    }
}

/// An assignment under which some condition set is both permitted and denied.
#[derive(Debug, Clone, Serialize)]
pub struct ContradictionFinding {
    pub assignment: Assignment,
    pub conditions: ConditionSet,
    pub permitted: Arc<Proof>,
    pub denied: Arc<Proof>,
}

fn audit_action(template: &Action) -> Action {
    Action { dataset: AUDIT_DATASET.into(), conditions: None, ..template.clone() }
}

/// Assignments of `domain`'s audit universe under which some condition set
/// within `bound` is both permitted and denied. The first such set (smallest,
/// then lexicographic) is reported with both proofs.
pub fn detect_contradictions(
    ctx: &Context,
    domain: &str,
    template: &Action,
    bound: usize,
) -> Result<Vec<ContradictionFinding>, DomainError> {
    let module = ctx.domain(domain).ok_or_else(|| DomainError::UnknownDomain(domain.into()))?;
    let action = audit_action(template);
    let registry = module.registry_for(action.kind);
    let found: Result<Vec<Option<ContradictionFinding>>, DomainError> = assignments(module)?
        .into_par_iter()
        .map(|assignment| {
            let world = ctx.world(assignment.facts())?;
            let mut solver = world.solver();
            let mut hit = None;
            // Stops at the first contradictory set: any later set is a
            // superset candidate of no interest once one is known.
            minimal_sets(&registry, bound, |cs| {
                if hit.is_some() {
                    return Ok::<_, DomainError>(None);
                }
                let Some(d) = world.denied(&mut solver, domain, &action, cs, bound)? else {
                    return Ok(None);
                };
                if let Some(p) = world.permitted(&mut solver, domain, &action, cs, bound)? {
                    hit = Some((cs.clone(), p, d));
                    return Ok(Some(()));
                }
                Ok(None)
            })?;
            Ok(hit.map(|(conditions, permitted, denied)| ContradictionFinding {
                assignment,
                conditions,
                permitted,
                denied,
            }))
        })
        .collect();
    Ok(found?.into_iter().flatten().collect())
}

/// Assignments under which `domain` is in scope but neither permits the
/// action for any condition set within `bound` nor denies it.
pub fn detect_silence(
    ctx: &Context,
    domain: &str,
    template: &Action,
    bound: usize,
) -> Result<Vec<Assignment>, DomainError> {
    let module = ctx.domain(domain).ok_or_else(|| DomainError::UnknownDomain(domain.into()))?;
    let action = audit_action(template);
    let found: Result<Vec<Option<Assignment>>, DomainError> = assignments(module)?
        .into_par_iter()
        .map(|assignment| {
            let world = ctx.world(assignment.facts())?;
            match world.evaluate(domain, &action, bound) {
                Ok(DomainVerdict::Silent) => Ok(Some(assignment)),
                Ok(_) | Err(DomainError::Contradiction { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    Ok(found?.into_iter().flatten().collect())
}
