//! The FERPA pack and its exhaustive decision table.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{assignments, Action, ActionKind, Assignment, Context, DomainError, DomainVerdict};
pub use crate::packs::build_ferpa_module;
use crate::packs::ferpa_only_policy;

/// FERPA with the local facts of the FERPA-only policy (budget threshold
/// and tool aliases), which the differential privacy rule needs.
pub fn context() -> Context {
    let policy = ferpa_only_policy();
    Context::new(vec![Arc::new(build_ferpa_module())], Some(policy.local())).expect("shipped FERPA context builds")
}

#[derive(Debug, Clone, Serialize)]
pub struct DecisionRow {
    pub assignment: Assignment,
    pub verdict: DomainVerdict,
}

/// Verdict of FERPA on a release of one dataset for every point of the
/// pack's audit universe (five booleans times the epsilon grid), in a fixed
/// order.
pub fn ferpa_decision_table(bound: usize) -> Result<Vec<DecisionRow>, DomainError> {
    decision_table(&context(), ActionKind::Release, bound)
}

/// As [`ferpa_decision_table`] for any action kind and context.
pub fn decision_table(ctx: &Context, kind: ActionKind, bound: usize) -> Result<Vec<DecisionRow>, DomainError> {
    let module = ctx.domain("ferpa").ok_or_else(|| DomainError::UnknownDomain("ferpa".into()))?;
    assignments(module)?
        .into_par_iter()
        .map(|assignment| {
            let action = Action::template(kind, crate::domain::AUDIT_DATASET);
            let verdict = ctx.world(assignment.facts())?.evaluate("ferpa", &action, bound)?;
            Ok(DecisionRow { assignment, verdict })
        })
        .collect()
}
