//! Actions, facts and domain packs, and the per-domain evaluation built on
//! the rule engine.

mod action;
mod audit;
mod evaluate;
mod facts;
mod module;

pub use action::{Action, ActionKind, ConditionSet};
pub use audit::{assignments, AUDIT_DATASET, detect_contradictions, detect_silence, Assignment, ContradictionFinding};
pub use evaluate::{evaluate, find_condition_sets, minimal_sets, Context, DomainVerdict, World, EVAL_DEPTH};
pub use facts::{FactBase, FactError};
pub use module::{prelude, Abducible, AuditSpec, ConditionDef, DomainModule, FactSource, NumericAxis};

use crate::engine::EngineError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DomainError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("domain `{domain}`: {message}")]
    Manifest { domain: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("domain `{domain}` both permits and denies {action}")]
    Contradiction { domain: String, action: String },
    #[error("`{0}` is not an abducible of any loaded domain")]
    UnknownAbducible(String),
    #[error("domain `{0}` is not loaded")]
    UnknownDomain(String),
}
