//! Repository policies that combine several domains into one decision.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{
    minimal_sets, Action, ConditionSet, Context, DomainError, DomainModule, DomainVerdict, FactBase,
};
use crate::engine::{PredKey, Program, Proof, Term};

/// What to do when an in-scope domain neither permits nor denies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SilentHandling {
    #[default]
    Escalate,
    Permit,
    Deny,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyFile {
    id: String,
    #[serde(default)]
    version: Option<String>,
    domains: Vec<String>,
    #[serde(default)]
    silent_handling: SilentHandling,
    #[serde(default)]
    local: String,
}

#[derive(Debug, Clone)]
pub struct RepositoryPolicy {
    pub id: String,
    pub version: String,
    pub domains: Vec<String>,
    pub silent_handling: SilentHandling,
    local_src: String,
    local: Program,
}

impl RepositoryPolicy {
    /// Reads a policy manifest.
    pub fn parse(text: &str) -> Result<RepositoryPolicy, DomainError> {
        let f: PolicyFile = toml::from_str(text)
            .map_err(|e| DomainError::Manifest { domain: "policy".into(), message: e.to_string() })?;
        let local = Program::parse_named(&f.local, &f.id)?;
        Ok(RepositoryPolicy {
            version: f.version.unwrap_or_else(|| "0.0.0".into()),
            domains: f.domains,
            silent_handling: f.silent_handling,
            local_src: f.local,
            local,
            id: f.id,
        })
    }

    pub fn local(&self) -> &Program {
        &self.local
    }

    pub fn local_source(&self) -> &str {
        &self.local_src
    }

    pub fn with_silent_handling(mut self, h: SilentHandling) -> Self {
        self.silent_handling = h;
        self
    }

    /// Builds the evaluation context from the domains this policy lists,
    /// taken from `available`.
    pub fn context(&self, available: &[Arc<DomainModule>]) -> Result<Context, DomainError> {
        let mut chosen = Vec::new();
        for id in &self.domains {
            let d = available
                .iter()
                .find(|d| &d.id == id)
                .ok_or_else(|| DomainError::UnknownDomain(id.clone()))?;
            chosen.push(d.clone());
        }
        Context::new(chosen, Some(&self.local))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Permitted { condition_sets: Vec<ConditionSet> },
    Denied,
    Escalate { reason: String },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Permitted { .. } => "permitted",
            Verdict::Denied => "denied",
            Verdict::Escalate { .. } => "escalate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComposedVerdict {
    pub verdict: Verdict,
    /// Verdict of every domain of the policy, in policy order.
    pub domains: Vec<(String, DomainVerdict)>,
}

impl ComposedVerdict {
    pub fn domain(&self, id: &str) -> Option<&DomainVerdict> {
        self.domains.iter().find(|(d, _)| d == id).map(|(_, v)| v)
    }
}

/// Combines the policy's domains: any in-scope denial denies; escalation
/// rules and silence (per the policy) escalate; otherwise the action is
/// permitted under the minimal condition sets that satisfy every in-scope
/// domain at once. Out-of-scope domains are ignored.
pub fn compose(
    policy: &RepositoryPolicy,
    ctx: &Context,
    action: &Action,
    facts: &FactBase,
    bound: usize,
) -> Result<ComposedVerdict, DomainError> {
    let world = ctx.world(facts)?;
    let mut domains = Vec::new();
    for id in &policy.domains {
        domains.push((id.clone(), world.evaluate(id, action, bound)?));
    }
    let verdict = |v| Ok(ComposedVerdict { verdict: v, domains: domains.clone() });

    if domains.iter().any(|(_, v)| matches!(v, DomainVerdict::Denied { .. })) {
        return verdict(Verdict::Denied);
    }

    let mut solver = world.solver();
    let mut reasons = Vec::new();
    for (id, v) in &domains {
        if matches!(v, DomainVerdict::OutOfScope) {
            continue;
        }
        for r in world.escalations(&mut solver, id, action)? {
            reasons.push(format!("{id}: {r}"));
        }
    }
    if !reasons.is_empty() {
        return verdict(Verdict::Escalate { reason: format!("escalate: {}", reasons.join(", ")) });
    }

    let silent: Vec<&str> =
        domains.iter().filter(|(_, v)| matches!(v, DomainVerdict::Silent)).map(|(d, _)| d.as_str()).collect();
    if !silent.is_empty() {
        match policy.silent_handling {
            SilentHandling::Escalate => {
                return verdict(Verdict::Escalate { reason: format!("silent: {}", silent.join(", ")) })
            }
            SilentHandling::Deny => return verdict(Verdict::Denied),
            SilentHandling::Permit => {}
        }
    }

    let policy_scope = Term::compound("inScope", vec![Term::atom(&policy.id), action.term_with(&ConditionSet::new())]);
    if policy.local.defines(&PredKey::new("inScope", 2)) && !solver.holds(&policy_scope)? {
        return verdict(Verdict::Escalate { reason: format!("out of scope: {}", policy.id) });
    }

    let permitting: Vec<&str> =
        domains.iter().filter(|(_, v)| v.is_permitted()).map(|(d, _)| d.as_str()).collect();
    if let Some(cs) = &action.conditions {
        return verdict(Verdict::Permitted { condition_sets: vec![cs.clone()] });
    }
    // A single permitting domain's own minimal sets are the answer: its rules
    // only mention conditions from its own registry.
    if let [only] = permitting.as_slice() {
        let sets = domains.iter().find(|(d, _)| d == only).map(|(_, v)| v.condition_sets().to_vec()).unwrap_or_default();
        return verdict(Verdict::Permitted { condition_sets: sets });
    }
    let registry = ctx.registry_for(action.kind);
    let sets = minimal_sets(&registry, bound, |cs| {
        for d in &permitting {
            if world.permitted(&mut solver, d, action, cs, cs.len())?.is_none() {
                return Ok::<_, DomainError>(None);
            }
        }
        Ok(Some(()))
    })?;
    if sets.is_empty() {
        return verdict(Verdict::Escalate { reason: format!("no common condition set: {}", permitting.join(", ")) });
    }
    verdict(Verdict::Permitted { condition_sets: sets.into_iter().map(|(cs, _)| cs).collect() })
}

/// Proofs that each permitting domain of `composed` permits `action` under
/// `cs`, in policy order.
pub fn permit_proofs(
    ctx: &Context,
    composed: &ComposedVerdict,
    action: &Action,
    facts: &FactBase,
    cs: &ConditionSet,
) -> Result<Vec<(String, Arc<Proof>)>, DomainError> {
    let world = ctx.world(facts)?;
    let mut solver = world.solver();
    let mut out = Vec::new();
    for (id, v) in &composed.domains {
        if !v.is_permitted() {
            continue;
        }
        if let Some(p) = world.permitted(&mut solver, id, action, cs, cs.len())? {
            out.push((id.clone(), p));
        }
    }
    Ok(out)
}
