//! Provenance records tying license terms back to answers and tool output.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::render::LicenseDocument;
use super::snippet::TermSnippet;
use crate::domain::{ActionKind, ConditionSet, FactBase};
use crate::engine::{Leaf, Proof, Term};
use crate::transform::Derivation;

/// A question and the answer given, verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub question_id: String,
    pub question: String,
    pub answer: String,
    /// Fact the question maps to, when it is a yes/no question.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fact: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum FactOrigin {
    Answer { question_id: String, answer: String },
    Tool { tool: String, input: String, output: String, affirmed_by: Vec<String> },
    /// Asserted directly in a fact base rather than through an interview.
    FactBase,
}

/// A fact the decision relied on; `holds` is false for facts whose absence
/// was used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactRecord {
    pub fact: String,
    pub holds: bool,
    pub origin: FactOrigin,
}

/// answer or tool fact -> rules -> condition -> term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainEntry {
    pub term: String,
    pub condition: String,
    pub domain: String,
    /// Rules from the permitting rule down to the one requiring the condition.
    pub rules: Vec<String>,
    pub facts: Vec<FactRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainProof {
    pub domain: String,
    pub proof: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub subject: String,
    pub dataset: String,
    pub action: ActionKind,
    pub policy: String,
    pub domain_versions: BTreeMap<String, String>,
    pub created_at: String,
    pub verdict: String,
    pub answers: Vec<AnswerRecord>,
    pub derivations: Vec<Derivation>,
    /// Every minimal condition set found; the license uses `chosen`.
    pub condition_sets: Vec<ConditionSet>,
    pub chosen: Option<ConditionSet>,
    pub proofs: Vec<DomainProof>,
    pub chain: Vec<ChainEntry>,
    pub affirmations: Vec<String>,
    /// SHA-256 over the record with this field empty, hex encoded.
    pub hash: String,
}

impl ProvenanceRecord {
    pub fn compute_hash(&self) -> String {
        let mut copy = self.clone();
        copy.hash.clear();
        let bytes = serde_json::to_vec(&copy).expect("provenance serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn verify(&self) -> bool {
        self.hash == self.compute_hash()
    }

    /// Term ids reachable through the chain, sorted and deduplicated.
    pub fn terms(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.chain.iter().map(|e| e.term.as_str()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Everything a provenance record is built from.
#[derive(Clone)]
pub struct ProvenanceInput<'a> {
    pub subject: &'a str,
    pub action: ActionKind,
    pub policy: &'a str,
    pub domain_versions: BTreeMap<String, String>,
    pub created_at: String,
    pub verdict: &'a str,
    pub answers: &'a [AnswerRecord],
    pub facts: &'a FactBase,
    pub condition_sets: &'a [ConditionSet],
    pub chosen: Option<&'a ConditionSet>,
    /// Proofs that each in-scope domain permits the action under `chosen`.
    pub proofs: &'a [(String, Arc<Proof>)],
    pub snippets: &'a [TermSnippet],
    pub abducibles: &'a dyn Fn(&Term) -> bool,
}

fn origin(atom: &Term, holds: bool, input: &ProvenanceInput<'_>) -> FactOrigin {
    let text = atom.to_string();
    if let Some(a) = input.answers.iter().find(|a| a.fact.as_deref() == Some(text.as_str())) {
        let answered_yes = a.answer == "yes";
        if answered_yes == holds {
            return FactOrigin::Answer { question_id: a.question_id.clone(), answer: a.answer.clone() };
        }
    }
    if atom.pred_key().is_some_and(|k| &*k.name == "derivedFrom") {
        let output = atom.args().first().and_then(Term::as_atom).unwrap_or_default();
        if let Some(d) = input.facts.derivations().iter().find(|d| d.output == output) {
            let affirmed_by = input
                .facts
                .tool_affirmations()
                .iter()
                .filter(|t| t.tool == d.tool)
                .map(|t| t.affirmed_by.clone())
                .collect();
            return FactOrigin::Tool { tool: d.tool.clone(), input: d.input.clone(), output: d.output.clone(), affirmed_by };
        }
    }
    FactOrigin::FactBase
}

fn fact_records(proof: &Proof, input: &ProvenanceInput<'_>) -> Vec<FactRecord> {
    let mut out: Vec<FactRecord> = Vec::new();
    for leaf in proof.leaves() {
        let (atom, holds) = match leaf {
            Leaf::Fact { atom, .. } => (atom, true),
            Leaf::Absent(atom) => (atom, false),
        };
        if !(input.abducibles)(atom) {
            continue;
        }
        let rec = FactRecord { fact: atom.to_string(), holds, origin: origin(atom, holds, input) };
        if !out.contains(&rec) {
            out.push(rec);
        }
    }
    out
}

/// Rule ids on the path from the root to the first node proving
/// `conditionsRequire(_, condition)`.
fn rules_to_condition(proof: &Proof, condition: &str) -> Option<Vec<String>> {
    fn walk(p: &Proof, condition: &str, path: &mut Vec<String>) -> bool {
        if let Proof::Clause { rule_id, atom, .. } = p {
            path.push(rule_id.clone());
            let hit = atom.pred_key().is_some_and(|k| &*k.name == "conditionsRequire" && k.arity == 2)
                && atom.args()[1].as_atom() == Some(condition);
            if hit {
                return true;
            }
        }
        if p.children().iter().any(|c| walk(c, condition, path)) {
            return true;
        }
        if matches!(p, Proof::Clause { .. }) {
            path.pop();
        }
        false
    }
    let mut path = Vec::new();
    walk(proof, condition, &mut path).then_some(path)
}

/// Builds and seals the record. Each term of `document` gets one chain entry
/// per domain whose proof requires the term's condition.
pub fn emit_provenance(input: &ProvenanceInput<'_>, document: Option<&LicenseDocument>) -> ProvenanceRecord {
    let mut chain = Vec::new();
    if let Some(doc) = document {
        for term_id in &doc.terms {
            let Some(snippet) = input.snippets.iter().find(|s| &s.id == term_id) else { continue };
            for (domain, proof) in input.proofs {
                if let Some(rules) = rules_to_condition(proof, &snippet.satisfies) {
                    chain.push(ChainEntry {
                        term: term_id.clone(),
                        condition: snippet.satisfies.clone(),
                        domain: domain.clone(),
                        rules,
                        facts: fact_records(proof, input),
                    });
                }
            }
        }
    }
    let mut record = ProvenanceRecord {
        subject: input.subject.to_string(),
        dataset: input.facts.dataset().unwrap_or_default().to_string(),
        action: input.action,
        policy: input.policy.to_string(),
        domain_versions: input.domain_versions.clone(),
        created_at: input.created_at.clone(),
        verdict: input.verdict.to_string(),
        answers: input.answers.to_vec(),
        derivations: input.facts.derivations().to_vec(),
        condition_sets: input.condition_sets.to_vec(),
        chosen: input.chosen.cloned(),
        proofs: input
            .proofs
            .iter()
            .map(|(domain, p)| DomainProof { domain: domain.clone(), proof: p.summary() })
            .collect(),
        chain,
        affirmations: document.map(|d| d.affirmations.clone()).unwrap_or_default(),
        hash: String::new(),
    };
    record.hash = record.compute_hash();
    record
}

/// A license together with the record that justifies it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LicenseBundle {
    pub document: LicenseDocument,
    pub provenance: ProvenanceRecord,
    /// Reserved for compliance documents the repository attaches.
    #[serde(default)]
    pub attachments: Vec<String>,
}

impl LicenseBundle {
    pub fn new(mut document: LicenseDocument, provenance: ProvenanceRecord) -> Self {
        document.provenance = Some(provenance.hash.clone());
        LicenseBundle { document, provenance, attachments: Vec::new() }
    }
}
