//! Domain packs: rules, abducibles, condition registry, questions and terms.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{ActionKind, DomainError};
use crate::engine::{parse_query, Clause, Fixed, PredKey, Program, Term};
use crate::interview::{AnswerKind, Question};
use crate::license::TermSnippet;

const PRELUDE_SRC: &str = include_str!("../../../../domains/prelude.rules");

/// Shared vocabulary (`conditionsRequire/2`, `actionDataset/2`,
/// `actionConditions/2`) loaded under every domain.
pub fn prelude() -> &'static Program {
    static PRELUDE: OnceLock<Program> = OnceLock::new();
    PRELUDE.get_or_init(|| Program::parse_named(PRELUDE_SRC, "prelude").expect("prelude parses"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactSource {
    Question,
    Tool,
}

/// A base predicate the rules cannot derive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Abducible {
    pub predicate: PredKey,
    pub source: FactSource,
    pub question: Option<String>,
    /// Ranges over true/false in audits.
    pub audit: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionDef {
    pub id: String,
    #[serde(default)]
    pub actions: Vec<ActionKind>,
    #[serde(default)]
    pub invented: bool,
}

/// A numeric fact varied over a finite grid during audits. `template` is a
/// fact with variables `DS` (the dataset) and `X` (the value).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumericAxis {
    pub name: String,
    pub template: String,
    pub values: Vec<Fixed>,
    #[serde(default)]
    pub absent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditSpec {
    pub action: ActionKind,
    #[serde(default)]
    pub numeric: Vec<NumericAxis>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    id: String,
    #[serde(default)]
    title: Option<String>,
    version: String,
    rules: String,
    #[serde(default)]
    questions: Option<String>,
    #[serde(default)]
    snippets: Option<String>,
    #[serde(default)]
    invented: Vec<String>,
    #[serde(default)]
    abducible: Vec<AbducibleDecl>,
    #[serde(default)]
    condition: Vec<ConditionDef>,
    audit: Option<AuditSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AbducibleDecl {
    predicate: String,
    source: FactSource,
    #[serde(default)]
    question: Option<String>,
    #[serde(default)]
    audit: bool,
}

#[derive(Debug, Clone)]
pub struct DomainModule {
    pub id: String,
    pub title: String,
    pub version: String,
    program: Program,
    abducibles: Vec<Abducible>,
    conditions: Vec<ConditionDef>,
    questions: Vec<Question>,
    snippets: Vec<TermSnippet>,
    invented: Vec<String>,
    audit: AuditSpec,
}

impl DomainModule {
    /// Loads a pack from its manifest text; `read` resolves the file names the
    /// manifest mentions.
    pub fn from_sources(
        manifest: &str,
        read: impl Fn(&str) -> std::io::Result<String>,
    ) -> Result<DomainModule, DomainError> {
        let m: Manifest = toml::from_str(manifest)
            .map_err(|e| DomainError::Manifest { domain: "?".into(), message: e.to_string() })?;
        let bad = |message: String| DomainError::Manifest { domain: m.id.clone(), message };
        let load = |name: &str| read(name).map_err(|e| bad(format!("cannot read `{name}`: {e}")));

        let program = Program::parse_named(&load(&m.rules)?, &m.id)?;
        let questions = match &m.questions {
            Some(q) => Question::parse_bank(&load(q)?, &m.id).map_err(bad)?,
            None => Vec::new(),
        };
        let snippets = match &m.snippets {
            Some(s) => TermSnippet::parse_bank(&load(s)?).map_err(bad)?,
            None => Vec::new(),
        };
        let mut abducibles = Vec::new();
        for a in &m.abducible {
            let predicate = parse_signature(&a.predicate).ok_or_else(|| bad(format!("bad predicate `{}`", a.predicate)))?;
            abducibles.push(Abducible { predicate, source: a.source, question: a.question.clone(), audit: a.audit });
        }
        let module = DomainModule {
            title: m.title.clone().unwrap_or_else(|| m.id.clone()),
            version: m.version.clone(),
            program,
            abducibles,
            conditions: m.condition,
            questions,
            snippets,
            invented: m.invented,
            audit: m.audit.unwrap_or(AuditSpec { action: ActionKind::Release, numeric: Vec::new() }),
            id: m.id,
        };
        module.validate()?;
        Ok(module)
    }

    /// Loads `manifest.toml` and its files from a directory.
    pub fn load_dir(dir: &Path) -> Result<DomainModule, DomainError> {
        let path = dir.join("manifest.toml");
        let manifest = std::fs::read_to_string(&path)
            .map_err(|e| DomainError::Io { path: path.display().to_string(), message: e.to_string() })?;
        DomainModule::from_sources(&manifest, |name| std::fs::read_to_string(dir.join(name)))
    }

    fn validate(&self) -> Result<(), DomainError> {
        let bad = |message: String| DomainError::Manifest { domain: self.id.clone(), message };

        // Stratified together with the shared vocabulary.
        Program::merge([prelude(), &self.program])?;

        let scope = self.scope_clauses();
        if scope.is_empty() {
            return Err(bad(format!("no `inScope({}, A)` rule", self.id)));
        }

        let registry: BTreeSet<&str> = self.conditions.iter().map(|c| c.id.as_str()).collect();
        if registry.len() != self.conditions.len() {
            return Err(bad("duplicate condition ids".into()));
        }
        for c in self.program.clauses() {
            for item in &c.body {
                let mut missing = None;
                item.for_each_literal(&mut |lit| {
                    if let Term::Compound(f, args) = &lit.atom {
                        if &**f == "conditionsRequire" && args.len() == 2 {
                            if let Some(cond) = args[1].as_atom() {
                                if !registry.contains(cond) {
                                    missing = Some(cond.to_string());
                                }
                            }
                        }
                    }
                });
                if let Some(cond) = missing {
                    return Err(bad(format!("rule `{}` requires unregistered condition `{cond}`", c.id)));
                }
            }
        }

        let mut qids = BTreeSet::new();
        for q in &self.questions {
            if !qids.insert(q.id.as_str()) {
                return Err(bad(format!("duplicate question id `{}`", q.id)));
            }
            if q.kind == AnswerKind::YesNo {
                let key = q.fact_predicate().ok_or_else(|| bad(format!("question `{}` has no fact", q.id)))?;
                if !self.is_abducible(&key) {
                    return Err(bad(format!("question `{}` asserts `{key}`, which is not abducible", q.id)));
                }
            }
        }
        for a in &self.abducibles {
            if a.source == FactSource::Tool {
                continue;
            }
            let qid = a.question.as_deref().ok_or_else(|| bad(format!("abducible `{}` names no question", a.predicate)))?;
            let q = self
                .question(qid)
                .ok_or_else(|| bad(format!("abducible `{}` names unknown question `{qid}`", a.predicate)))?;
            if q.fact_predicate().as_ref() != Some(&a.predicate) {
                return Err(bad(format!("question `{qid}` does not assert `{}`", a.predicate)));
            }
        }

        let mut designated: BTreeMap<&str, &str> = BTreeMap::new();
        for s in &self.snippets {
            if !registry.contains(s.satisfies.as_str()) {
                return Err(bad(format!("snippet `{}` satisfies unregistered condition `{}`", s.id, s.satisfies)));
            }
            if s.designated {
                if let Some(prev) = designated.insert(&s.satisfies, &s.id) {
                    return Err(bad(format!("condition `{}` has two designated snippets: {prev}, {}", s.satisfies, s.id)));
                }
            }
        }

        for id in &self.invented {
            if self.program.clause(id).is_none() {
                return Err(bad(format!("`invented` names unknown rule `{id}`")));
            }
        }

        for axis in &self.audit.numeric {
            let q = parse_query(&axis.template).map_err(|e| bad(format!("audit axis `{}`: {e}", axis.name)))?;
            if q.var_names.iter().any(|n| &**n != "DS" && &**n != "X") {
                return Err(bad(format!("audit axis `{}` may only use DS and X", axis.name)));
            }
        }
        Ok(())
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn abducibles(&self) -> &[Abducible] {
        &self.abducibles
    }

    pub fn is_abducible(&self, key: &PredKey) -> bool {
        self.abducibles.iter().any(|a| &a.predicate == key)
    }

    pub fn conditions(&self) -> &[ConditionDef] {
        &self.conditions
    }

    /// All registered condition ids, sorted.
    pub fn condition_registry(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.conditions.iter().map(|c| c.id.as_str()).collect();
        v.sort_unstable();
        v
    }

    /// Condition ids usable with `kind`, sorted. Conditions that list no
    /// actions apply to all of them.
    pub fn registry_for(&self, kind: ActionKind) -> Vec<String> {
        let mut v: Vec<String> = self
            .conditions
            .iter()
            .filter(|c| c.actions.is_empty() || c.actions.contains(&kind))
            .map(|c| c.id.clone())
            .collect();
        v.sort_unstable();
        v
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn question(&self, id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn snippets(&self) -> &[TermSnippet] {
        &self.snippets
    }

    /// Ids of rules that fill gaps in the legal source and need review.
    pub fn invented_rules(&self) -> &[String] {
        &self.invented
    }

    pub fn audit_spec(&self) -> &AuditSpec {
        &self.audit
    }

    /// The clauses defining `inScope(<id>, A)`.
    pub fn scope_clauses(&self) -> Vec<&Clause> {
        self.program
            .clauses_for(&PredKey::new("inScope", 2))
            .filter(|c| c.head.args()[0].as_atom() == Some(self.id.as_str()))
            .collect()
    }
}

fn parse_signature(s: &str) -> Option<PredKey> {
    let (name, arity) = s.rsplit_once('/')?;
    Some(PredKey::new(name.trim(), arity.trim().parse().ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(manifest: &str, rules: &str) -> Result<DomainModule, DomainError> {
        let rules = rules.to_string();
        DomainModule::from_sources(manifest, move |_| Ok(rules.clone()))
    }

    const HEAD: &str = "id = \"t\"\nversion = \"1\"\nrules = \"t.rules\"\n";

    #[test]
    fn unregistered_condition_is_rejected() {
        let rules = "inScope(t, A).\npermitted(t, A, N) :- actionConditions(A, CS), conditionsRequire(CS, c1).\n";
        let err = load(HEAD, rules).unwrap_err();
        assert!(err.to_string().contains("c1"), "{err}");
        let ok = format!("{HEAD}[[condition]]\nid = \"c1\"\n");
        assert!(load(&ok, rules).is_ok());
    }

    #[test]
    fn abducible_needs_question_or_tool() {
        let rules = "inScope(t, A).\n";
        let m = format!("{HEAD}[[abducible]]\npredicate = \"p/1\"\nsource = \"question\"\n");
        assert!(load(&m, rules).is_err());
        let m = format!("{HEAD}[[abducible]]\npredicate = \"p/1\"\nsource = \"tool\"\n");
        assert!(load(&m, rules).is_ok());
    }

    #[test]
    fn scope_rule_is_required() {
        assert!(load(HEAD, "p(a).\n").is_err());
    }

    #[test]
    fn negative_cycle_fails_load() {
        let err = load(HEAD, "inScope(t, A).\np(X) :- q(X), \\+(r(X)).\nr(X) :- q(X), \\+(p(X)).\n").unwrap_err();
        assert!(matches!(err, DomainError::Engine(_)), "{err}");
    }
}
