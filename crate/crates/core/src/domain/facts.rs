//! Ground facts about datasets, supplied by interviews and tools.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::engine::{parse_clauses, parse_ground_term, PredKey, Term};
use crate::transform::{self, Derivation, ParamValue, ToolAffirmation};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FactError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("fact `{0}` is not ground")]
    NotGround(String),
}

/// Facts about one or more datasets.
///
/// Derivations are kept as records; their `derivedFrom` facts are generated
/// when the base is evaluated.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FactBaseRepr", into = "FactBaseRepr")]
pub struct FactBase {
    dataset: Option<String>,
    facts: BTreeSet<Term>,
    pub supplied_values: BTreeMap<String, String>,
    derivations: Vec<Derivation>,
    affirmations: Vec<ToolAffirmation>,
}

#[derive(Serialize, Deserialize)]
struct FactBaseRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dataset: Option<String>,
    #[serde(default)]
    facts: Vec<String>,
    #[serde(default)]
    supplied_values: BTreeMap<String, String>,
    #[serde(default)]
    derivations: Vec<Derivation>,
    #[serde(default)]
    tool_affirmations: Vec<ToolAffirmation>,
}

impl TryFrom<FactBaseRepr> for FactBase {
    type Error = String;

    fn try_from(r: FactBaseRepr) -> Result<Self, Self::Error> {
        let mut fb = FactBase { dataset: r.dataset, supplied_values: r.supplied_values, ..FactBase::default() };
        for f in r.facts {
            let t = parse_ground_term(&f).map_err(|e| e.to_string())?;
            fb.insert(t).map_err(|e| e.to_string())?;
        }
        fb.derivations = r.derivations;
        fb.affirmations = r.tool_affirmations;
        Ok(fb)
    }
}

impl From<FactBase> for FactBaseRepr {
    fn from(fb: FactBase) -> Self {
        FactBaseRepr {
            dataset: fb.dataset,
            facts: fb.facts.iter().map(Term::to_string).collect(),
            supplied_values: fb.supplied_values,
            derivations: fb.derivations,
            tool_affirmations: fb.affirmations,
        }
    }
}

impl FactBase {
    pub fn new() -> Self {
        FactBase::default()
    }

    pub fn for_dataset(dataset: &str) -> Self {
        FactBase { dataset: Some(dataset.into()), ..FactBase::default() }
    }

    /// The dataset these facts are mainly about, if declared.
    pub fn dataset(&self) -> Option<&str> {
        self.dataset.as_deref()
    }

    pub fn set_dataset(&mut self, dataset: &str) {
        self.dataset = Some(dataset.into());
    }

    pub fn insert(&mut self, fact: Term) -> Result<bool, FactError> {
        if !fact.is_ground() || fact.pred_key().is_none() {
            return Err(FactError::NotGround(fact.to_string()));
        }
        Ok(self.facts.insert(fact))
    }

    /// Builder form of [`FactBase::insert`] for literal fact text.
    ///
    /// Panics on malformed text; meant for fixtures.
    pub fn with(mut self, fact: &str) -> Self {
        let t = parse_ground_term(fact).unwrap_or_else(|e| panic!("bad fact `{fact}`: {e}"));
        self.insert(t).unwrap_or_else(|e| panic!("{e}"));
        self
    }

    pub fn remove(&mut self, fact: &Term) -> bool {
        self.facts.remove(fact)
    }

    pub fn contains(&self, fact: &Term) -> bool {
        self.facts.contains(fact)
    }

    /// Asserted facts, excluding those generated from derivations.
    pub fn facts(&self) -> impl Iterator<Item = &Term> {
        self.facts.iter()
    }

    pub fn set_value(&mut self, key: &str, value: &str) {
        self.supplied_values.insert(key.into(), value.into());
    }

    pub fn value(&self, key: &str) -> Option<&str> {
        self.supplied_values.get(key).map(String::as_str)
    }

    pub fn derivations(&self) -> &[Derivation] {
        &self.derivations
    }

    pub fn tool_affirmations(&self) -> &[ToolAffirmation] {
        &self.affirmations
    }

    pub(crate) fn push_derivation(&mut self, d: Derivation) {
        self.derivations.push(d);
    }

    pub fn affirm_tool(&mut self, a: ToolAffirmation) {
        self.affirmations.retain(|e| !(e.tool == a.tool && e.condition == a.condition));
        self.affirmations.push(a);
    }

    /// Every atom the rules see: asserted facts plus derivation facts with
    /// lineage budgets.
    pub fn evaluation_atoms(&self) -> Vec<Term> {
        let mut out: Vec<Term> = self.facts.iter().cloned().collect();
        for t in transform::evaluation_facts(self) {
            if !out.contains(&t) {
                out.push(t);
            }
        }
        out
    }

    /// Predicates of the asserted facts.
    pub fn predicates(&self) -> BTreeSet<PredKey> {
        self.facts.iter().filter_map(Term::pred_key).collect()
    }

    /// Reads the text format:
    ///
    /// ```text
    /// % comment
    /// @dataset ds1
    /// ferpa_datasetInScope(ds1).
    /// @value dataUser:supplied:FERPA:studyPurpose = improve instruction
    /// @derivation ds2 <- ds1 differentialPrivacy totalBudget=0.05
    /// @affirm psiTool differentialPrivacy by=repository at=2024-01-01T00:00:00Z
    /// ```
    pub fn parse(text: &str) -> Result<FactBase, FactError> {
        let mut fb = FactBase::new();
        let mut rules = String::new();
        let mut pending = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let Some(directive) = line.strip_prefix('@') else {
                rules.push_str(raw);
                rules.push('\n');
                continue;
            };
            rules.push('\n');
            let err = |message: String| FactError::Parse { line: i + 1, message };
            let (word, rest) = directive.split_once(char::is_whitespace).unwrap_or((directive, ""));
            let rest = rest.trim();
            match word {
                "dataset" if !rest.is_empty() => fb.dataset = Some(rest.to_string()),
                "value" => {
                    let (k, v) = rest.split_once('=').ok_or_else(|| err("expected `@value key = text`".into()))?;
                    fb.set_value(k.trim(), v.trim());
                }
                "derivation" => pending.push(parse_derivation(rest).map_err(err)?),
                "affirm" => fb.affirm_tool(parse_affirmation(rest).map_err(err)?),
                _ => return Err(err(format!("unknown directive `@{word}`"))),
            }
        }
        let clauses = parse_clauses(&rules, "facts").map_err(|e| match e {
            crate::engine::EngineError::Syntax { line, message, .. } => FactError::Parse { line, message },
            other => FactError::Parse { line: 0, message: other.to_string() },
        })?;
        for c in clauses {
            if !c.is_fact() {
                return Err(FactError::NotGround(c.head.display_with(&c.var_names).to_string()));
            }
            fb.insert(c.head)?;
        }
        for d in pending {
            fb = transform::register_derivation(&fb, d, &[])
                .map_err(|e| FactError::Parse { line: 0, message: e.to_string() })?;
        }
        Ok(fb)
    }

    /// Writes the text format read by [`FactBase::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(ds) = &self.dataset {
            let _ = writeln!(out, "@dataset {ds}");
        }
        for f in &self.facts {
            let _ = writeln!(out, "{f}.");
        }
        for (k, v) in &self.supplied_values {
            let _ = writeln!(out, "@value {k} = {v}");
        }
        for a in &self.affirmations {
            let _ = writeln!(out, "@affirm {} {} by={} at={}", a.tool, a.condition, a.affirmed_by, a.timestamp.to_rfc3339());
        }
        for d in &self.derivations {
            let _ = writeln!(out, "@derivation {d}");
        }
        out
    }
}

fn parse_derivation(rest: &str) -> Result<Derivation, String> {
    let usage = || "expected `@derivation OUT <- IN TOOL key=value ...`".to_string();
    let mut words = rest.split_whitespace();
    let output = words.next().ok_or_else(usage)?;
    if words.next() != Some("<-") {
        return Err(usage());
    }
    let input = words.next().ok_or_else(usage)?;
    let tool = words.next().ok_or_else(usage)?;
    let mut d = Derivation::new(output, input, tool);
    for w in words {
        let (k, v) = w.split_once('=').ok_or_else(usage)?;
        d = d.param(k, ParamValue::parse(v));
    }
    Ok(d)
}

fn parse_affirmation(rest: &str) -> Result<ToolAffirmation, String> {
    let usage = || "expected `@affirm TOOL CONDITION by=ACTOR [at=TIMESTAMP]`".to_string();
    let mut words = rest.split_whitespace();
    let tool = words.next().ok_or_else(usage)?;
    let condition = words.next().ok_or_else(usage)?;
    let mut affirmed_by = None;
    let mut timestamp = DateTime::<Utc>::UNIX_EPOCH;
    for w in words {
        match w.split_once('=') {
            Some(("by", v)) => affirmed_by = Some(v.to_string()),
            Some(("at", v)) => {
                timestamp = DateTime::parse_from_rfc3339(v).map_err(|e| e.to_string())?.with_timezone(&Utc)
            }
            _ => return Err(usage()),
        }
    }
    Ok(ToolAffirmation {
        tool: tool.into(),
        condition: condition.into(),
        affirmed_by: affirmed_by.ok_or_else(usage)?,
        timestamp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "% sample\n@dataset ds2\nferpa_datasetInScope(ds2).\n@value k:supplied:x = some text\n\
@affirm psiTool differentialPrivacy by=repository\n@derivation ds2 <- ds1 psiTool totalBudget=0.05\n";

    #[test]
    fn text_round_trip() {
        let fb = FactBase::parse(SAMPLE).unwrap();
        assert_eq!(fb.dataset(), Some("ds2"));
        assert_eq!(fb.value("k:supplied:x"), Some("some text"));
        assert_eq!(fb.derivations().len(), 1);
        assert_eq!(FactBase::parse(&fb.to_text()).unwrap(), fb);
    }

    #[test]
    fn json_round_trip() {
        let fb = FactBase::parse(SAMPLE).unwrap();
        let json = serde_json::to_string(&fb).unwrap();
        assert_eq!(serde_json::from_str::<FactBase>(&json).unwrap(), fb);
    }

    #[test]
    fn rules_are_rejected() {
        assert!(matches!(FactBase::parse("p(X) :- q(X).\n"), Err(FactError::NotGround(_))));
    }

    #[test]
    fn evaluation_atoms_include_aliases() {
        let fb = FactBase::parse(SAMPLE).unwrap();
        let atoms: Vec<String> = fb.evaluation_atoms().iter().map(|t| t.to_string()).collect();
        assert!(atoms.contains(&"derivedFrom(ds2, ds1, differentialPrivacy([[totalBudget, 0.05]]))".to_string()));
    }
}
