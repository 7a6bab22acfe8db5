//! Dataset derivations through transformation tools, and the privacy budget
//! they consume.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::domain::FactBase;
use crate::engine::{Fixed, Term};

/// Tool name whose derivations spend a differential privacy budget.
pub const DIFFERENTIAL_PRIVACY: &str = "differentialPrivacy";
pub const TOTAL_BUDGET: &str = "totalBudget";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(Fixed),
    Text(String),
}

impl ParamValue {
    /// Numbers when the text parses as one, otherwise text.
    pub fn parse(text: &str) -> ParamValue {
        match text.parse() {
            Ok(n) => ParamValue::Number(n),
            Err(_) => ParamValue::Text(text.to_string()),
        }
    }

    fn to_term(&self) -> Term {
        match self {
            ParamValue::Number(n) => Term::number(*n),
            ParamValue::Text(t) => Term::atom(t),
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Number(n) => write!(f, "{n}"),
            ParamValue::Text(t) => f.write_str(t),
        }
    }
}

/// `output` was produced from `input` by running `tool` with `params`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub output: String,
    pub input: String,
    pub tool: String,
    #[serde(default)]
    pub params: Vec<(String, ParamValue)>,
}

impl Derivation {
    pub fn new(output: &str, input: &str, tool: &str) -> Self {
        Derivation { output: output.into(), input: input.into(), tool: tool.into(), params: Vec::new() }
    }

    pub fn param(mut self, key: &str, value: ParamValue) -> Self {
        self.params.push((key.into(), value));
        self
    }

    pub fn budget(&self) -> Option<Fixed> {
        self.params.iter().find_map(|(k, v)| match v {
            ParamValue::Number(n) if k == TOTAL_BUDGET => Some(*n),
            _ => None,
        })
    }

    /// `derivedFrom(output, input, tool(Params))` under the given tool name,
    /// with `budget` replacing the recorded total budget when given.
    pub(crate) fn fact_as(&self, tool: &str, budget: Option<Fixed>) -> Term {
        let params = self.params.iter().map(|(k, v)| {
            let value = match budget {
                Some(b) if k == TOTAL_BUDGET => Term::number(b),
                _ => v.to_term(),
            };
            Term::list([Term::atom(k), value])
        });
        Term::compound(
            "derivedFrom",
            vec![
                Term::atom(&self.output),
                Term::atom(&self.input),
                Term::compound(tool, vec![Term::list(params.collect::<Vec<_>>())]),
            ],
        )
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <- {} {}", self.output, self.input, self.tool)?;
        for (k, v) in &self.params {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// The repository owner's statement that `tool` satisfies the transformation
/// condition `condition` (for example that a PSI tool is differentially
/// private).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolAffirmation {
    pub tool: String,
    pub condition: String,
    pub affirmed_by: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransformError {
    #[error("deriving `{output}` from `{input}` would make the derivation graph cyclic")]
    Cycle { output: String, input: String },
    #[error("`{tool}` derivation is missing parameter `{param}`")]
    MissingParam { tool: String, param: String },
    #[error("`{tool}` derivation needs a positive `{param}`")]
    NonPositive { tool: String, param: String },
    #[error("dataset `{0}` already has a recorded derivation")]
    DuplicateOutput(String),
}

/// Records `d` and `affirmations` in a copy of `facts`.
///
/// A later affirmation for the same (tool, condition) replaces the earlier one.
pub fn register_derivation(
    facts: &FactBase,
    d: Derivation,
    affirmations: &[ToolAffirmation],
) -> Result<FactBase, TransformError> {
    let mut next = facts.clone();
    for a in affirmations {
        next.affirm_tool(a.clone());
    }
    if d.output == d.input || lineage(facts, &d.input).iter().any(|ds| *ds == d.output) {
        return Err(TransformError::Cycle { output: d.output, input: d.input });
    }
    if facts.derivations().iter().any(|e| e.output == d.output) {
        return Err(TransformError::DuplicateOutput(d.output));
    }
    if is_dp(&next, &d.tool) {
        match d.budget() {
            None => {
                return Err(TransformError::MissingParam { tool: d.tool, param: TOTAL_BUDGET.into() });
            }
            Some(b) if !b.is_positive() => {
                return Err(TransformError::NonPositive { tool: d.tool, param: TOTAL_BUDGET.into() });
            }
            Some(_) => {}
        }
    }
    next.push_derivation(d);
    Ok(next)
}

/// Sum of the budgets of every differentially private derivation in the
/// lineage of `dataset` (all datasets sharing its root source), or `None`
/// when the lineage has no such derivation.
pub fn total_budget(dataset: &str, facts: &FactBase) -> Option<Fixed> {
    let root = root_of(facts, dataset);
    let mut total: Option<Fixed> = None;
    for d in facts.derivations() {
        if !is_dp(facts, &d.tool) || root_of(facts, &d.output) != root {
            continue;
        }
        let b = d.budget().unwrap_or(Fixed::ZERO);
        total = Some(total.unwrap_or(Fixed::ZERO).checked_add(b).unwrap_or(Fixed::from_micros(i64::MAX)));
    }
    total
}

/// Every tool name a derivation by `tool` counts as: the tool itself plus each
/// affirmed condition.
pub fn tool_aliases<'a>(facts: &'a FactBase, tool: &'a str) -> Vec<&'a str> {
    let mut out = vec![tool];
    for a in facts.tool_affirmations() {
        if a.tool == tool && !out.contains(&a.condition.as_str()) {
            out.push(&a.condition);
        }
    }
    out
}

/// The recorded `derivedFrom` facts, one per derivation and tool alias.
pub fn derivation_facts(facts: &FactBase) -> Vec<Term> {
    derivation_terms(facts, false)
}

/// As [`derivation_facts`], but with each differentially private
/// derivation's budget replaced by the lineage total, which is what the
/// threshold rules must compare.
pub fn evaluation_facts(facts: &FactBase) -> Vec<Term> {
    derivation_terms(facts, true)
}

fn derivation_terms(facts: &FactBase, totals: bool) -> Vec<Term> {
    let mut out = Vec::new();
    let mut cache: BTreeMap<&str, Option<Fixed>> = BTreeMap::new();
    for d in facts.derivations() {
        let budget = if totals && is_dp(facts, &d.tool) {
            *cache.entry(d.output.as_str()).or_insert_with(|| total_budget(&d.output, facts))
        } else {
            None
        };
        for tool in tool_aliases(facts, &d.tool) {
            out.push(d.fact_as(tool, budget));
        }
    }
    out
}

fn is_dp(facts: &FactBase, tool: &str) -> bool {
    tool_aliases(facts, tool).contains(&DIFFERENTIAL_PRIVACY)
}

/// `dataset` followed by its ancestors.
fn lineage<'a>(facts: &'a FactBase, dataset: &'a str) -> Vec<&'a str> {
    let mut out = vec![dataset];
    let mut cur = dataset;
    while let Some(d) = facts.derivations().iter().find(|d| d.output == cur) {
        if out.contains(&d.input.as_str()) {
            break;
        }
        out.push(&d.input);
        cur = &d.input;
    }
    out
}

fn root_of<'a>(facts: &'a FactBase, dataset: &'a str) -> &'a str {
    lineage(facts, dataset).last().copied().unwrap_or(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dp(out: &str, input: &str, eps: &str) -> Derivation {
        Derivation::new(out, input, DIFFERENTIAL_PRIVACY).param(TOTAL_BUDGET, ParamValue::parse(eps))
    }

    #[test]
    fn records_fact_in_rule_syntax() {
        let fb = register_derivation(&FactBase::new(), dp("d_out", "d_in", "0.05"), &[]).unwrap();
        let facts: Vec<String> = derivation_facts(&fb).iter().map(|t| t.to_string()).collect();
        assert_eq!(facts, ["derivedFrom(d_out, d_in, differentialPrivacy([[totalBudget, 0.05]]))"]);
    }

    #[test]
    fn self_derivation_is_a_cycle() {
        let err = register_derivation(&FactBase::new(), Derivation::new("d", "d", "anyTool"), &[]).unwrap_err();
        assert!(matches!(err, TransformError::Cycle { .. }));
    }

    #[test]
    fn longer_cycles_are_rejected() {
        let fb = register_derivation(&FactBase::new(), Derivation::new("b", "a", "t"), &[]).unwrap();
        let err = register_derivation(&fb, Derivation::new("a", "b", "t"), &[]).unwrap_err();
        assert!(matches!(err, TransformError::Cycle { .. }));
    }

    #[test]
    fn dp_needs_positive_budget() {
        let missing = register_derivation(&FactBase::new(), Derivation::new("o", "i", DIFFERENTIAL_PRIVACY), &[]);
        assert!(matches!(missing, Err(TransformError::MissingParam { .. })));
        let zero = register_derivation(&FactBase::new(), dp("o", "i", "0"), &[]);
        assert!(matches!(zero, Err(TransformError::NonPositive { .. })));
    }

    #[test]
    fn sibling_budgets_add_up() {
        let fb = register_derivation(&FactBase::new(), dp("a", "src", "0.05"), &[]).unwrap();
        let fb = register_derivation(&fb, dp("b", "src", "0.04"), &[]).unwrap();
        assert_eq!(total_budget("a", &fb), Some("0.09".parse().unwrap()));
        assert_eq!(total_budget("src", &fb), Some("0.09".parse().unwrap()));
        assert_eq!(total_budget("other", &fb), None);
    }

    #[test]
    fn affirmed_tool_gets_both_facts() {
        let aff = ToolAffirmation {
            tool: "psiTool".into(),
            condition: DIFFERENTIAL_PRIVACY.into(),
            affirmed_by: "repository".into(),
            timestamp: DateTime::UNIX_EPOCH,
        };
        let d = Derivation::new("o", "i", "psiTool").param(TOTAL_BUDGET, ParamValue::parse("0.08"));
        let fb = register_derivation(&FactBase::new(), d, &[aff]).unwrap();
        let facts: Vec<String> = derivation_facts(&fb).iter().map(|t| t.to_string()).collect();
        assert_eq!(
            facts,
            [
                "derivedFrom(o, i, psiTool([[totalBudget, 0.08]]))",
                "derivedFrom(o, i, differentialPrivacy([[totalBudget, 0.08]]))"
            ]
        );
        assert_eq!(total_budget("o", &fb), Some("0.08".parse().unwrap()));
    }
}
