//! Interview questions and their mapping to facts.

use serde::{Deserialize, Serialize};

use crate::engine::{parse_query, PredKey, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerKind {
    YesNo,
    Value,
}

/// A word or phrase in a question, explained in plain language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermDefinition {
    pub term: String,
    pub definition: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub kind: AnswerKind,
    pub text: String,
    #[serde(default)]
    pub terms: Vec<TermDefinition>,
    /// Fact asserted by a "yes", with `DS` standing for the dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fact: Option<String>,
    /// Placeholder key filled by a value answer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affirm_yes: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affirm_no: Option<String>,
    /// Owning domain; filled in when the bank is loaded.
    #[serde(default)]
    pub domain: String,
}

#[derive(Deserialize)]
struct Bank {
    #[serde(default)]
    question: Vec<Question>,
}

impl Question {
    /// Parses a question bank file.
    pub fn parse_bank(text: &str, domain: &str) -> Result<Vec<Question>, String> {
        let bank: Bank = toml::from_str(text).map_err(|e| e.to_string())?;
        let mut out = bank.question;
        for q in &mut out {
            q.domain = domain.to_string();
            match q.kind {
                AnswerKind::YesNo => {
                    let f = q.fact.as_deref().ok_or_else(|| format!("question `{}` has no fact", q.id))?;
                    pattern(f).map_err(|e| format!("question `{}`: {e}", q.id))?;
                }
                AnswerKind::Value => {
                    if q.key.is_none() {
                        return Err(format!("value question `{}` has no key", q.id));
                    }
                }
            }
        }
        Ok(out)
    }

    /// The fact a "yes" asserts about `dataset`.
    pub fn fact_for(&self, dataset: &str) -> Option<Term> {
        let q = pattern(self.fact.as_deref()?).ok()?;
        let ds = q.var_names.iter().position(|n| &**n == "DS");
        Some(substitute(&q.atom, ds, dataset))
    }

    /// Predicate of the mapped fact.
    pub fn fact_predicate(&self) -> Option<PredKey> {
        pattern(self.fact.as_deref()?).ok()?.atom.pred_key()
    }
}

fn pattern(src: &str) -> Result<crate::engine::Query, String> {
    let q = parse_query(src).map_err(|e| e.to_string())?;
    if q.var_names.iter().any(|n| &**n != "DS") {
        return Err(format!("fact pattern `{src}` may only use the variable DS"));
    }
    Ok(q)
}

fn substitute(t: &Term, ds: Option<usize>, dataset: &str) -> Term {
    match t {
        Term::Var(v) if Some(v.0 as usize) == ds => Term::atom(dataset),
        Term::Compound(f, args) => {
            Term::Compound(f.clone(), args.iter().map(|a| substitute(a, ds, dataset)).collect())
        }
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fact_pattern_is_instantiated() {
        let bank = "[[question]]\nid = \"q\"\nkind = \"yes_no\"\nfact = \"p(DS)\"\ntext = \"?\"\n";
        let qs = Question::parse_bank(bank, "d").unwrap();
        assert_eq!(qs[0].fact_for("ds1").unwrap().to_string(), "p(ds1)");
        assert_eq!(qs[0].domain, "d");
    }

    #[test]
    fn stray_variables_are_rejected() {
        let bank = "[[question]]\nid = \"q\"\nkind = \"yes_no\"\nfact = \"p(DS, X)\"\ntext = \"?\"\n";
        assert!(Question::parse_bank(bank, "d").is_err());
    }
}
