//! License term snippets and their selection for a condition set.

use serde::{Deserialize, Serialize};

use crate::domain::ConditionSet;

/// A piece of license text that satisfies one condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermSnippet {
    pub id: String,
    pub satisfies: String,
    /// Template slot, e.g. `TERMS:PERMITTED USES`.
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grouping: Option<String>,
    /// The snippet used when the condition is required. Alternates may exist
    /// in a bank but are never selected.
    #[serde(default)]
    pub designated: bool,
    pub body: String,
}

#[derive(Deserialize)]
struct Bank {
    #[serde(default)]
    snippet: Vec<TermSnippet>,
}

impl TermSnippet {
    pub fn parse_bank(text: &str) -> Result<Vec<TermSnippet>, String> {
        let bank: Bank = toml::from_str(text).map_err(|e| e.to_string())?;
        Ok(bank.snippet)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SelectError {
    #[error("no designated snippet satisfies condition `{0}`")]
    MissingSnippet(String),
}

/// One designated snippet per condition, ordered by category, grouping, id.
pub fn select_terms<'a>(
    cs: &ConditionSet,
    banks: impl IntoIterator<Item = &'a TermSnippet> + Clone,
) -> Result<Vec<TermSnippet>, SelectError> {
    let mut out = Vec::with_capacity(cs.len());
    for c in cs.iter() {
        let s = banks
            .clone()
            .into_iter()
            .find(|s| s.designated && s.satisfies == c)
            .ok_or_else(|| SelectError::MissingSnippet(c.to_string()))?;
        out.push(s.clone());
    }
    out.sort_by(|a, b| (&a.category, &a.grouping, &a.id).cmp(&(&b.category, &b.grouping, &b.id)));
    Ok(out)
}
