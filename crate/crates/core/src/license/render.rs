//! Filling templates with selected terms and affirmations.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::placeholder::{bracket_re, fill, FillError};
use super::snippet::{select_terms, SelectError, TermSnippet};
use crate::domain::{ActionKind, ConditionSet};

pub const AFFIRMATIONS_SLOT: &str = "AFFIRMATIONS";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LicenseError {
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Fill(#[from] FillError),
    #[error("template has no slot for category `{0}`")]
    UnknownCategory(String),
    #[error("rendered text still contains `{0}`")]
    Leftover(String),
}

fn slot_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?m)^\[([A-Z][A-Z ]*(?::[A-Z][A-Z ]*)?)\][ \t]*$").expect("slot pattern"))
}

/// License text for one action kind, with `[CATEGORY]` slots on lines of
/// their own.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LicenseTemplate {
    pub kind: ActionKind,
    body: String,
    slots: Vec<String>,
}

impl LicenseTemplate {
    pub fn parse(kind: ActionKind, body: &str) -> LicenseTemplate {
        let slots = slot_re().captures_iter(body).map(|c| c[1].to_string()).collect();
        LicenseTemplate { kind, body: body.to_string(), slots }
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    /// Slot names in order of appearance.
    pub fn slots(&self) -> &[String] {
        &self.slots
    }

    pub fn has_slot(&self, category: &str) -> bool {
        self.slots.iter().any(|s| s == category)
    }
}

/// A selected term after placeholder filling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilledTerm {
    pub id: String,
    pub satisfies: String,
    pub category: String,
    pub text: String,
}

/// Fills every placeholder of the selected snippets from `values`.
pub fn fill_placeholders(
    snippets: &[TermSnippet],
    values: &BTreeMap<String, String>,
    asked_by: &dyn Fn(&str) -> Option<String>,
) -> Result<Vec<FilledTerm>, FillError> {
    snippets
        .iter()
        .map(|s| {
            Ok(FilledTerm {
                id: s.id.clone(),
                satisfies: s.satisfies.clone(),
                category: s.category.clone(),
                text: fill(&s.body, values, asked_by)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LicenseDocument {
    pub kind: ActionKind,
    pub text: String,
    pub conditions: ConditionSet,
    /// Ids of the included terms, in document order.
    pub terms: Vec<String>,
    pub affirmations: Vec<String>,
    pub supplied_values: BTreeMap<String, String>,
    /// Content hash of the provenance record, once emitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

fn numbered<'a>(items: impl IntoIterator<Item = &'a str>) -> String {
    let parts: Vec<String> = items.into_iter().enumerate().map(|(i, t)| format!("{}. {t}", i + 1)).collect();
    if parts.is_empty() {
        "None.".to_string()
    } else {
        parts.join("\n\n")
    }
}

/// Replaces each slot with its terms, numbered and separated by blank lines,
/// and the affirmations slot with the affirmations verbatim. Empty slots read
/// "None.".
pub fn render_license(
    template: &LicenseTemplate,
    terms: &[FilledTerm],
    affirmations: &[String],
    supplied_values: &BTreeMap<String, String>,
) -> Result<LicenseDocument, LicenseError> {
    if let Some(t) = terms.iter().find(|t| !template.has_slot(&t.category)) {
        return Err(LicenseError::UnknownCategory(t.category.clone()));
    }
    let mut order = Vec::new();
    let text = slot_re()
        .replace_all(template.body(), |caps: &regex::Captures<'_>| {
            let slot = &caps[1];
            if slot == AFFIRMATIONS_SLOT {
                return numbered(affirmations.iter().map(String::as_str));
            }
            let here: Vec<&FilledTerm> = terms.iter().filter(|t| t.category == slot).collect();
            order.extend(here.iter().map(|t| t.id.clone()));
            numbered(here.iter().map(|t| t.text.as_str()))
        })
        .into_owned();
    if let Some(m) = bracket_re().find(&text) {
        return Err(LicenseError::Leftover(m.as_str().to_string()));
    }
    Ok(LicenseDocument {
        kind: template.kind,
        text,
        conditions: terms.iter().map(|t| t.satisfies.clone()).collect(),
        terms: order,
        affirmations: affirmations.to_vec(),
        supplied_values: supplied_values.clone(),
        provenance: None,
    })
}

/// Selects, fills and renders in one step.
pub fn generate_license<'a>(
    template: &LicenseTemplate,
    cs: &ConditionSet,
    banks: impl IntoIterator<Item = &'a TermSnippet> + Clone,
    values: &BTreeMap<String, String>,
    affirmations: &[String],
    asked_by: &dyn Fn(&str) -> Option<String>,
) -> Result<LicenseDocument, LicenseError> {
    let snippets = select_terms(cs, banks)?;
    let filled = fill_placeholders(&snippets, values, asked_by)?;
    let mut doc = render_license(template, &filled, affirmations, values)?;
    // Conditions come from the request even when a snippet is shared.
    doc.conditions = cs.clone();
    Ok(doc)
}

/// The condition set a license is rendered for when several minimal sets
/// exist: the largest, ties broken lexicographically.
pub fn chosen_set(sets: &[ConditionSet]) -> Option<&ConditionSet> {
    sets.iter().min_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEMPLATE: &str = "Head\n\n[TERMS:DATA]\n\nMore\n\n[AFFIRMATIONS]\n";

    fn term(id: &str, category: &str, text: &str) -> FilledTerm {
        FilledTerm { id: id.into(), satisfies: id.into(), category: category.into(), text: text.into() }
    }

    #[test]
    fn slots_are_found_in_order() {
        let t = LicenseTemplate::parse(ActionKind::Release, TEMPLATE);
        assert_eq!(t.slots(), ["TERMS:DATA", "AFFIRMATIONS"]);
    }

    #[test]
    fn empty_sections_read_none() {
        let t = LicenseTemplate::parse(ActionKind::Release, TEMPLATE);
        let doc = render_license(&t, &[], &[], &BTreeMap::new()).unwrap();
        assert_eq!(doc.text, "Head\n\nNone.\n\nMore\n\nNone.\n");
    }

    #[test]
    fn terms_are_numbered_per_section() {
        let t = LicenseTemplate::parse(ActionKind::Release, TEMPLATE);
        let terms = [term("a", "TERMS:DATA", "First."), term("b", "TERMS:DATA", "Second.")];
        let doc = render_license(&t, &terms, &["I affirm x.".into()], &BTreeMap::new()).unwrap();
        assert!(doc.text.contains("1. First.\n\n2. Second."));
        assert!(doc.text.contains("1. I affirm x."));
        assert_eq!(doc.terms, ["a", "b"]);
    }

    #[test]
    fn unknown_category_is_an_error() {
        let t = LicenseTemplate::parse(ActionKind::Release, TEMPLATE);
        let err = render_license(&t, &[term("a", "TERMS:OTHER", "x")], &[], &BTreeMap::new()).unwrap_err();
        assert_eq!(err, LicenseError::UnknownCategory("TERMS:OTHER".into()));
    }

    #[test]
    fn largest_minimal_set_is_chosen() {
        let a: ConditionSet = ["x", "y"].into_iter().map(String::from).collect();
        let b: ConditionSet = ["z"].into_iter().map(String::from).collect();
        assert_eq!(chosen_set(&[b, a.clone()]), Some(&a));
    }
}
