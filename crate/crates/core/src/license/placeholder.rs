//! Placeholders of the form `[role:supplied:domain:field]` inside term text.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Role {
    DataUser,
    DataOwner,
    Repository,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::DataUser => "dataUser",
            Role::DataOwner => "dataOwner",
            Role::Repository => "repository",
        }
    }
}

/// A value the license needs from one of the parties. `domain` is `None` for
/// general fields such as `[dataOwner:supplied:dataDescription]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Placeholder {
    pub role: Role,
    pub domain: Option<String>,
    pub field: String,
}

impl Placeholder {
    /// The key used for supplied values, identical to the bracketed text
    /// without brackets.
    pub fn key(&self) -> String {
        match &self.domain {
            Some(d) => format!("{}:supplied:{d}:{}", self.role.as_str(), self.field),
            None => format!("{}:supplied:{}", self.role.as_str(), self.field),
        }
    }

    pub fn parse_key(key: &str) -> Option<Placeholder> {
        let text = format!("[{key}]");
        let caps = placeholder_re().captures(&text)?;
        (caps.get(0)?.as_str().len() == text.len()).then(|| from_caps(&caps))
    }
}

impl fmt::Display for Placeholder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.key())
    }
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\[(dataUser|dataOwner|repository):supplied:(?:([A-Za-z][A-Za-z0-9_]*):)?([A-Za-z][A-Za-z0-9_]*)\]")
            .expect("placeholder pattern")
    })
}

/// Matches anything that looks like a placeholder or template slot, filled or
/// not; used to check rendered text for leftovers.
pub fn bracket_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\[(?:[A-Za-z]+:supplied:[^\]\s]+|[A-Z][A-Z ]*(?::[A-Z][A-Z ]*)?)\]").expect("bracket pattern")
    })
}

fn from_caps(caps: &regex::Captures<'_>) -> Placeholder {
    let role = match &caps[1] {
        "dataUser" => Role::DataUser,
        "dataOwner" => Role::DataOwner,
        _ => Role::Repository,
    };
    Placeholder { role, domain: caps.get(2).map(|m| m.as_str().to_string()), field: caps[3].to_string() }
}

/// Placeholders of `text` in order of appearance, repeats included.
pub fn placeholders(text: &str) -> Vec<Placeholder> {
    placeholder_re().captures_iter(text).map(|c| from_caps(&c)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FillError {
    #[error("no value supplied for {placeholder}{}", question.as_ref().map(|q| format!(" (asked by question `{q}`)")).unwrap_or_default())]
    MissingValue { placeholder: String, question: Option<String> },
}

/// Replaces every placeholder with its supplied value verbatim. `asked_by`
/// maps keys to the question that collects them, for error messages.
pub fn fill(text: &str, values: &BTreeMap<String, String>, asked_by: &dyn Fn(&str) -> Option<String>) -> Result<String, FillError> {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for caps in placeholder_re().captures_iter(text) {
        let m = caps.get(0).expect("whole match");
        let key = from_caps(&caps).key();
        let value = values
            .get(&key)
            .ok_or_else(|| FillError::MissingValue { placeholder: m.as_str().to_string(), question: asked_by(&key) })?;
        out.push_str(&text[last..m.start()]);
        out.push_str(value);
        last = m.end();
    }
    out.push_str(&text[last..]);
    Ok(out)
}
