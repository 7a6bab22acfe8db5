//! Purpose restrictions over a hierarchical subject taxonomy.
//!
//! A profile holds two boolean expressions over taxonomy codes. A code leaf is
//! true for a request when the request names that code or any descendant of it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PurposeError {
    #[error("unknown taxonomy code `{0}`")]
    UnknownCode(String),
    #[error("duplicate taxonomy code `{0}`")]
    DuplicateCode(String),
    #[error("taxonomy parent chain loops through `{0}`")]
    Cycle(String),
    #[error("taxonomy line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("code {code} is labelled `{expected}`, not `{found}`")]
    LabelMismatch { code: String, expected: String, found: String },
    #[error("purpose expression: {0}")]
    Syntax(String),
    #[error("a purpose request needs codes or free text")]
    EmptyRequest,
    #[error("purpose profile: {0}")]
    Profile(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyNode {
    pub code: String,
    pub label: String,
    pub parent: Option<String>,
}

/// A forest of codes with labels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Taxonomy {
    nodes: BTreeMap<String, TaxonomyNode>,
}

impl Taxonomy {
    /// Reads `code<TAB>label<TAB>parent` records. Blank lines and lines
    /// starting with `#` are skipped; the parent column may be empty or absent.
    pub fn parse(text: &str) -> Result<Taxonomy, PurposeError> {
        let mut nodes = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let code = cols.next().unwrap_or("").trim();
            let label = cols.next().map(str::trim).unwrap_or("");
            let parent = cols.next().map(str::trim).filter(|p| !p.is_empty());
            if code.is_empty() || label.is_empty() {
                return Err(PurposeError::Format { line: i + 1, message: "expected code and label".into() });
            }
            if cols.next().is_some() {
                return Err(PurposeError::Format { line: i + 1, message: "too many columns".into() });
            }
            let node = TaxonomyNode { code: code.into(), label: label.into(), parent: parent.map(Into::into) };
            if nodes.insert(code.to_string(), node).is_some() {
                return Err(PurposeError::DuplicateCode(code.into()));
            }
        }
        let tax = Taxonomy { nodes };
        tax.validate()?;
        Ok(tax)
    }

    fn validate(&self) -> Result<(), PurposeError> {
        for node in self.nodes.values() {
            if let Some(p) = &node.parent {
                if !self.nodes.contains_key(p) {
                    return Err(PurposeError::UnknownCode(p.clone()));
                }
            }
            // A chain longer than the node count must revisit a node.
            let mut cur = node.parent.as_deref();
            let mut steps = 0;
            while let Some(c) = cur {
                if c == node.code || steps > self.nodes.len() {
                    return Err(PurposeError::Cycle(node.code.clone()));
                }
                steps += 1;
                cur = self.nodes.get(c).and_then(|n| n.parent.as_deref());
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, code: &str) -> bool {
        self.nodes.contains_key(code)
    }

    pub fn node(&self, code: &str) -> Option<&TaxonomyNode> {
        self.nodes.get(code)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &TaxonomyNode> {
        self.nodes.values()
    }

    pub fn children<'a>(&'a self, code: &'a str) -> impl Iterator<Item = &'a TaxonomyNode> + 'a {
        self.nodes.values().filter(move |n| n.parent.as_deref() == Some(code))
    }

    /// `code` followed by its ancestors up to the root.
    pub fn ancestors_or_self(&self, code: &str) -> Vec<&str> {
        let mut out = Vec::new();
        let mut cur = self.nodes.get(code);
        while let Some(n) = cur {
            out.push(n.code.as_str());
            cur = n.parent.as_deref().and_then(|p| self.nodes.get(p));
        }
        out
    }

    pub fn is_descendant_or_self(&self, code: &str, ancestor: &str) -> bool {
        self.ancestors_or_self(code).contains(&ancestor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PurposeExpr {
    Code(String),
    And(Box<PurposeExpr>, Box<PurposeExpr>),
    Or(Box<PurposeExpr>, Box<PurposeExpr>),
    Not(Box<PurposeExpr>),
}

impl PurposeExpr {
    /// Parses expressions such as `3206.Education AND NOT(5878.Mental Health)`.
    /// A code may carry its label after a dot; labels may contain spaces and
    /// are checked against the taxonomy when one is given. NOT binds tightest,
    /// then AND, then OR.
    pub fn parse(text: &str, taxonomy: Option<&Taxonomy>) -> Result<PurposeExpr, PurposeError> {
        let tokens = tokenize(text)?;
        let mut p = ExprParser { tokens, pos: 0, taxonomy };
        let e = p.or()?;
        if p.pos != p.tokens.len() {
            return Err(PurposeError::Syntax(format!("unexpected `{}`", p.tokens[p.pos])));
        }
        Ok(e)
    }

    pub fn codes(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_codes(&mut out);
        out
    }

    fn collect_codes<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            PurposeExpr::Code(c) => {
                out.insert(c);
            }
            PurposeExpr::And(a, b) | PurposeExpr::Or(a, b) => {
                a.collect_codes(out);
                b.collect_codes(out);
            }
            PurposeExpr::Not(a) => a.collect_codes(out),
        }
    }

    pub fn eval(&self, leaf: &dyn Fn(&str) -> bool) -> bool {
        match self {
            PurposeExpr::Code(c) => leaf(c),
            PurposeExpr::And(a, b) => a.eval(leaf) && b.eval(leaf),
            PurposeExpr::Or(a, b) => a.eval(leaf) || b.eval(leaf),
            PurposeExpr::Not(a) => !a.eval(leaf),
        }
    }
}

impl fmt::Display for PurposeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PurposeExpr::Code(c) => write!(f, "{c}"),
            PurposeExpr::And(a, b) => write!(f, "({a} AND {b})"),
            PurposeExpr::Or(a, b) => write!(f, "({a} OR {b})"),
            PurposeExpr::Not(a) => write!(f, "NOT({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    And,
    Or,
    Not,
    Code { code: String, label: Option<String> },
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
            Tok::And => f.write_str("AND"),
            Tok::Or => f.write_str("OR"),
            Tok::Not => f.write_str("NOT"),
            Tok::Code { code, .. } => f.write_str(code),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<Tok>, PurposeError> {
    let spaced = text.replace('(', " ( ").replace(')', " ) ");
    let mut out: Vec<Tok> = Vec::new();
    // Label words after a code keep attaching to it until an operator or paren.
    let mut open_label = false;
    for word in spaced.split_whitespace() {
        let tok = match word {
            "(" => Tok::LParen,
            ")" => Tok::RParen,
            w if w.eq_ignore_ascii_case("and") => Tok::And,
            w if w.eq_ignore_ascii_case("or") => Tok::Or,
            w if w.eq_ignore_ascii_case("not") => Tok::Not,
            w => {
                let (code, label) = match w.split_once('.') {
                    Some((c, l)) => (c, Some(l)),
                    None => (w, None),
                };
                if !code.is_empty() && code.bytes().all(|b| b.is_ascii_digit()) {
                    out.push(Tok::Code { code: code.into(), label: label.filter(|l| !l.is_empty()).map(Into::into) });
                    open_label = label.is_some();
                    continue;
                }
                match out.last_mut() {
                    Some(Tok::Code { label: Some(l), .. }) if open_label => {
                        l.push(' ');
                        l.push_str(w);
                        continue;
                    }
                    _ => return Err(PurposeError::Syntax(format!("expected a code, found `{w}`"))),
                }
            }
        };
        open_label = false;
        out.push(tok);
    }
    Ok(out)
}

struct ExprParser<'t> {
    tokens: Vec<Tok>,
    pos: usize,
    taxonomy: Option<&'t Taxonomy>,
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn or(&mut self) -> Result<PurposeExpr, PurposeError> {
        let mut left = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            left = PurposeExpr::Or(Box::new(left), Box::new(self.and()?));
        }
        Ok(left)
    }

    fn and(&mut self) -> Result<PurposeExpr, PurposeError> {
        let mut left = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            left = PurposeExpr::And(Box::new(left), Box::new(self.unary()?));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<PurposeExpr, PurposeError> {
        let tok = self.peek().cloned().ok_or_else(|| PurposeError::Syntax("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Tok::Not => Ok(PurposeExpr::Not(Box::new(self.unary()?))),
            Tok::LParen => {
                let e = self.or()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(PurposeError::Syntax("missing `)`".into()));
                }
                self.pos += 1;
                Ok(e)
            }
            Tok::Code { code, label } => {
                if let Some(tax) = self.taxonomy {
                    let node = tax.node(&code).ok_or_else(|| PurposeError::UnknownCode(code.clone()))?;
                    if let Some(l) = label {
                        if !node.label.eq_ignore_ascii_case(&l) {
                            return Err(PurposeError::LabelMismatch { code, expected: node.label.clone(), found: l });
                        }
                    }
                }
                Ok(PurposeExpr::Code(code))
            }
            other => Err(PurposeError::Syntax(format!("unexpected `{other}`"))),
        }
    }
}

/// The purpose restrictions a depositor attaches to a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PurposeProfile {
    pub human_readable: String,
    pub always_permitted: PurposeExpr,
    pub always_denied: PurposeExpr,
    permitted_src: String,
    denied_src: String,
}

/// A profile as written in files and metadata records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileSource {
    #[serde(default)]
    pub human_readable: String,
    pub always_permitted: String,
    pub always_denied: String,
}

impl PurposeProfile {
    pub fn new(human_readable: &str, always_permitted: &str, always_denied: &str, taxonomy: &Taxonomy) -> Result<Self, PurposeError> {
        Ok(PurposeProfile {
            human_readable: human_readable.into(),
            always_permitted: PurposeExpr::parse(always_permitted, Some(taxonomy))?,
            always_denied: PurposeExpr::parse(always_denied, Some(taxonomy))?,
            permitted_src: always_permitted.into(),
            denied_src: always_denied.into(),
        })
    }

    /// Reads a TOML profile with `human_readable`, `always_permitted` and
    /// `always_denied` keys.
    pub fn parse(text: &str, taxonomy: &Taxonomy) -> Result<Self, PurposeError> {
        let f: ProfileSource = toml::from_str(text).map_err(|e| PurposeError::Profile(e.message().to_string()))?;
        PurposeProfile::from_source(&f, taxonomy)
    }

    pub fn from_source(src: &ProfileSource, taxonomy: &Taxonomy) -> Result<Self, PurposeError> {
        PurposeProfile::new(&src.human_readable, &src.always_permitted, &src.always_denied, taxonomy)
    }

    pub fn source(&self) -> ProfileSource {
        ProfileSource {
            human_readable: self.human_readable.clone(),
            always_permitted: self.permitted_src.clone(),
            always_denied: self.denied_src.clone(),
        }
    }

    pub fn always_permitted_source(&self) -> &str {
        &self.permitted_src
    }

    pub fn always_denied_source(&self) -> &str {
        &self.denied_src
    }
}

impl Serialize for PurposeProfile {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.source().serialize(s)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PurposeRequest {
    pub codes: BTreeSet<String>,
    #[serde(default)]
    pub free_text: String,
}

impl PurposeRequest {
    pub fn new<I, S>(codes: I, free_text: &str) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        PurposeRequest { codes: codes.into_iter().map(Into::into).collect(), free_text: free_text.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "triage", rename_all = "snake_case")]
pub enum Triage {
    Permit,
    Deny,
    HumanReview { free_text: String },
}

impl Triage {
    pub fn label(&self) -> &'static str {
        match self {
            Triage::Permit => "permit",
            Triage::Deny => "deny",
            Triage::HumanReview { .. } => "human_review",
        }
    }
}

/// Deny when the denied expression holds, else Permit when the permitted one
/// holds, else human review.
pub fn evaluate_purpose(profile: &PurposeProfile, request: &PurposeRequest, taxonomy: &Taxonomy) -> Result<Triage, PurposeError> {
    if request.codes.is_empty() && request.free_text.trim().is_empty() {
        return Err(PurposeError::EmptyRequest);
    }
    let mut covered: BTreeSet<&str> = BTreeSet::new();
    for code in &request.codes {
        if !taxonomy.contains(code) {
            return Err(PurposeError::UnknownCode(code.clone()));
        }
        covered.extend(taxonomy.ancestors_or_self(code));
    }
    let leaf = |c: &str| covered.contains(c);
    Ok(if profile.always_denied.eval(&leaf) {
        Triage::Deny
    } else if profile.always_permitted.eval(&leaf) {
        Triage::Permit
    } else {
        Triage::HumanReview { free_text: request.free_text.clone() }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAX: &str = "1\tRoot\t\n2\tChild\t1\n3\tGrandchild\t2\n4\tOther\t\n";

    #[test]
    fn labels_may_contain_spaces() {
        let e = PurposeExpr::parse("NOT(12.Mental Health) OR 7", None).unwrap();
        assert_eq!(e.to_string(), "(NOT(12) OR 7)");
    }

    #[test]
    fn not_binds_tighter_than_and() {
        let e = PurposeExpr::parse("NOT 1 AND 2 OR 3", None).unwrap();
        assert_eq!(e.to_string(), "((NOT(1) AND 2) OR 3)");
    }

    #[test]
    fn unbalanced_parens_are_rejected() {
        assert!(matches!(PurposeExpr::parse("NOT ((1) OR NOT (2 OR 3)", None), Err(PurposeError::Syntax(_))));
    }

    #[test]
    fn descendants_make_ancestors_true() {
        let tax = Taxonomy::parse(TAX).unwrap();
        let p = PurposeProfile::new("", "1", "4", &tax).unwrap();
        let r = PurposeRequest::new(["3"], "");
        assert_eq!(evaluate_purpose(&p, &r, &tax).unwrap(), Triage::Permit);
    }

    #[test]
    fn label_mismatch_is_reported() {
        let tax = Taxonomy::parse(TAX).unwrap();
        assert!(matches!(PurposeExpr::parse("2.Root", Some(&tax)), Err(PurposeError::LabelMismatch { .. })));
        assert!(PurposeExpr::parse("2.child", Some(&tax)).is_ok());
    }

    #[test]
    fn dangling_parent_is_unknown() {
        assert_eq!(Taxonomy::parse("1\tA\t9\n"), Err(PurposeError::UnknownCode("9".into())));
    }
}
