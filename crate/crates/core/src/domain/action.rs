//! Actions on datasets and the condition sets that restrict them.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::Term;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Deposit,
    Accept,
    Release,
}

impl ActionKind {
    pub const ALL: [ActionKind; 3] = [ActionKind::Deposit, ActionKind::Accept, ActionKind::Release];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Deposit => "deposit",
            ActionKind::Accept => "accept",
            ActionKind::Release => "release",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "deposit" => Ok(ActionKind::Deposit),
            "accept" => Ok(ActionKind::Accept),
            "release" => Ok(ActionKind::Release),
            other => Err(format!("unknown action `{other}` (expected deposit, accept or release)")),
        }
    }
}

/// A finite set of condition ids, kept sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConditionSet(BTreeSet<String>);

impl ConditionSet {
    pub fn new() -> Self {
        ConditionSet::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.0.contains(id)
    }

    pub fn insert(&mut self, id: impl Into<String>) -> bool {
        self.0.insert(id.into())
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn is_subset(&self, other: &ConditionSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &ConditionSet) -> ConditionSet {
        ConditionSet(self.0.union(&other.0).cloned().collect())
    }

    /// The set as a rule-language list of atoms.
    pub fn to_term(&self) -> Term {
        Term::list(self.0.iter().map(|c| Term::atom(c)).collect::<Vec<_>>())
    }

    /// Reads a ground list of atoms.
    pub fn from_term(t: &Term) -> Option<ConditionSet> {
        let items = t.as_list()?;
        items.into_iter().map(|i| i.as_atom().map(str::to_string)).collect::<Option<BTreeSet<_>>>().map(ConditionSet)
    }
}

impl Ord for ConditionSet {
    /// Smaller sets first, then element-wise lexicographic.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.iter().cmp(other.0.iter()))
    }
}

impl PartialOrd for ConditionSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Into<String>> FromIterator<S> for ConditionSet {
    fn from_iter<T: IntoIterator<Item = S>>(iter: T) -> Self {
        ConditionSet(iter.into_iter().map(Into::into).collect())
    }
}

impl fmt::Display for ConditionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(c)?;
        }
        f.write_str("}")
    }
}

/// A deposit, accept or release of one dataset.
///
/// `conditions` is `None` when the condition set is unknown and has to be
/// searched for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub kind: ActionKind,
    pub dataset: String,
    pub depositor: String,
    pub repository: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditions: Option<ConditionSet>,
}

impl Action {
    pub fn deposit(depositor: &str, dataset: &str, repository: &str) -> Self {
        Action {
            kind: ActionKind::Deposit,
            dataset: dataset.into(),
            depositor: depositor.into(),
            repository: repository.into(),
            user: None,
            conditions: None,
        }
    }

    pub fn accept(repository: &str, dataset: &str, depositor: &str) -> Self {
        Action { kind: ActionKind::Accept, ..Action::deposit(depositor, dataset, repository) }
    }

    pub fn release(repository: &str, dataset: &str, user: &str, depositor: &str) -> Self {
        Action {
            kind: ActionKind::Release,
            user: Some(user.into()),
            ..Action::deposit(depositor, dataset, repository)
        }
    }

    /// An action of `kind` with placeholder actor names.
    pub fn template(kind: ActionKind, dataset: &str) -> Self {
        match kind {
            ActionKind::Deposit => Action::deposit("depositor", dataset, "repository"),
            ActionKind::Accept => Action::accept("repository", dataset, "depositor"),
            ActionKind::Release => Action::release("repository", dataset, "user", "depositor"),
        }
    }

    pub fn with_conditions(mut self, cs: ConditionSet) -> Self {
        self.conditions = Some(cs);
        self
    }

    pub fn without_conditions(mut self) -> Self {
        self.conditions = None;
        self
    }

    /// The action term with `cs` in the condition slot.
    pub fn term_with(&self, cs: &ConditionSet) -> Term {
        self.term_with_slot(cs.to_term())
    }

    /// The action term with the known condition set, or the empty list.
    pub fn term(&self) -> Term {
        self.term_with(self.conditions.as_ref().unwrap_or(&ConditionSet::new()))
    }

    pub(crate) fn term_with_slot(&self, cs: Term) -> Term {
        let a = |s: &str| Term::atom(s);
        match self.kind {
            ActionKind::Deposit => {
                Term::compound("deposit", vec![a(&self.depositor), a(&self.dataset), a(&self.repository), cs])
            }
            ActionKind::Accept => {
                Term::compound("accept", vec![a(&self.repository), a(&self.dataset), a(&self.depositor), cs])
            }
            ActionKind::Release => Term::compound(
                "release",
                vec![
                    a(&self.repository),
                    a(&self.dataset),
                    a(self.user.as_deref().unwrap_or("user")),
                    a(&self.depositor),
                    cs,
                ],
            ),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.conditions {
            Some(_) => write!(f, "{}", self.term()),
            None => write!(f, "{}", self.term_with_slot(Term::atom("CS?"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn release_term_has_five_slots() {
        let a = Action::release("r", "d1", "u", "dd").with_conditions(["b", "a"].into_iter().collect());
        assert_eq!(a.term().to_string(), "release(r, d1, u, dd, [a, b])");
    }

    #[test]
    fn condition_sets_order_by_size_then_elements() {
        let mut v: Vec<ConditionSet> =
            vec![["b"].into_iter().collect(), ["a", "c"].into_iter().collect(), ["a"].into_iter().collect()];
        v.sort();
        let shown: Vec<String> = v.iter().map(|c| c.to_string()).collect();
        assert_eq!(shown, ["{a}", "{b}", "{a, c}"]);
    }

    #[test]
    fn condition_set_term_round_trip() {
        let cs: ConditionSet = ["x", "y"].into_iter().collect();
        assert_eq!(ConditionSet::from_term(&cs.to_term()), Some(cs));
    }
}
