//! Loaded, stratified rule programs.

use rustc_hash::FxHashMap as HashMap;
use std::fmt;

use super::parser::parse_clauses;
use super::strata::{check_stratification, Stratification};
use super::term::{Clause, PredKey, Term};
use super::EngineError;

/// An immutable set of clauses in source order, indexed by predicate.
#[derive(Debug, Clone)]
pub struct Program {
    clauses: Vec<Clause>,
    index: HashMap<PredKey, Vec<usize>>,
    by_id: HashMap<String, usize>,
    strata: Stratification,
}

impl Program {
    /// Parses and stratifies `src`.
    pub fn parse(src: &str) -> Result<Program, EngineError> {
        Program::parse_named(src, "program")
    }

    /// As [`Program::parse`], with `source` used for default clause ids.
    pub fn parse_named(src: &str, source: &str) -> Result<Program, EngineError> {
        Program::from_clauses(parse_clauses(src, source)?)
    }

    pub fn from_clauses(clauses: Vec<Clause>) -> Result<Program, EngineError> {
        let strata = check_stratification(&clauses)?;
        Ok(Program::build(clauses, strata))
    }

    fn build(mut clauses: Vec<Clause>, strata: Stratification) -> Program {
        let mut index: HashMap<PredKey, Vec<usize>> = HashMap::default();
        let mut by_id = HashMap::default();
        for (i, c) in clauses.iter_mut().enumerate() {
            index.entry(c.pred_key()).or_default().push(i);
            // Ids must be unique for proof replay; later duplicates get a suffix.
            let mut id = c.id.clone();
            let mut n = 2;
            while by_id.contains_key(&id) {
                id = format!("{}~{n}", c.id);
                n += 1;
            }
            c.id = id.clone();
            by_id.insert(id, i);
        }
        Program { clauses, index, by_id, strata }
    }

    /// Concatenates programs, re-checking stratification over the union.
    pub fn merge<'a>(parts: impl IntoIterator<Item = &'a Program>) -> Result<Program, EngineError> {
        let clauses: Vec<Clause> = parts.into_iter().flat_map(|p| p.clauses.iter().cloned()).collect();
        Program::from_clauses(clauses)
    }

    /// Adds ground facts. Facts introduce no dependency edges, so the existing
    /// layering is kept for predicates already known.
    pub fn with_facts(&self, facts: impl IntoIterator<Item = Term>, source: &str) -> Result<Program, EngineError> {
        let mut clauses = self.clauses.clone();
        let mut strata = self.strata.clone();
        for (i, atom) in facts.into_iter().enumerate() {
            let key = atom
                .pred_key()
                .ok_or_else(|| EngineError::Type(format!("fact `{atom}` is not callable")))?;
            if !atom.is_ground() {
                return Err(EngineError::Type(format!("fact `{atom}` is not ground")));
            }
            strata.insert_base(key);
            clauses.push(Clause {
                head: atom,
                body: Vec::new(),
                var_names: Vec::new(),
                id: format!("{source}#{}", i + 1),
                notes: Vec::new(),
            });
        }
        Ok(Program::build(clauses, strata))
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Clauses with a body or a non-ground head.
    pub fn rules(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| !c.is_fact())
    }

    pub fn facts(&self) -> impl Iterator<Item = &Term> {
        self.clauses.iter().filter(|c| c.is_fact()).map(|c| &c.head)
    }

    pub fn clauses_for(&self, key: &PredKey) -> impl Iterator<Item = &Clause> {
        self.index.get(key).into_iter().flatten().map(|&i| &self.clauses[i])
    }

    pub(crate) fn clause_indices(&self, key: &PredKey) -> &[usize] {
        self.index.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn clause(&self, id: &str) -> Option<&Clause> {
        self.by_id.get(id).map(|&i| &self.clauses[i])
    }

    pub fn defines(&self, key: &PredKey) -> bool {
        self.index.contains_key(key)
    }

    pub fn strata(&self) -> &Stratification {
        &self.strata
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// True when no compound terms or list builtins occur anywhere.
    pub fn is_function_free(&self) -> bool {
        use super::term::{BodyItem, Builtin};
        fn item_ok(item: &BodyItem) -> bool {
            match item {
                BodyItem::Literal(l) => l.atom.args().iter().all(|a| !matches!(a, Term::Compound(..))),
                BodyItem::Builtin(Builtin::LessEq(a, b)) => {
                    !matches!(a, Term::Compound(..)) && !matches!(b, Term::Compound(..))
                }
                BodyItem::Builtin(Builtin::Disjunction { alternatives, .. }) => {
                    alternatives.iter().flatten().all(item_ok)
                }
                BodyItem::Builtin(_) => false,
            }
        }
        self.clauses.iter().all(|c| {
            c.head.args().iter().all(|a| !matches!(a, Term::Compound(..))) && c.body.iter().all(item_ok)
        })
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::parser::tokens;

    const DEIDENTIFIED_RULE: &str = "permitted(ferpa, release(_R, DS, _DU,\n    _DD, CS), N) :-\n    bounded(CS, N),\n    ferpa_datasetInScope(DS),\n    \\+(ferpa_identifiable(DS)).\n";

    #[test]
    fn figure_rule_loads() {
        let p = Program::parse(DEIDENTIFIED_RULE).unwrap();
        assert_eq!(p.rules().count(), 1);
        assert_eq!(p.facts().count(), 0);
        let c = &p.clauses()[0];
        assert_eq!(c.pred_key(), PredKey::new("permitted", 3));
        let negs = c.body.iter().filter(|b| matches!(b, super::super::term::BodyItem::Literal(l) if !l.positive)).count();
        assert_eq!(negs, 1);
    }

    #[test]
    fn reserialization_is_token_equivalent() {
        let p = Program::parse(DEIDENTIFIED_RULE).unwrap();
        assert_eq!(tokens(&p.to_string()).unwrap(), tokens(DEIDENTIFIED_RULE).unwrap());
    }

    #[test]
    fn single_fact() {
        let p = Program::parse("p(a).").unwrap();
        assert_eq!(p.facts().count(), 1);
        assert_eq!(p.rules().count(), 0);
    }

    #[test]
    fn negative_cycle_rejected() {
        let err = Program::parse("p(X) :- \\+(q(X)).\nq(X) :- \\+(p(X)).").unwrap_err();
        assert!(matches!(err, EngineError::Stratification { .. }), "{err}");
    }

    #[test]
    fn duplicate_ids_are_disambiguated() {
        let p = Program::parse("%@ x\np(a).\n%@ x\np(b).").unwrap();
        assert!(p.clause("x").is_some());
        assert!(p.clause("x~2").is_some());
    }
}
