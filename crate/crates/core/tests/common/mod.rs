//! Oracles and fixtures shared by the integration tests. Nothing here calls
//! into the engine's evaluation code; the oracles are written from the rule
//! texts directly.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::Rng;

use repolicy::domain::{Assignment, DomainModule};

// ------------------------------------------------------------------ programs

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Arg {
    Var(u8),
    Const(u8),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub pred: usize,
    pub args: Vec<Arg>,
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub head: Atom,
    pub pos: Vec<Atom>,
    pub neg: Vec<Atom>,
}

/// A function-free program over predicates `p0..`, constants `a, b, c` and
/// variables `X, Y, Z`. Predicate `i` only negates predicates below `i`, so
/// the predicate index is a valid stratification.
#[derive(Debug, Clone)]
pub struct RandomProgram {
    pub arity: Vec<usize>,
    pub consts: u8,
    pub facts: Vec<Atom>,
    pub rules: Vec<Rule>,
}

const CONSTS: [&str; 3] = ["a", "b", "c"];
const VARS: [&str; 3] = ["X", "Y", "Z"];

fn atom_text(a: &Atom) -> String {
    if a.args.is_empty() {
        return format!("p{}", a.pred);
    }
    let args: Vec<&str> = a
        .args
        .iter()
        .map(|x| match x {
            Arg::Var(v) => VARS[*v as usize],
            Arg::Const(c) => CONSTS[*c as usize],
        })
        .collect();
    format!("p{}({})", a.pred, args.join(", "))
}

impl RandomProgram {
    /// At most 4 predicates, 3 constants, 6 rules, plus 1 to 4 facts.
    pub fn generate(rng: &mut impl Rng) -> RandomProgram {
        let npred = rng.random_range(1..=4);
        let arity: Vec<usize> = (0..npred).map(|_| rng.random_range(0..=2)).collect();
        let consts = rng.random_range(1..=3u8);
        let konst = |rng: &mut dyn rand::RngCore| Arg::Const(rng.random_range(0..consts));
        let mut facts = Vec::new();
        for _ in 0..rng.random_range(1..=4) {
            let pred = rng.random_range(0..npred);
            let args = (0..arity[pred]).map(|_| konst(rng)).collect();
            facts.push(Atom { pred, args });
        }
        let mut rules = Vec::new();
        for _ in 0..rng.random_range(1..=6) {
            let h = rng.random_range(0..npred);
            let mut pos = Vec::new();
            let mut bound: Vec<u8> = Vec::new();
            for _ in 0..rng.random_range(1..=2) {
                let pred = rng.random_range(0..=h);
                let args: Vec<Arg> = (0..arity[pred])
                    .map(|_| {
                        if rng.random_bool(0.75) {
                            let v = rng.random_range(0..3u8);
                            bound.push(v);
                            Arg::Var(v)
                        } else {
                            konst(rng)
                        }
                    })
                    .collect();
                pos.push(Atom { pred, args });
            }
            let pick = |rng: &mut dyn rand::RngCore, bound: &[u8]| {
                if !bound.is_empty() && rng.random_bool(0.8) {
                    Arg::Var(bound[rng.random_range(0..bound.len())])
                } else {
                    Arg::Const(rng.random_range(0..consts))
                }
            };
            let mut neg = Vec::new();
            if h > 0 && rng.random_bool(0.5) {
                let pred = rng.random_range(0..h);
                let args = (0..arity[pred]).map(|_| pick(rng, &bound)).collect();
                neg.push(Atom { pred, args });
            }
            let head = Atom { pred: h, args: (0..arity[h]).map(|_| pick(rng, &bound)).collect() };
            rules.push(Rule { head, pos, neg });
        }
        RandomProgram { arity, consts, facts, rules }
    }

    pub fn to_source(&self) -> String {
        let mut out = String::new();
        for f in &self.facts {
            out.push_str(&format!("{}.\n", atom_text(f)));
        }
        for r in &self.rules {
            let mut body: Vec<String> = r.pos.iter().map(atom_text).collect();
            body.extend(r.neg.iter().map(|a| format!("\\+({})", atom_text(a))));
            out.push_str(&format!("{} :- {}.\n", atom_text(&r.head), body.join(", ")));
        }
        out
    }

    /// Ground atoms of the stratified least model, as text like `p1(a, b)`.
    pub fn fixpoint_oracle(&self) -> BTreeSet<String> {
        let mut model: BTreeSet<(usize, Vec<u8>)> = self
            .facts
            .iter()
            .map(|f| (f.pred, f.args.iter().map(|a| if let Arg::Const(c) = a { *c } else { unreachable!() }).collect()))
            .collect();
        let ground = |a: &Atom, env: &[u8; 3]| -> (usize, Vec<u8>) {
            (
                a.pred,
                a.args
                    .iter()
                    .map(|x| match x {
                        Arg::Var(v) => env[*v as usize],
                        Arg::Const(c) => *c,
                    })
                    .collect(),
            )
        };
        let mut envs = Vec::new();
        for x in 0..self.consts {
            for y in 0..self.consts {
                for z in 0..self.consts {
                    envs.push([x, y, z]);
                }
            }
        }
        for stratum in 0..self.arity.len() {
            loop {
                let mut added = false;
                for r in self.rules.iter().filter(|r| r.head.pred == stratum) {
                    for env in &envs {
                        let pos_ok = r.pos.iter().all(|a| model.contains(&ground(a, env)));
                        let neg_ok = r.neg.iter().all(|a| !model.contains(&ground(a, env)));
                        if pos_ok && neg_ok && model.insert(ground(&r.head, env)) {
                            added = true;
                        }
                    }
                }
                if !added {
                    break;
                }
            }
        }
        model
            .into_iter()
            .map(|(p, args)| {
                let atom = Atom { pred: p, args: args.into_iter().map(Arg::Const).collect() };
                atom_text(&atom)
            })
            .collect()
    }

    /// One open query per predicate, e.g. `p1(V0, V1)`.
    pub fn queries(&self) -> Vec<String> {
        self.arity
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                if n == 0 {
                    format!("p{i}")
                } else {
                    let vars: Vec<String> = (0..n).map(|k| format!("V{k}")).collect();
                    format!("p{i}({})", vars.join(", "))
                }
            })
            .collect()
    }
}

// --------------------------------------------------------------------- FERPA

pub const AUDIT_SET: [&str; 6] = [
    "ferpa_license_auditEvaluation",
    "ferpa_license_information",
    "ferpa_license_purpose",
    "ferpa_license_scope",
    "general_license_dataDestruction",
    "general_license_minimumPersonnel",
];

pub const STUDIES_SET: [&str; 9] = [
    "ferpa_license_duration",
    "ferpa_license_information",
    "ferpa_license_notice",
    "ferpa_license_purpose",
    "ferpa_license_scope",
    "general_license_dataDestruction",
    "general_license_minimumInformation",
    "general_license_minimumPersonnel",
    "general_license_researchProposal",
];

pub const CONSENT_SET: [&str; 2] = ["general_license_IRBApproval", "general_license_minimumPersonnel"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expected {
    OutOfScope,
    Denied,
    /// In scope, neither denied nor permitted within the bound.
    Silent,
    /// Minimal condition sets, sorted.
    Permitted(Vec<BTreeSet<String>>),
}

impl Expected {
    pub fn label(&self) -> &'static str {
        match self {
            Expected::OutOfScope => "out_of_scope",
            Expected::Denied => "denied",
            Expected::Silent => "silent",
            Expected::Permitted(_) => "permitted",
        }
    }
}

pub fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct FerpaCase {
    pub in_scope: bool,
    pub identifiable: bool,
    pub consent: bool,
    pub studies: bool,
    pub audit: bool,
    /// Total budget in millionths; `None` when there is no DP derivation.
    pub epsilon_micros: Option<i64>,
}

impl FerpaCase {
    pub fn from_assignment(a: &Assignment) -> FerpaCase {
        let b = |p: &str| a.get(p).unwrap_or_else(|| panic!("assignment lacks {p}"));
        FerpaCase {
            in_scope: b("ferpa_datasetInScope"),
            identifiable: b("ferpa_identifiable"),
            consent: b("ferpa_allConsented"),
            studies: b("ferpa_studiesException"),
            audit: b("ferpa_auditException"),
            epsilon_micros: a.value("epsilon").expect("epsilon axis").map(|f| f.micros()),
        }
    }
}

/// Release verdict of the FERPA rules with the 0.1 budget threshold, for
/// condition sets of at most `bound` elements.
pub fn ferpa_release_oracle(c: &FerpaCase, bound: usize) -> Expected {
    if !c.in_scope {
        return Expected::OutOfScope;
    }
    let private = c.epsilon_micros.is_some_and(|e| e <= 100_000);
    if !c.identifiable || private {
        return Expected::Permitted(vec![BTreeSet::new()]);
    }
    let mut candidates: Vec<BTreeSet<String>> = Vec::new();
    if c.consent {
        candidates.push(set(&CONSENT_SET));
    }
    if c.studies || c.audit {
        candidates.push(set(&AUDIT_SET));
        candidates.push(set(&STUDIES_SET));
    }
    if candidates.is_empty() {
        return Expected::Denied;
    }
    let mut minimal: Vec<BTreeSet<String>> = candidates
        .iter()
        .filter(|s| s.len() <= bound)
        .filter(|s| !candidates.iter().any(|o| o != *s && o.is_subset(s)))
        .cloned()
        .collect();
    minimal.sort();
    if minimal.is_empty() {
        return Expected::Silent;
    }
    Expected::Permitted(minimal)
}

/// True when the FERPA oracle permits only under a nonempty condition set.
pub fn needs_conditions(c: &FerpaCase) -> bool {
    match ferpa_release_oracle(c, 9) {
        Expected::Permitted(sets) => sets.iter().all(|s| !s.is_empty()),
        _ => false,
    }
}

// ------------------------------------------------------- contradictory domain

const CONTRA_MANIFEST: &str = r#"
id = "contra"
version = "0.1.0"
rules = "contra.rules"
questions = "questions.toml"

[[abducible]]
predicate = "contra_inScope/1"
source = "question"
question = "contra_scope"
audit = true

[[abducible]]
predicate = "contra_flagA/1"
source = "question"
question = "contra_a"
audit = true

[[abducible]]
predicate = "contra_flagB/1"
source = "question"
question = "contra_b"
audit = true

[[condition]]
id = "contra_license_terms"
actions = ["release"]

[audit]
action = "release"
"#;

const CONTRA_RULES: &str = r#"
% @contra.scope
inScope(contra, A) :- actionDataset(A, DS), contra_inScope(DS).

% @contra.permitted
permitted(contra, release(_R, DS, _DU, _DD, CS), N) :-
    bounded(CS, N), contra_inScope(DS), contra_flagA(DS),
    conditionsRequire(CS, contra_license_terms).

% @contra.denied
denied(contra, release(_R, DS, _DU, _DD, CS), N) :-
    bounded(CS, N), contra_inScope(DS), contra_flagA(DS), contra_flagB(DS).
"#;

const CONTRA_QUESTIONS: &str = r#"
[[question]]
id = "contra_scope"
kind = "yes_no"
text = "Is the dataset covered?"
fact = "contra_inScope(DS)"

[[question]]
id = "contra_a"
kind = "yes_no"
text = "Does condition A hold?"
fact = "contra_flagA(DS)"

[[question]]
id = "contra_b"
kind = "yes_no"
text = "Does condition B hold?"
fact = "contra_flagB(DS)"
"#;

/// A domain that both permits and denies exactly when all three of its
/// audited abducibles hold.
pub fn contradictory_domain() -> Arc<DomainModule> {
    let files: BTreeMap<&str, &str> = [("contra.rules", CONTRA_RULES), ("questions.toml", CONTRA_QUESTIONS)].into_iter().collect();
    Arc::new(
        DomainModule::from_sources(CONTRA_MANIFEST, |name| {
            files
                .get(name)
                .map(|s| s.to_string())
                .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::NotFound, name.to_string()))
        })
        .expect("test domain loads"),
    )
}
