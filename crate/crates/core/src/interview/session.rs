//! Interview sessions: which question to ask next, what the answers mean,
//! and how the interview ends.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, Mutex};

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::question::{AnswerKind, Question};
use crate::compose::{compose, permit_proofs, ComposedVerdict, RepositoryPolicy, Verdict};
use crate::domain::{Action, ActionKind, ConditionSet, Context, DomainError, FactBase};
use crate::engine::{Leaf, Proof, Term};
use crate::license::{
    chosen_set, emit_provenance, generate_license, placeholders, AnswerRecord, LicenseBundle, LicenseError,
    LicenseTemplate, ProvenanceInput, TermSnippet,
};
use crate::purpose::Triage;

/// Yes/no questions whose answers are still open are enumerated jointly when
/// checking relevance; past this many the check is refused.
pub const MAX_OPEN_QUESTIONS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Yes,
    No,
    DontKnow,
    Value(String),
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Yes => f.write_str("yes"),
            Answer::No => f.write_str("no"),
            Answer::DontKnow => f.write_str("don't know"),
            Answer::Value(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    InProgress,
    Concluded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Permit { condition_sets: Vec<ConditionSet> },
    HumanReview { reason: String },
    Reject,
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Permit { .. } => "permit",
            Outcome::HumanReview { .. } => "human_review",
            Outcome::Reject => "reject",
        }
    }
}

/// A statement the depositor confirms before the license is issued.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Affirmation {
    pub id: String,
    pub question_id: String,
    pub text: String,
    pub fact: String,
    /// False when the decision relied on the fact being absent.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub question_id: String,
    pub question: String,
    pub answer: Answer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub dataset: String,
    pub depositor: String,
    pub action: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user: Option<String>,
    pub status: Status,
    /// Latest answer per question.
    pub answers: BTreeMap<String, Answer>,
    /// Every answer in the order given, including replaced ones.
    pub transcript: Vec<TranscriptEntry>,
    pub served: BTreeSet<String>,
    /// Facts from outside the interview, such as registered derivations.
    pub base: FactBase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    #[serde(default)]
    pub affirmations: Vec<Affirmation>,
    #[serde(default)]
    pub confirmed: bool,
}

impl Session {
    pub fn new(id: &str, dataset: &str, depositor: &str, action: ActionKind) -> Session {
        Session {
            id: id.into(),
            dataset: dataset.into(),
            depositor: depositor.into(),
            action,
            user: None,
            status: Status::InProgress,
            answers: BTreeMap::new(),
            transcript: Vec::new(),
            served: BTreeSet::new(),
            base: FactBase::for_dataset(dataset),
            outcome: None,
            affirmations: Vec::new(),
            confirmed: false,
        }
    }

    pub fn with_user(mut self, user: &str) -> Self {
        self.user = Some(user.into());
        self
    }

    pub fn with_base(mut self, mut base: FactBase) -> Self {
        base.set_dataset(&self.dataset);
        self.base = base;
        self
    }

    /// Plain-text transcript: one `Q`/`A` pair per answer given.
    pub fn transcript_text(&self) -> String {
        let mut out = format!("session {}\ndataset {}\naction {}\n", self.id, self.dataset, self.action);
        for e in &self.transcript {
            out.push_str(&format!("\nQ [{}] {}\nA {}\n", e.question_id, e.question, e.answer));
        }
        if let Some(o) = &self.outcome {
            out.push_str(&format!("\noutcome {}\n", o.label()));
        }
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InterviewError {
    #[error("no question `{0}`")]
    UnknownQuestion(String),
    #[error("question `{0}` has not been served")]
    UnservedQuestion(String),
    #[error("question `{question}` expects a {expected} answer")]
    TypeMismatch { question: String, expected: &'static str },
    #[error("questions still need answers: {}", remaining.join(", "))]
    IncompleteInterview { remaining: Vec<String> },
    #[error("session is already concluded")]
    AlreadyConcluded,
    #[error("session has not been concluded")]
    NotConcluded,
    #[error("session did not conclude with a permit")]
    NotPermitted,
    #[error("affirmations not confirmed: {}", .0.join(", "))]
    Unconfirmed(Vec<String>),
    #[error("{0} open questions are too many to check for relevance")]
    TooManyOpenQuestions(usize),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    License(#[from] LicenseError),
}

/// Runs interviews against one repository policy. Verdicts of hypothetical
/// fact bases are cached across sessions.
pub struct Interviewer {
    policy: Arc<RepositoryPolicy>,
    ctx: Arc<Context>,
    bound: usize,
    cache: Mutex<FxHashMap<String, Verdict>>,
}

impl Interviewer {
    pub fn new(policy: Arc<RepositoryPolicy>, ctx: Arc<Context>, bound: usize) -> Interviewer {
        Interviewer { policy, ctx, bound, cache: Mutex::default() }
    }

    pub fn policy(&self) -> &RepositoryPolicy {
        &self.policy
    }

    pub fn context(&self) -> &Context {
        &self.ctx
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    /// Questions of the policy's domains, in policy then file order.
    pub fn questions(&self) -> impl Iterator<Item = &Question> {
        self.policy.domains.iter().filter_map(|d| self.ctx.domain(d)).flat_map(|m| m.questions())
    }

    pub fn question(&self, id: &str) -> Option<&Question> {
        self.questions().find(|q| q.id == id)
    }

    pub fn snippets(&self) -> Vec<TermSnippet> {
        self.policy
            .domains
            .iter()
            .filter_map(|d| self.ctx.domain(d))
            .flat_map(|m| m.snippets().iter().cloned())
            .collect()
    }

    pub fn start(&self, id: &str, dataset: &str, depositor: &str, kind: ActionKind) -> Session {
        Session::new(id, dataset, depositor, kind)
    }

    /// The action under review, with the policy as the repository.
    pub fn action(&self, session: &Session) -> Action {
        let repo = &self.policy.id;
        match session.action {
            ActionKind::Deposit => Action::deposit(&session.depositor, &session.dataset, repo),
            ActionKind::Accept => Action::accept(repo, &session.dataset, &session.depositor),
            ActionKind::Release => {
                Action::release(repo, &session.dataset, session.user.as_deref().unwrap_or("user"), &session.depositor)
            }
        }
    }

    /// Facts and supplied values established so far.
    pub fn facts(&self, session: &Session) -> FactBase {
        self.facts_with(session, &[])
    }

    fn facts_with(&self, session: &Session, extra: &[&Term]) -> FactBase {
        let mut fb = session.base.clone();
        for (qid, answer) in &session.answers {
            let Some(q) = self.question(qid) else { continue };
            match answer {
                Answer::Yes => {
                    if let Some(f) = q.fact_for(&session.dataset) {
                        fb.insert(f).expect("question facts are ground");
                    }
                }
                Answer::Value(v) => {
                    if let Some(k) = &q.key {
                        fb.set_value(k, v);
                    }
                }
                Answer::No | Answer::DontKnow => {}
            }
        }
        for t in extra {
            fb.insert((*t).clone()).expect("question facts are ground");
        }
        fb
    }

    pub fn verdict(&self, session: &Session) -> Result<ComposedVerdict, InterviewError> {
        Ok(compose(&self.policy, &self.ctx, &self.action(session), &self.facts(session), self.bound)?)
    }

    fn cached_verdict(&self, action: &Action, facts: &FactBase) -> Result<Verdict, InterviewError> {
        // Supplied values never affect verdicts, so they stay out of the key.
        let mut atoms: Vec<String> = facts.evaluation_atoms().iter().map(Term::to_string).collect();
        atoms.sort_unstable();
        let key = format!("{}\n{}", action.term(), atoms.join("\n"));
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(v.clone());
        }
        let v = compose(&self.policy, &self.ctx, action, facts, self.bound)?.verdict;
        self.cache.lock().expect("cache lock").insert(key, v.clone());
        Ok(v)
    }

    /// Yes/no questions without a definite answer, with their facts.
    fn open_questions(&self, session: &Session) -> Vec<(&Question, Term)> {
        self.questions()
            .filter(|q| q.kind == AnswerKind::YesNo)
            .filter(|q| !matches!(session.answers.get(&q.id), Some(Answer::Yes | Answer::No)))
            .filter_map(|q| q.fact_for(&session.dataset).map(|f| (q, f)))
            .collect()
    }

    /// Verdict for every combination of answers to `open`; bit `i` of the
    /// index is the answer to `open[i]`.
    fn verdict_grid(&self, session: &Session, open: &[(&Question, Term)]) -> Result<Vec<Verdict>, InterviewError> {
        if open.len() > MAX_OPEN_QUESTIONS {
            return Err(InterviewError::TooManyOpenQuestions(open.len()));
        }
        let action = self.action(session);
        (0..1usize << open.len())
            .map(|mask| {
                let extra: Vec<&Term> =
                    open.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, (_, f))| f).collect();
                self.cached_verdict(&action, &self.facts_with(session, &extra))
            })
            .collect()
    }

    fn varies(grid: &[Verdict], bit: usize) -> bool {
        (0..grid.len()).filter(|m| m >> bit & 1 == 0).any(|m| grid[m] != grid[m | 1 << bit])
    }

    /// Unanswered questions whose answer can still change the verdict, in
    /// file order. Value questions are served once the verdict is a permit
    /// and its license needs their values. Returned questions count as
    /// served.
    pub fn next_questions(&self, session: &mut Session) -> Result<Vec<Question>, InterviewError> {
        if session.status == Status::Concluded {
            return Ok(Vec::new());
        }
        let open = self.open_questions(session);
        let grid = self.verdict_grid(session, &open)?;
        let mut out: Vec<Question> = open
            .iter()
            .enumerate()
            .filter(|(i, (q, _))| !session.answers.contains_key(&q.id) && Self::varies(&grid, *i))
            .map(|(_, (q, _))| (*q).clone())
            .collect();
        if out.is_empty() {
            let settled = grid.first().cloned();
            if let Some(Verdict::Permitted { condition_sets }) = settled.filter(|_| grid.iter().all(|v| *v == grid[0])) {
                let needed = self.needed_values(chosen_set(&condition_sets));
                out.extend(
                    self.questions()
                        .filter(|q| q.kind == AnswerKind::Value)
                        .filter(|q| q.key.as_ref().is_some_and(|k| needed.contains(k)))
                        .filter(|q| !session.answers.contains_key(&q.id))
                        .cloned(),
                );
            }
        }
        session.served.extend(out.iter().map(|q| q.id.clone()));
        Ok(out)
    }

    /// Placeholder keys used by the terms of `cs`.
    fn needed_values(&self, cs: Option<&ConditionSet>) -> BTreeSet<String> {
        let Some(cs) = cs else { return BTreeSet::new() };
        self.snippets()
            .iter()
            .filter(|s| s.designated && cs.contains(&s.satisfies))
            .flat_map(|s| placeholders(&s.body))
            .map(|p| p.key())
            .collect()
    }

    /// Records an answer to a served question; returns the facts it
    /// asserts. Answering again replaces the earlier answer.
    pub fn record_answer(&self, session: &mut Session, question_id: &str, answer: Answer) -> Result<Vec<Term>, InterviewError> {
        if session.status == Status::Concluded {
            return Err(InterviewError::AlreadyConcluded);
        }
        let q = self.question(question_id).ok_or_else(|| InterviewError::UnknownQuestion(question_id.into()))?;
        if !session.served.contains(question_id) {
            return Err(InterviewError::UnservedQuestion(question_id.into()));
        }
        let facts = match (q.kind, &answer) {
            (AnswerKind::YesNo, Answer::Yes) => q.fact_for(&session.dataset).into_iter().collect(),
            (AnswerKind::YesNo, Answer::No | Answer::DontKnow) => Vec::new(),
            (AnswerKind::Value, Answer::Value(_)) => Vec::new(),
            (AnswerKind::YesNo, _) => {
                return Err(InterviewError::TypeMismatch { question: question_id.into(), expected: "yes/no" })
            }
            (AnswerKind::Value, _) => {
                return Err(InterviewError::TypeMismatch { question: question_id.into(), expected: "value" })
            }
        };
        session.transcript.push(TranscriptEntry {
            question_id: question_id.into(),
            question: q.text.clone(),
            answer: answer.clone(),
        });
        session.answers.insert(question_id.into(), answer);
        Ok(facts)
    }

    /// Proofs behind a verdict: the permit proofs for the license's
    /// condition set, or the denial proofs.
    fn decision_proofs(&self, session: &Session, verdict: &ComposedVerdict) -> Result<Vec<(String, Arc<Proof>)>, InterviewError> {
        Ok(match &verdict.verdict {
            Verdict::Permitted { condition_sets } => match chosen_set(condition_sets) {
                Some(cs) => permit_proofs(&self.ctx, verdict, &self.action(session), &self.facts(session), cs)?,
                None => Vec::new(),
            },
            Verdict::Denied => verdict
                .domains
                .iter()
                .flat_map(|(d, v)| v.proofs().into_iter().map(move |p| (d.clone(), p.clone())))
                .collect(),
            Verdict::Escalate { .. } => Vec::new(),
        })
    }

    /// One affirmation per answered question whose fact, or its absence,
    /// appears as a proof leaf; in proof order without repeats.
    pub fn required_affirmations(&self, session: &Session, verdict: &ComposedVerdict) -> Result<Vec<Affirmation>, InterviewError> {
        let mut out: Vec<Affirmation> = Vec::new();
        for (_, proof) in self.decision_proofs(session, verdict)? {
            for leaf in proof.leaves() {
                let (atom, holds) = match leaf {
                    Leaf::Fact { atom, .. } => (atom, true),
                    Leaf::Absent(atom) => (atom, false),
                };
                let Some(q) = self.questions().find(|q| q.fact_for(&session.dataset).as_ref() == Some(atom)) else {
                    continue;
                };
                let answered = match session.answers.get(&q.id) {
                    Some(Answer::Yes) => true,
                    Some(Answer::No) => false,
                    _ => continue,
                };
                if answered != holds {
                    continue;
                }
                let id = format!("{}:{}", q.id, if holds { "yes" } else { "no" });
                if out.iter().any(|a| a.id == id) {
                    continue;
                }
                let template = if holds { &q.affirm_yes } else { &q.affirm_no };
                let text = template
                    .clone()
                    .unwrap_or_else(|| format!("{} {}", q.text, if holds { "Yes." } else { "No." }));
                out.push(Affirmation { id, question_id: q.id.clone(), text, fact: atom.to_string(), holds });
            }
        }
        Ok(out)
    }

    /// Ends the interview. Concluding twice returns the first outcome.
    pub fn conclude(&self, session: &mut Session, purpose: Option<&Triage>) -> Result<Outcome, InterviewError> {
        if let (Status::Concluded, Some(o)) = (session.status, &session.outcome) {
            return Ok(o.clone());
        }
        let remaining: Vec<String> = self.next_questions(session)?.into_iter().map(|q| q.id).collect();
        if !remaining.is_empty() {
            return Err(InterviewError::IncompleteInterview { remaining });
        }
        let verdict = self.verdict(session)?;
        let open = self.open_questions(session);
        let grid = self.verdict_grid(session, &open)?;
        let unknown: Vec<String> = open
            .iter()
            .enumerate()
            .filter(|(i, (q, _))| session.answers.get(&q.id) == Some(&Answer::DontKnow) && Self::varies(&grid, *i))
            .map(|(_, (q, _))| q.id.clone())
            .collect();
        let outcome = if !unknown.is_empty() {
            Outcome::HumanReview { reason: format!("unknown answer: {}", unknown.join(", ")) }
        } else {
            match (&verdict.verdict, purpose) {
                (Verdict::Denied, _) | (_, Some(Triage::Deny)) => Outcome::Reject,
                (Verdict::Escalate { reason }, _) => Outcome::HumanReview { reason: reason.clone() },
                (_, Some(Triage::HumanReview { .. })) => Outcome::HumanReview { reason: "purpose".into() },
                (Verdict::Permitted { condition_sets }, _) => Outcome::Permit { condition_sets: condition_sets.clone() },
            }
        };
        session.affirmations =
            if matches!(outcome, Outcome::HumanReview { .. }) { Vec::new() } else { self.required_affirmations(session, &verdict)? };
        session.outcome = Some(outcome.clone());
        session.status = Status::Concluded;
        Ok(outcome)
    }

    /// Marks the listed affirmations as confirmed; every required one must
    /// be among them.
    pub fn affirm(&self, session: &mut Session, confirmed: &[String]) -> Result<(), InterviewError> {
        if session.status != Status::Concluded {
            return Err(InterviewError::NotConcluded);
        }
        let missing: Vec<String> =
            session.affirmations.iter().filter(|a| !confirmed.contains(&a.id)).map(|a| a.id.clone()).collect();
        if !missing.is_empty() {
            return Err(InterviewError::Unconfirmed(missing));
        }
        session.confirmed = true;
        Ok(())
    }

    /// Renders the license for a permitted, affirmed session along with its
    /// provenance record.
    pub fn license(&self, session: &Session, template: &LicenseTemplate, created_at: &str) -> Result<LicenseBundle, InterviewError> {
        let Some(Outcome::Permit { condition_sets }) = &session.outcome else {
            return Err(match session.status {
                Status::InProgress => InterviewError::NotConcluded,
                Status::Concluded => InterviewError::NotPermitted,
            });
        };
        if !session.confirmed {
            return Err(InterviewError::Unconfirmed(session.affirmations.iter().map(|a| a.id.clone()).collect()));
        }
        let facts = self.facts(session);
        let chosen = chosen_set(condition_sets).cloned().unwrap_or_default();
        let snippets = self.snippets();
        let texts: Vec<String> = session.affirmations.iter().map(|a| a.text.clone()).collect();
        let asked_by = |key: &str| self.questions().find(|q| q.key.as_deref() == Some(key)).map(|q| q.id.clone());
        let document = generate_license(template, &chosen, &snippets, &facts.supplied_values, &texts, &asked_by)?;

        let verdict = self.verdict(session)?;
        let proofs = self.decision_proofs(session, &verdict)?;
        let answers = self.answer_records(session);
        let abducible = |t: &Term| {
            t.pred_key().is_some_and(|k| self.ctx.domains().iter().any(|d| d.is_abducible(&k)))
        };
        let input = ProvenanceInput {
            subject: &session.id,
            action: session.action,
            policy: &self.policy.id,
            domain_versions: self.domain_versions(),
            created_at: created_at.to_string(),
            verdict: verdict.verdict.label(),
            answers: &answers,
            facts: &facts,
            condition_sets,
            chosen: Some(&chosen),
            proofs: &proofs,
            snippets: &snippets,
            abducibles: &abducible,
        };
        let provenance = emit_provenance(&input, Some(&document));
        Ok(LicenseBundle::new(document, provenance))
    }

    /// Latest answers in question order.
    pub fn answer_records(&self, session: &Session) -> Vec<AnswerRecord> {
        self.questions()
            .filter_map(|q| {
                let a = session.answers.get(&q.id)?;
                Some(AnswerRecord {
                    question_id: q.id.clone(),
                    question: q.text.clone(),
                    answer: a.to_string(),
                    fact: q.fact_for(&session.dataset).map(|f| f.to_string()),
                })
            })
            .collect()
    }

    pub fn domain_versions(&self) -> BTreeMap<String, String> {
        let mut out: BTreeMap<String, String> = self
            .ctx
            .domains()
            .iter()
            .map(|d| (d.id.clone(), d.version.clone()))
            .collect();
        out.insert(self.policy.id.clone(), self.policy.version.clone());
        out
    }
}
