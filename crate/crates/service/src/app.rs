//! Repository operations behind the HTTP routes and the command line.
//!
//! Every method is synchronous; the HTTP layer runs them on the blocking
//! pool. The store lock is never held across an evaluation.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use repolicy::compose::{ComposedVerdict, RepositoryPolicy, Verdict};
use repolicy::domain::{
    detect_contradictions, detect_silence, Action, ActionKind, ConditionSet, Context, DomainVerdict, FactBase,
};
use repolicy::engine::parse_ground_term;
use repolicy::interview::{Affirmation, Answer, Interviewer, Outcome, Question, Session};
use repolicy::license::LicenseBundle;
use repolicy::packs;
use repolicy::purpose::{evaluate_purpose, ProfileSource, PurposeProfile, PurposeRequest, Taxonomy, Triage};
use repolicy::store::{
    record_decision, replay_decision, DatasetRecord, Entry, EscalationTicket, HandlingMetadata, ReplayResult, Store,
};
use repolicy::transform::{register_derivation, Derivation, ParamValue, ToolAffirmation};

use crate::config::Config;
use crate::error::ApiError;

pub type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, Deserialize)]
pub struct StartSession {
    #[serde(default)]
    pub id: Option<String>,
    pub dataset: String,
    pub depositor: String,
    pub action: ActionKind,
    #[serde(default)]
    pub user: Option<String>,
    #[serde(default)]
    pub title: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionView {
    pub session: Session,
    pub questions: Vec<Question>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AnswerRequest {
    pub question_id: String,
    pub answer: Answer,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnswerResponse {
    /// Facts the answer asserted.
    pub facts: Vec<String>,
    pub questions: Vec<Question>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct ConcludeRequest {
    #[serde(default)]
    pub purpose: Option<PurposeRequest>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcludeResponse {
    pub outcome: Outcome,
    pub affirmations: Vec<Affirmation>,
    pub decision: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purpose: Option<Triage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ticket: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AffirmRequest {
    pub confirmed: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ToolAffirmationRequest {
    pub tool: String,
    pub condition: String,
    pub affirmed_by: String,
}

/// Registers `output` as derived from the dataset in the path.
#[derive(Debug, Clone, Deserialize)]
pub struct DerivationRequest {
    pub output: String,
    pub tool: String,
    /// Parameter values as text; numbers are read as fixed-point.
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    #[serde(default)]
    pub affirmations: Vec<ToolAffirmationRequest>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ReleaseRequest {
    pub dataset: String,
    pub user: String,
    #[serde(default)]
    pub purpose: Option<PurposeRequest>,
    /// Extra ground facts about the request, in rule syntax.
    #[serde(default)]
    pub facts: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DomainSummary {
    pub domain: String,
    pub verdict: &'static str,
    pub condition_sets: Vec<ConditionSet>,
    pub proofs: Vec<Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReleaseResponse {
    pub decision: String,
    /// `permitted`, `denied` or `human_review`.
    pub outcome: &'static str,
    pub condition_sets: Vec<ConditionSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub domains: Vec<DomainSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purpose: Option<Triage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ticket: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContradictionView {
    pub assignment: String,
    pub conditions: ConditionSet,
    pub permitted: Value,
    pub denied: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport<T> {
    pub domain: String,
    pub action: ActionKind,
    pub bound: usize,
    pub findings: Vec<T>,
}

pub struct Repository {
    interviewer: Interviewer,
    policy: Arc<RepositoryPolicy>,
    ctx: Arc<Context>,
    taxonomy: Taxonomy,
    default_profile: Option<PurposeProfile>,
    store: Mutex<Store>,
    session_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

fn read(path: &std::path::Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Resolves a policy setting: a shipped policy id or a manifest path.
pub fn load_policy(spec: &str) -> Result<RepositoryPolicy, String> {
    match spec {
        "ferpaOnly" => Ok(packs::ferpa_only_policy()),
        "universityX" => Ok(packs::university_x_policy()),
        path => RepositoryPolicy::parse(&read(path.as_ref())?).map_err(|e| e.to_string()),
    }
}

/// Loads the policy and domains named in `cfg` and builds their context.
pub fn load_context(cfg: &Config) -> Result<(RepositoryPolicy, Context), String> {
    let policy = load_policy(&cfg.policy)?;
    let domains = cfg
        .domains
        .iter()
        .map(|d| packs::load_domain(d).map(Arc::new).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let ctx = policy.context(&domains).map_err(|e| e.to_string())?;
    Ok((policy, ctx))
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn fresh_id(prefix: &str) -> String {
    format!("{prefix}-{}", uuid::Uuid::new_v4().simple())
}

impl Repository {
    pub fn new(
        policy: RepositoryPolicy,
        ctx: Context,
        bound: usize,
        taxonomy: Taxonomy,
        default_profile: Option<PurposeProfile>,
        store: Store,
    ) -> Repository {
        let policy = Arc::new(policy);
        let ctx = Arc::new(ctx);
        Repository {
            interviewer: Interviewer::new(policy.clone(), ctx.clone(), bound),
            policy,
            ctx,
            taxonomy,
            default_profile,
            store: Mutex::new(store),
            session_locks: Mutex::new(HashMap::new()),
        }
    }

    pub fn from_config(cfg: &Config) -> Result<Repository, String> {
        let (policy, ctx) = load_context(cfg)?;
        let taxonomy = match &cfg.taxonomy {
            Some(p) => Taxonomy::parse(&read(p)?).map_err(|e| e.to_string())?,
            None => packs::sample_taxonomy(),
        };
        let default_profile = match (&cfg.purpose_profile, &cfg.taxonomy) {
            (Some(p), _) => Some(PurposeProfile::parse(&read(p)?, &taxonomy).map_err(|e| e.to_string())?),
            (None, None) => Some(packs::sample_purpose_profile()),
            (None, Some(_)) => None,
        };
        let store = Store::open(&cfg.data_dir).map_err(|e| e.to_string())?;
        Ok(Repository::new(policy, ctx, cfg.bound, taxonomy, default_profile, store))
    }

    pub fn policy(&self) -> &RepositoryPolicy {
        &self.policy
    }

    pub fn context(&self) -> &Context {
        &self.ctx
    }

    pub fn interviewer(&self) -> &Interviewer {
        &self.interviewer
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    /// Runs `f` with the store locked.
    pub fn with_store<T>(&self, f: impl FnOnce(&mut Store) -> T) -> T {
        f(&mut self.store.lock().expect("store lock"))
    }

    fn session_lock(&self, id: &str) -> Arc<Mutex<()>> {
        self.session_locks.lock().expect("lock table").entry(id.to_string()).or_default().clone()
    }

    fn load_session(&self, id: &str) -> ApiResult<Session> {
        self.with_store(|s| s.session(id).cloned()).ok_or_else(|| ApiError::not_found("session", id))
    }

    fn save_session(&self, session: &Session) -> ApiResult<()> {
        self.with_store(|s| s.append(Entry::Session(session.clone())))?;
        Ok(())
    }

    /// Loads a session, applies `f` and stores the result, serialized per
    /// session.
    fn update_session<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> ApiResult<T>) -> ApiResult<T> {
        let lock = self.session_lock(id);
        let _guard = lock.lock().expect("session lock");
        let mut session = self.load_session(id)?;
        let before = session.clone();
        let out = f(&mut session);
        if session != before {
            self.save_session(&session)?;
        }
        out
    }

    /// Facts for evaluating actions on `dataset`: its stored facts plus the
    /// derivation lineage of every dataset in the store.
    pub fn facts_for(&self, dataset: &str) -> ApiResult<FactBase> {
        let (own, records) = self.with_store(|s| {
            let ids: Vec<String> = s.index().datasets.keys().cloned().collect();
            let records: Vec<DatasetRecord> = ids.iter().filter_map(|id| s.dataset(id).cloned()).collect();
            (s.dataset(dataset).cloned(), records)
        });
        let mut fb = FactBase::for_dataset(dataset);
        if let Some(rec) = own {
            for f in rec.facts.facts() {
                fb.insert(f.clone()).map_err(|e| ApiError::internal(e.to_string()))?;
            }
            fb.supplied_values = rec.facts.supplied_values.clone();
        }
        for rec in &records {
            for a in rec.facts.tool_affirmations() {
                fb.affirm_tool(a.clone());
            }
        }
        // Each derivation lives on its output's record; register parents first.
        let mut pending: Vec<Derivation> = records.iter().flat_map(|r| r.derivations.iter().cloned()).collect();
        while !pending.is_empty() {
            let known = |ds: &str| !pending.iter().any(|d| d.output == ds);
            let Some(pos) = pending.iter().position(|d| known(&d.input)) else {
                return Err(ApiError::internal("stored derivations form a cycle"));
            };
            let d = pending.remove(pos);
            fb = register_derivation(&fb, d, &[])?;
        }
        Ok(fb)
    }

    pub fn start_session(&self, req: StartSession) -> ApiResult<SessionView> {
        if req.action == ActionKind::Release && req.user.is_none() {
            return Err(ApiError::bad_request("release sessions need a `user`"));
        }
        let id = req.id.clone().unwrap_or_else(|| fresh_id("s"));
        if self.with_store(|s| s.session(&id).is_some()) {
            return Err(ApiError::new(axum::http::StatusCode::CONFLICT, "duplicate_session", format!("session `{id}` exists")));
        }
        if self.with_store(|s| s.dataset(&req.dataset).is_none()) {
            let mut rec = DatasetRecord::new(&req.dataset);
            rec.depositor = req.depositor.clone();
            rec.title = req.title.clone().unwrap_or_default();
            self.with_store(|s| s.put_dataset(rec))?;
        }
        let base = self.facts_for(&req.dataset)?;
        let mut session = self.interviewer.start(&id, &req.dataset, &req.depositor, req.action).with_base(base);
        if let Some(u) = &req.user {
            session = session.with_user(u);
        }
        let lock = self.session_lock(&id);
        let _guard = lock.lock().expect("session lock");
        let questions = self.interviewer.next_questions(&mut session)?;
        self.save_session(&session)?;
        Ok(SessionView { session, questions })
    }

    pub fn session(&self, id: &str) -> ApiResult<Session> {
        self.load_session(id)
    }

    pub fn questions(&self, id: &str) -> ApiResult<Vec<Question>> {
        self.update_session(id, |s| Ok(self.interviewer.next_questions(s)?))
    }

    pub fn answer(&self, id: &str, req: AnswerRequest) -> ApiResult<AnswerResponse> {
        self.update_session(id, |s| {
            let facts = self.interviewer.record_answer(s, &req.question_id, req.answer)?;
            let questions = self.interviewer.next_questions(s)?;
            Ok(AnswerResponse { facts: facts.iter().map(ToString::to_string).collect(), questions })
        })
    }

    fn profile_for(&self, dataset: &str) -> ApiResult<Option<PurposeProfile>> {
        let src = self.with_store(|s| s.dataset(dataset).and_then(|d| d.handling.as_ref()?.purpose.clone()));
        match src {
            Some(src) => Ok(Some(PurposeProfile::from_source(&src, &self.taxonomy)?)),
            None => Ok(self.default_profile.clone()),
        }
    }

    fn triage(&self, dataset: &str, purpose: Option<&PurposeRequest>) -> ApiResult<Option<Triage>> {
        let Some(req) = purpose else { return Ok(None) };
        let Some(profile) = self.profile_for(dataset)? else {
            return Err(ApiError::new(
                axum::http::StatusCode::UNPROCESSABLE_ENTITY,
                "no_purpose_profile",
                format!("dataset `{dataset}` has no purpose profile"),
            ));
        };
        Ok(Some(evaluate_purpose(&profile, req, &self.taxonomy)?))
    }

    fn open_ticket(&self, reason: &str, decision: &str, session: Option<&str>) -> ApiResult<String> {
        let ticket = EscalationTicket {
            id: fresh_id("t"),
            reason: reason.into(),
            decision: decision.into(),
            session: session.map(String::from),
        };
        let id = ticket.id.clone();
        self.with_store(|s| s.append(Entry::Ticket(ticket)))?;
        Ok(id)
    }

    fn update_dataset(&self, id: &str, f: impl FnOnce(&mut DatasetRecord)) -> ApiResult<DatasetRecord> {
        self.with_store(|s| {
            let mut rec = s.dataset(id).cloned().unwrap_or_else(|| DatasetRecord::new(id));
            f(&mut rec);
            s.put_dataset(rec)
        })
        .map_err(Into::into)
    }

    pub fn conclude(&self, id: &str, req: ConcludeRequest) -> ApiResult<ConcludeResponse> {
        self.update_session(id, |session| {
            let triage = self.triage(&session.dataset, req.purpose.as_ref())?;
            let already = session.outcome.is_some();
            let outcome = self.interviewer.conclude(session, triage.as_ref())?;
            let decision = format!("{}-decision", session.id);
            if already {
                return Ok(ConcludeResponse {
                    outcome,
                    affirmations: session.affirmations.clone(),
                    decision,
                    purpose: triage,
                    ticket: None,
                });
            }
            let action = self.interviewer.action(session);
            let facts = self.interviewer.facts(session);
            let (_, verdict) = self.with_store(|s| {
                record_decision(s, &decision, &self.policy, &self.ctx, &action, &facts, self.interviewer.bound())
            })?;
            let ticket = match &outcome {
                Outcome::HumanReview { reason } => Some(self.open_ticket(reason, &decision, Some(&session.id))?),
                _ => None,
            };
            let policy = self.policy.id.clone();
            self.update_dataset(&session.dataset, |rec| {
                let handling = rec.handling.get_or_insert_with(|| HandlingMetadata { policy, ..Default::default() });
                let sets = match &verdict.verdict {
                    Verdict::Permitted { condition_sets } => condition_sets.clone(),
                    _ => Vec::new(),
                };
                handling.verdicts.insert(session.action, (verdict.verdict.label().to_string(), sets));
                // The latest interview's answers describe the dataset.
                let mut stored = FactBase::for_dataset(&session.dataset);
                for a in rec.facts.tool_affirmations() {
                    stored.affirm_tool(a.clone());
                }
                for f in facts.facts() {
                    stored.insert(f.clone()).expect("stored facts are ground");
                }
                stored.supplied_values = facts.supplied_values.clone();
                rec.facts = stored;
            })?;
            Ok(ConcludeResponse {
                outcome,
                affirmations: session.affirmations.clone(),
                decision,
                purpose: triage,
                ticket,
            })
        })
    }

    /// Confirms the affirmations, then renders and stores the license.
    pub fn affirm(&self, id: &str, req: AffirmRequest) -> ApiResult<LicenseBundle> {
        let bundle = self.update_session(id, |session| {
            self.interviewer.affirm(session, &req.confirmed)?;
            let template = packs::template(session.action);
            Ok((self.interviewer.license(session, &template, &now())?, session.dataset.clone()))
        });
        let (bundle, dataset) = bundle?;
        self.with_store(|s| s.append(Entry::License { session: id.into(), bundle: Box::new(bundle.clone()) }))?;
        let hash = bundle.provenance.hash.clone();
        self.update_dataset(&dataset, |rec| rec.licenses.push(hash))?;
        Ok(bundle)
    }

    pub fn license(&self, id: &str) -> ApiResult<LicenseBundle> {
        self.load_session(id)?;
        self.with_store(|s| s.license(id).cloned()).ok_or_else(|| ApiError::not_found("license for session", id))
    }

    pub fn transcript(&self, id: &str) -> ApiResult<String> {
        Ok(self.load_session(id)?.transcript_text())
    }

    pub fn dataset(&self, id: &str) -> ApiResult<DatasetRecord> {
        self.with_store(|s| s.dataset(id).cloned()).ok_or_else(|| ApiError::not_found("dataset", id))
    }

    pub fn dataset_history(&self, id: &str) -> ApiResult<Vec<DatasetRecord>> {
        let h: Vec<DatasetRecord> = self.with_store(|s| s.dataset_history(id).into_iter().cloned().collect());
        if h.is_empty() {
            return Err(ApiError::not_found("dataset", id));
        }
        Ok(h)
    }

    pub fn add_derivation(&self, input: &str, req: DerivationRequest) -> ApiResult<DatasetRecord> {
        let parent = self.dataset(input)?;
        let mut d = Derivation::new(&req.output, input, &req.tool);
        for (k, v) in &req.params {
            d = d.param(k, ParamValue::parse(v));
        }
        let at = chrono::Utc::now();
        let affirmations: Vec<ToolAffirmation> = req
            .affirmations
            .iter()
            .map(|a| ToolAffirmation {
                tool: a.tool.clone(),
                condition: a.condition.clone(),
                affirmed_by: a.affirmed_by.clone(),
                timestamp: at,
            })
            .collect();
        // Validates against the whole lineage before anything is stored.
        register_derivation(&self.facts_for(input)?, d.clone(), &affirmations)?;
        let mut rec = DatasetRecord::new(&req.output);
        rec.depositor = parent.depositor.clone();
        rec.title = format!("{} ({})", if parent.title.is_empty() { &parent.id } else { &parent.title }, req.tool);
        rec.derivations.push(d);
        for a in affirmations {
            rec.facts.affirm_tool(a);
        }
        self.with_store(|s| s.put_dataset(rec)).map_err(Into::into)
    }

    pub fn set_purpose(&self, id: &str, src: ProfileSource) -> ApiResult<DatasetRecord> {
        self.dataset(id)?;
        PurposeProfile::from_source(&src, &self.taxonomy)?;
        let policy = self.policy.id.clone();
        self.update_dataset(id, |rec| {
            rec.handling.get_or_insert_with(|| HandlingMetadata { policy, ..Default::default() }).purpose = Some(src);
        })
    }

    pub fn release_request(&self, req: ReleaseRequest) -> ApiResult<ReleaseResponse> {
        let rec = self.dataset(&req.dataset)?;
        let mut facts = self.facts_for(&req.dataset)?;
        for f in &req.facts {
            let t = parse_ground_term(f).map_err(|e| ApiError::bad_request(format!("fact `{f}`: {e}")))?;
            facts.insert(t).map_err(|e| ApiError::bad_request(e.to_string()))?;
        }
        let triage = self.triage(&req.dataset, req.purpose.as_ref())?;
        let action = Action::release(&self.policy.id, &req.dataset, &req.user, &rec.depositor);
        let decision = fresh_id("d");
        let (_, verdict) = self.with_store(|s| {
            record_decision(s, &decision, &self.policy, &self.ctx, &action, &facts, self.interviewer.bound())
        })?;
        let (outcome, condition_sets, reason) = match (&verdict.verdict, &triage) {
            (Verdict::Denied, _) => ("denied", Vec::new(), None),
            (_, Some(Triage::Deny)) => ("denied", Vec::new(), Some("purpose".to_string())),
            (Verdict::Escalate { reason }, _) => ("human_review", Vec::new(), Some(reason.clone())),
            (_, Some(Triage::HumanReview { .. })) => ("human_review", Vec::new(), Some("purpose".to_string())),
            (Verdict::Permitted { condition_sets }, _) => ("permitted", condition_sets.clone(), None),
        };
        let ticket = match (outcome, &reason) {
            ("human_review", Some(r)) => Some(self.open_ticket(r, &decision, None)?),
            _ => None,
        };
        Ok(ReleaseResponse {
            decision,
            outcome,
            condition_sets,
            reason,
            domains: summarize(&verdict),
            purpose: triage,
            ticket,
        })
    }

    pub fn audit_contradictions(&self, domain: &str, kind: ActionKind, bound: usize) -> ApiResult<AuditReport<ContradictionView>> {
        let found = detect_contradictions(&self.ctx, domain, &Action::template(kind, "audit"), bound)?;
        Ok(AuditReport {
            domain: domain.into(),
            action: kind,
            bound,
            findings: found
                .into_iter()
                .map(|f| ContradictionView {
                    assignment: f.assignment.to_string(),
                    conditions: f.conditions,
                    permitted: f.permitted.summary(),
                    denied: f.denied.summary(),
                })
                .collect(),
        })
    }

    pub fn audit_silence(&self, domain: &str, kind: ActionKind, bound: usize) -> ApiResult<AuditReport<String>> {
        let found = detect_silence(&self.ctx, domain, &Action::template(kind, "audit"), bound)?;
        Ok(AuditReport {
            domain: domain.into(),
            action: kind,
            bound,
            findings: found.iter().map(ToString::to_string).collect(),
        })
    }

    pub fn replay(&self, decision: &str) -> ApiResult<ReplayResult> {
        let record = self.with_store(|s| s.decision(decision).cloned()).ok_or_else(|| ApiError::not_found("decision", decision))?;
        let resolve = |id: &str| (id == self.policy.id).then_some((&*self.policy, &*self.ctx));
        Ok(replay_decision(&record, &resolve)?)
    }
}

/// Per-domain verdicts with proof summaries.
pub fn summarize(verdict: &ComposedVerdict) -> Vec<DomainSummary> {
    verdict
        .domains
        .iter()
        .map(|(domain, v)| DomainSummary {
            domain: domain.clone(),
            verdict: v.label(),
            condition_sets: v.condition_sets().to_vec(),
            proofs: match v {
                DomainVerdict::Permitted { .. } | DomainVerdict::Denied { .. } => {
                    v.proofs().iter().map(|p| p.summary()).collect()
                }
                _ => Vec::new(),
            },
        })
        .collect()
}
