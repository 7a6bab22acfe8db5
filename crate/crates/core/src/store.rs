//! Append-only log of sessions, decisions, licenses and dataset records,
//! with an index snapshot beside it.
//!
//! The log is JSON lines; every line is one [`LogLine`]. The index is a
//! derived convenience and is rebuilt from the log when missing or stale.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::compose::{compose, ComposedVerdict, RepositoryPolicy};
use crate::domain::{Action, ActionKind, ConditionSet, Context, DomainError, FactBase};
use crate::interview::Session;
use crate::license::LicenseBundle;
use crate::purpose::ProfileSource;
use crate::transform::Derivation;

pub const LOG_FILE: &str = "log.jsonl";
pub const INDEX_FILE: &str = "index.json";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path} line {line}: {message}")]
    Corrupt { path: String, line: usize, message: String },
    #[error("decision {id} was made with {domain} {recorded}, loaded version is {loaded}")]
    VersionUnavailable { id: String, domain: String, recorded: String, loaded: String },
    #[error("no policy `{0}` available for replay")]
    UnknownPolicy(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> StoreError {
    StoreError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// One evaluated action, with everything needed to evaluate it again.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub id: String,
    pub policy: String,
    pub domain_versions: BTreeMap<String, String>,
    pub bound: usize,
    pub action: Action,
    pub facts: FactBase,
    /// The composed verdict, serialized.
    pub verdict: String,
}

/// The repository's handling requirements for a dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HandlingMetadata {
    pub policy: String,
    /// Verdict label and condition sets per action kind decided so far.
    pub verdicts: BTreeMap<ActionKind, (String, Vec<ConditionSet>)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purpose: Option<ProfileSource>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub depositor: String,
    /// Increases by one with every stored change.
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub handling: Option<HandlingMetadata>,
    #[serde(default)]
    pub derivations: Vec<Derivation>,
    /// Hashes of the provenance records of issued licenses.
    #[serde(default)]
    pub licenses: Vec<String>,
    /// Tool-derived facts about the dataset, fed into later decisions.
    #[serde(default)]
    pub facts: FactBase,
}

impl DatasetRecord {
    pub fn new(id: &str) -> Self {
        DatasetRecord {
            id: id.into(),
            title: String::new(),
            depositor: String::new(),
            version: 0,
            handling: None,
            derivations: Vec::new(),
            licenses: Vec::new(),
            facts: FactBase::for_dataset(id),
        }
    }
}

/// A case handed to a person, with the context needed to decide it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EscalationTicket {
    pub id: String,
    pub reason: String,
    pub decision: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Entry {
    Session(Session),
    Decision(DecisionRecord),
    License { session: String, bundle: Box<LicenseBundle> },
    Dataset(DatasetRecord),
    Ticket(EscalationTicket),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLine {
    pub seq: u64,
    pub at: String,
    pub entry: Entry,
}

/// Latest line number per key, for each kind of entry.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Index {
    pub lines: u64,
    pub sessions: BTreeMap<String, u64>,
    pub decisions: BTreeMap<String, u64>,
    pub licenses: BTreeMap<String, u64>,
    pub datasets: BTreeMap<String, u64>,
    pub tickets: BTreeMap<String, u64>,
}

impl Index {
    fn note(&mut self, line: &LogLine) {
        let seq = line.seq;
        match &line.entry {
            Entry::Session(s) => self.sessions.insert(s.id.clone(), seq),
            Entry::Decision(d) => self.decisions.insert(d.id.clone(), seq),
            Entry::License { session, .. } => self.licenses.insert(session.clone(), seq),
            Entry::Dataset(d) => self.datasets.insert(d.id.clone(), seq),
            Entry::Ticket(t) => self.tickets.insert(t.id.clone(), seq),
        };
        self.lines = seq + 1;
    }
}

/// The log, either on disk or in memory. Lines are never rewritten.
#[derive(Debug)]
pub struct Store {
    dir: Option<PathBuf>,
    file: Option<File>,
    lines: Vec<LogLine>,
    index: Index,
}

impl Store {
    pub fn in_memory() -> Store {
        Store { dir: None, file: None, lines: Vec::new(), index: Index::default() }
    }

    /// Opens or creates the log in `dir`.
    pub fn open(dir: &Path) -> Result<Store, StoreError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let path = dir.join(LOG_FILE);
        let mut lines = Vec::new();
        let mut index = Index::default();
        if path.exists() {
            let f = File::open(&path).map_err(|e| io_err(&path, e))?;
            for (i, raw) in BufReader::new(f).lines().enumerate() {
                let raw = raw.map_err(|e| io_err(&path, e))?;
                if raw.trim().is_empty() {
                    continue;
                }
                let line: LogLine = serde_json::from_str(&raw).map_err(|e| StoreError::Corrupt {
                    path: path.display().to_string(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
                if line.seq != lines.len() as u64 {
                    return Err(StoreError::Corrupt {
                        path: path.display().to_string(),
                        line: i + 1,
                        message: format!("sequence {} out of order", line.seq),
                    });
                }
                index.note(&line);
                lines.push(line);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(|e| io_err(&path, e))?;
        let store = Store { dir: Some(dir.to_path_buf()), file: Some(file), lines, index };
        store.write_index()?;
        Ok(store)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Appends one entry and returns its sequence number.
    pub fn append(&mut self, entry: Entry) -> Result<u64, StoreError> {
        let line = LogLine { seq: self.lines.len() as u64, at: chrono::Utc::now().to_rfc3339(), entry };
        if let (Some(f), Some(dir)) = (self.file.as_mut(), self.dir.as_ref()) {
            let mut text = serde_json::to_string(&line).expect("log lines serialize");
            text.push('\n');
            let path = dir.join(LOG_FILE);
            f.write_all(text.as_bytes()).map_err(|e| io_err(&path, e))?;
            f.flush().map_err(|e| io_err(&path, e))?;
        }
        self.index.note(&line);
        let seq = line.seq;
        self.lines.push(line);
        Ok(seq)
    }

    /// Rewrites the index snapshot next to the log.
    pub fn write_index(&self) -> Result<(), StoreError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(INDEX_FILE);
        let tmp = dir.join(format!("{INDEX_FILE}.tmp"));
        let text = serde_json::to_string_pretty(&self.index).expect("index serializes");
        fs::write(&tmp, text).map_err(|e| io_err(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| io_err(&path, e))
    }

    pub fn index(&self) -> &Index {
        &self.index
    }

    pub fn lines(&self) -> &[LogLine] {
        &self.lines
    }

    fn at(&self, seq: Option<&u64>) -> Option<&Entry> {
        seq.and_then(|s| self.lines.get(*s as usize)).map(|l| &l.entry)
    }

    pub fn session(&self, id: &str) -> Option<&Session> {
        match self.at(self.index.sessions.get(id)) {
            Some(Entry::Session(s)) => Some(s),
            _ => None,
        }
    }

    pub fn decision(&self, id: &str) -> Option<&DecisionRecord> {
        match self.at(self.index.decisions.get(id)) {
            Some(Entry::Decision(d)) => Some(d),
            _ => None,
        }
    }

    pub fn license(&self, session: &str) -> Option<&LicenseBundle> {
        match self.at(self.index.licenses.get(session)) {
            Some(Entry::License { bundle, .. }) => Some(bundle),
            _ => None,
        }
    }

    pub fn dataset(&self, id: &str) -> Option<&DatasetRecord> {
        match self.at(self.index.datasets.get(id)) {
            Some(Entry::Dataset(d)) => Some(d),
            _ => None,
        }
    }

    /// Every stored version of a dataset, oldest first.
    pub fn dataset_history(&self, id: &str) -> Vec<&DatasetRecord> {
        self.lines
            .iter()
            .filter_map(|l| match &l.entry {
                Entry::Dataset(d) if d.id == id => Some(d),
                _ => None,
            })
            .collect()
    }

    pub fn ticket(&self, id: &str) -> Option<&EscalationTicket> {
        match self.at(self.index.tickets.get(id)) {
            Some(Entry::Ticket(t)) => Some(t),
            _ => None,
        }
    }

    pub fn decisions(&self) -> impl Iterator<Item = &DecisionRecord> {
        self.lines.iter().filter_map(|l| match &l.entry {
            Entry::Decision(d) => Some(d),
            _ => None,
        })
    }

    /// Stores a new version of a dataset record, numbering it.
    pub fn put_dataset(&mut self, mut record: DatasetRecord) -> Result<DatasetRecord, StoreError> {
        record.version = self.dataset(&record.id).map_or(1, |d| d.version + 1);
        self.append(Entry::Dataset(record.clone()))?;
        Ok(record)
    }
}

/// Versions of the policy and its domains as loaded in `ctx`.
pub fn loaded_versions(policy: &RepositoryPolicy, ctx: &Context) -> BTreeMap<String, String> {
    let mut out: BTreeMap<String, String> = ctx.domains().iter().map(|d| (d.id.clone(), d.version.clone())).collect();
    out.insert(policy.id.clone(), policy.version.clone());
    out
}

/// Evaluates `action`, appends the decision to `store` and returns it.
pub fn record_decision(
    store: &mut Store,
    id: &str,
    policy: &RepositoryPolicy,
    ctx: &Context,
    action: &Action,
    facts: &FactBase,
    bound: usize,
) -> Result<(DecisionRecord, ComposedVerdict), StoreError> {
    let verdict = compose(policy, ctx, action, facts, bound)?;
    let record = DecisionRecord {
        id: id.into(),
        policy: policy.id.clone(),
        domain_versions: loaded_versions(policy, ctx),
        bound,
        action: action.clone(),
        facts: facts.clone(),
        verdict: serde_json::to_string(&verdict).expect("verdicts serialize"),
    };
    store.append(Entry::Decision(record.clone()))?;
    Ok((record, verdict))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplayResult {
    pub id: String,
    pub identical: bool,
    pub recorded: String,
    pub replayed: String,
}

/// Re-evaluates a stored decision. `resolve` supplies the policy and
/// context for a policy id; the loaded versions must match the recorded
/// ones.
pub fn replay_decision<'a>(
    record: &DecisionRecord,
    resolve: &dyn Fn(&str) -> Option<(&'a RepositoryPolicy, &'a Context)>,
) -> Result<ReplayResult, StoreError> {
    let (policy, ctx) = resolve(&record.policy).ok_or_else(|| StoreError::UnknownPolicy(record.policy.clone()))?;
    let loaded = loaded_versions(policy, ctx);
    for (domain, recorded) in &record.domain_versions {
        let have = loaded.get(domain).cloned().unwrap_or_else(|| "none".into());
        if &have != recorded {
            return Err(StoreError::VersionUnavailable {
                id: record.id.clone(),
                domain: domain.clone(),
                recorded: recorded.clone(),
                loaded: have,
            });
        }
    }
    let verdict = compose(policy, ctx, &record.action, &record.facts, record.bound)?;
    let replayed = serde_json::to_string(&verdict).expect("verdicts serialize");
    Ok(ReplayResult {
        id: record.id.clone(),
        identical: replayed == record.verdict,
        recorded: record.verdict.clone(),
        replayed,
    })
}

/// Replays every decision in the store.
pub fn replay_all<'a>(
    store: &Store,
    resolve: &dyn Fn(&str) -> Option<(&'a RepositoryPolicy, &'a Context)>,
) -> Result<Vec<ReplayResult>, StoreError> {
    store.decisions().map(|d| replay_decision(d, resolve)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reopened_log_keeps_sequence_and_index() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut s = Store::open(dir.path()).unwrap();
            s.put_dataset(DatasetRecord::new("ds1")).unwrap();
            s.put_dataset(DatasetRecord::new("ds1")).unwrap();
        }
        let s = Store::open(dir.path()).unwrap();
        assert_eq!(s.lines().len(), 2);
        assert_eq!(s.dataset("ds1").unwrap().version, 2);
        assert_eq!(s.dataset_history("ds1").len(), 2);
        assert!(dir.path().join(INDEX_FILE).exists());
    }

    #[test]
    fn corrupt_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(LOG_FILE), "{not json}\n").unwrap();
        assert!(matches!(Store::open(dir.path()), Err(StoreError::Corrupt { line: 1, .. })));
    }
}
