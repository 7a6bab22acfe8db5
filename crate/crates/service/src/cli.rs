//! The `repolicy` command line.

use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use repolicy::compose::{compose, Verdict};
use repolicy::domain::{detect_contradictions, detect_silence, Action, ActionKind, FactBase};
use repolicy::interview::{Answer, AnswerKind, Outcome};
use repolicy::packs;
use repolicy::purpose::PurposeRequest;
use repolicy::store::{replay_all, Store};

use crate::app::{AffirmRequest, AnswerRequest, ConcludeRequest, Repository, StartSession};
use crate::config::Config;

#[derive(Debug, Parser)]
#[command(name = "repolicy", version, about = "Deposit and release decisions for data repositories")]
pub struct Cli {
    /// Service configuration file; `REPOLICY_*` variables override it.
    #[arg(long, global = true, env = "REPOLICY_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Domain pack checks.
    #[command(subcommand)]
    Domain(DomainCommand),
    /// Evaluates one action against a fact file.
    Decide(DecideArgs),
    /// Runs a depositor interview.
    Interview(InterviewArgs),
    /// License documents.
    #[command(subcommand)]
    License(LicenseCommand),
    /// Domain audits.
    #[command(subcommand)]
    Audit(AuditCommand),
    /// Re-evaluates every stored decision and reports differences.
    Replay,
    /// Starts the HTTP service.
    Serve,
}

#[derive(Debug, Subcommand)]
pub enum DomainCommand {
    /// Loads a pack (directory, manifest or shipped id) and reports its contents.
    Check { manifest: String },
}

#[derive(Debug, Args)]
pub struct DecideArgs {
    pub action: ActionKind,
    /// Fact file in the text fact format.
    #[arg(long)]
    pub facts: PathBuf,
    #[arg(long, default_value = "ds")]
    pub dataset: String,
    #[arg(long, default_value = "depositor")]
    pub depositor: String,
    #[arg(long, default_value = "user")]
    pub user: String,
    /// Overrides the configured policy.
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub bound: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InterviewArgs {
    /// Reads answers from the terminal.
    #[arg(long)]
    pub terminal: bool,
    #[arg(long, default_value = "release")]
    pub action: ActionKind,
    #[arg(long, default_value = "ds1")]
    pub dataset: String,
    #[arg(long, default_value = "depositor")]
    pub depositor: String,
    #[arg(long)]
    pub user: Option<String>,
    /// Comma-separated purpose codes for a release.
    #[arg(long, value_delimiter = ',')]
    pub purpose: Vec<String>,
    #[arg(long, default_value = "")]
    pub purpose_text: String,
}

#[derive(Debug, Subcommand)]
pub enum LicenseCommand {
    /// Prints the license issued for a session.
    Render {
        #[arg(long)]
        session: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum AuditCommand {
    Contradictions(AuditArgs),
    Silence(AuditArgs),
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long, default_value = "ferpa")]
    pub domain: String,
    #[arg(long, default_value_t = 9)]
    pub bound: usize,
    #[arg(long, default_value = "release")]
    pub action: ActionKind,
}

pub type CliResult = Result<(), String>;

pub fn run(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write) -> CliResult {
    let mut cfg = Config::load(cli.config.as_deref()).map_err(|e| e.to_string())?;
    let w = |e: std::io::Error| e.to_string();
    match cli.command {
        Command::Domain(DomainCommand::Check { manifest }) => {
            let d = packs::load_domain(&manifest).map_err(|e| e.to_string())?;
            writeln!(out, "{} {} ({})", d.id, d.version, d.title).map_err(w)?;
            writeln!(out, "rules: {}", d.program().clauses().len()).map_err(w)?;
            writeln!(out, "abducibles: {}", d.abducibles().len()).map_err(w)?;
            writeln!(out, "conditions: {}", d.conditions().len()).map_err(w)?;
            writeln!(out, "questions: {}", d.questions().len()).map_err(w)?;
            writeln!(out, "ok").map_err(w)?;
        }
        Command::Decide(args) => {
            if let Some(p) = args.policy {
                cfg.policy = p;
            }
            let (policy, ctx) = crate::app::load_context(&cfg)?;
            let text = std::fs::read_to_string(&args.facts).map_err(|e| format!("{}: {e}", args.facts.display()))?;
            let facts = FactBase::parse(&text).map_err(|e| format!("{}: {e}", args.facts.display()))?;
            let dataset = facts.dataset().unwrap_or(&args.dataset).to_string();
            let action = match args.action {
                ActionKind::Deposit => Action::deposit(&args.depositor, &dataset, &policy.id),
                ActionKind::Accept => Action::accept(&policy.id, &dataset, &args.depositor),
                ActionKind::Release => Action::release(&policy.id, &dataset, &args.user, &args.depositor),
            };
            let v = compose(&policy, &ctx, &action, &facts, args.bound.unwrap_or(cfg.bound)).map_err(|e| e.to_string())?;
            for (domain, dv) in &v.domains {
                writeln!(out, "{domain}: {}", dv.label()).map_err(w)?;
            }
            match &v.verdict {
                Verdict::Permitted { condition_sets } => {
                    for cs in condition_sets {
                        writeln!(out, "PERMITTED, CS={cs}").map_err(w)?;
                    }
                }
                Verdict::Denied => writeln!(out, "DENIED").map_err(w)?,
                Verdict::Escalate { reason } => writeln!(out, "ESCALATE: {reason}").map_err(w)?,
            }
        }
        Command::Interview(args) => {
            if !args.terminal {
                return Err("only terminal interviews are supported here; pass --terminal or use the HTTP service".into());
            }
            let repo = Repository::from_config(&cfg)?;
            interview(&repo, &args, input, out)?;
        }
        Command::License(LicenseCommand::Render { session }) => {
            let store = Store::open(&cfg.data_dir).map_err(|e| e.to_string())?;
            let bundle = store.license(&session).ok_or_else(|| format!("no license for session `{session}`"))?;
            writeln!(out, "{}", bundle.document.text).map_err(w)?;
            writeln!(out, "provenance: {}", bundle.provenance.hash).map_err(w)?;
        }
        Command::Audit(cmd) => {
            let (_, ctx) = crate::app::load_context(&cfg)?;
            match cmd {
                AuditCommand::Contradictions(a) => {
                    let found = detect_contradictions(&ctx, &a.domain, &Action::template(a.action, "audit"), a.bound)
                        .map_err(|e| e.to_string())?;
                    writeln!(out, "{} contradiction(s) in {} at bound {}", found.len(), a.domain, a.bound).map_err(w)?;
                    for f in found {
                        writeln!(out, "  {} with {}", f.assignment, f.conditions).map_err(w)?;
                    }
                }
                AuditCommand::Silence(a) => {
                    let found = detect_silence(&ctx, &a.domain, &Action::template(a.action, "audit"), a.bound)
                        .map_err(|e| e.to_string())?;
                    writeln!(out, "{} silent assignment(s) in {} at bound {}", found.len(), a.domain, a.bound).map_err(w)?;
                    for f in found {
                        writeln!(out, "  {f}").map_err(w)?;
                    }
                }
            }
        }
        Command::Replay => {
            let repo = Repository::from_config(&cfg)?;
            let resolve = |id: &str| (id == repo.policy().id).then_some((repo.policy(), repo.context()));
            let results = repo.with_store(|s| replay_all(s, &resolve)).map_err(|e| e.to_string())?;
            let differing = results.iter().filter(|r| !r.identical).count();
            for r in results.iter().filter(|r| !r.identical) {
                writeln!(out, "DIFFERS {}", r.id).map_err(w)?;
            }
            writeln!(out, "{} decision(s) replayed, {differing} differ", results.len()).map_err(w)?;
            if differing > 0 {
                return Err(format!("{differing} decision(s) replay differently"));
            }
        }
        Command::Serve => {
            let rt = tokio::runtime::Runtime::new().map_err(w)?;
            rt.block_on(crate::serve(cfg))?;
        }
    }
    Ok(())
}

fn prompt(input: &mut dyn BufRead, out: &mut dyn Write, text: &str) -> Result<String, String> {
    write!(out, "{text}").map_err(|e| e.to_string())?;
    out.flush().map_err(|e| e.to_string())?;
    let mut line = String::new();
    if input.read_line(&mut line).map_err(|e| e.to_string())? == 0 {
        return Err("input ended before the interview finished".into());
    }
    Ok(line.trim().to_string())
}

fn parse_yes_no(text: &str) -> Option<Answer> {
    match text.to_ascii_lowercase().as_str() {
        "y" | "yes" => Some(Answer::Yes),
        "n" | "no" => Some(Answer::No),
        "?" | "dk" | "don't know" | "dont know" => Some(Answer::DontKnow),
        _ => None,
    }
}

/// Question-and-answer loop on a text stream, ending with the license.
pub fn interview(repo: &Repository, args: &InterviewArgs, input: &mut dyn BufRead, out: &mut dyn Write) -> CliResult {
    let w = |e: std::io::Error| e.to_string();
    let user = match args.action {
        ActionKind::Release => Some(args.user.clone().unwrap_or_else(|| "user".into())),
        _ => args.user.clone(),
    };
    let view = repo
        .start_session(StartSession {
            id: None,
            dataset: args.dataset.clone(),
            depositor: args.depositor.clone(),
            action: args.action,
            user,
            title: None,
        })
        .map_err(|e| e.message)?;
    let id = view.session.id.clone();
    writeln!(out, "session {id}").map_err(w)?;
    let mut questions = view.questions;
    while let Some(q) = questions.first().cloned() {
        writeln!(out, "\n{}", q.text).map_err(w)?;
        for t in &q.terms {
            writeln!(out, "  {}: {}", t.term, t.definition).map_err(w)?;
        }
        let answer = loop {
            let line = match q.kind {
                AnswerKind::YesNo => prompt(input, out, "[yes/no/?] > ")?,
                AnswerKind::Value => prompt(input, out, "> ")?,
            };
            match q.kind {
                AnswerKind::YesNo => match parse_yes_no(&line) {
                    Some(a) => break a,
                    None => writeln!(out, "please answer yes, no or ?").map_err(w)?,
                },
                AnswerKind::Value if line.is_empty() => writeln!(out, "a value is required").map_err(w)?,
                AnswerKind::Value => break Answer::Value(line),
            }
        };
        questions = repo
            .answer(&id, AnswerRequest { question_id: q.id.clone(), answer })
            .map_err(|e| e.message)?
            .questions;
    }
    let purpose = (!args.purpose.is_empty() || !args.purpose_text.is_empty())
        .then(|| PurposeRequest::new(args.purpose.iter().cloned(), &args.purpose_text));
    let concluded = repo.conclude(&id, ConcludeRequest { purpose }).map_err(|e| e.message)?;
    match &concluded.outcome {
        Outcome::Permit { condition_sets } => {
            writeln!(out, "\nPERMIT").map_err(w)?;
            for cs in condition_sets {
                writeln!(out, "  CS={cs}").map_err(w)?;
            }
        }
        Outcome::HumanReview { reason } => {
            writeln!(out, "\nHUMAN REVIEW: {reason}").map_err(w)?;
            return Ok(());
        }
        Outcome::Reject => {
            writeln!(out, "\nREJECT").map_err(w)?;
            return Ok(());
        }
    }
    if !concluded.affirmations.is_empty() {
        writeln!(out, "\nPlease confirm:").map_err(w)?;
        for a in &concluded.affirmations {
            writeln!(out, "  - {}", a.text).map_err(w)?;
        }
        let line = prompt(input, out, "Confirm all of the above? [yes/no] > ")?;
        if parse_yes_no(&line) != Some(Answer::Yes) {
            writeln!(out, "not confirmed; no license issued").map_err(w)?;
            return Ok(());
        }
    }
    let confirmed = concluded.affirmations.iter().map(|a| a.id.clone()).collect();
    let bundle = repo.affirm(&id, AffirmRequest { confirmed }).map_err(|e| e.message)?;
    writeln!(out, "\n{}", bundle.document.text).map_err(w)?;
    writeln!(out, "provenance: {}", bundle.provenance.hash).map_err(w)?;
    Ok(())
}
