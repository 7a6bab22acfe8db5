//! Renders a data-use agreement for the studies condition set from
//! supplied values, then prints its provenance hash.

use std::collections::BTreeMap;
use std::sync::Arc;

use repolicy::domain::ActionKind;
use repolicy::interview::{Answer, Interviewer, Session};
use repolicy::packs;

fn main() {
    let policy = Arc::new(packs::ferpa_only_policy());
    let ctx = Arc::new(policy.context(&packs::builtin_domains()).expect("context"));
    let interviewer = Interviewer::new(policy, ctx, 9);
    let answers: BTreeMap<&str, Answer> = [
        ("ferpa_scope", Answer::Yes),
        ("ferpa_identifiable", Answer::Yes),
        ("ferpa_consent", Answer::No),
        ("ferpa_studies", Answer::Yes),
        ("ferpa_study_purpose", Answer::Value("evaluate a summer reading program".into())),
        ("ferpa_study_start", Answer::Value("2025-06-01".into())),
        ("ferpa_study_end", Answer::Value("2026-05-31".into())),
        ("ferpa_study_topics", Answer::Value("summer learning loss".into())),
        ("ferpa_data_description", Answer::Value("district reading assessments, grades 2 to 4".into())),
    ]
    .into_iter()
    .collect();

    let mut session = Session::new("demo", "ds1", "depositor", ActionKind::Release).with_user("researcher");
    while let Some(q) = interviewer.next_questions(&mut session).expect("questions").first().cloned() {
        let a = answers.get(q.id.as_str()).cloned().unwrap_or(Answer::No);
        interviewer.record_answer(&mut session, &q.id, a).expect("answer");
    }
    interviewer.conclude(&mut session, None).expect("conclude");
    let ids: Vec<String> = session.affirmations.iter().map(|a| a.id.clone()).collect();
    interviewer.affirm(&mut session, &ids).expect("affirm");
    let bundle = interviewer
        .license(&session, &packs::template(ActionKind::Release), &chrono::Utc::now().to_rfc3339())
        .expect("license");
    println!("{}", bundle.document.text);
    println!("---");
    for entry in &bundle.provenance.chain {
        println!("{:<40} {}", entry.term, entry.rules.join(", "));
    }
    println!("provenance hash {} (verifies: {})", bundle.provenance.hash, bundle.provenance.verify());
}
