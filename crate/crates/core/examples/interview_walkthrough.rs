//! Scripted depositor interview for a release under the studies exception,
//! ending with the license text.

use std::collections::BTreeMap;
use std::sync::Arc;

use repolicy::domain::ActionKind;
use repolicy::interview::{Answer, Interviewer, Session};
use repolicy::packs;

fn main() {
    let policy = Arc::new(packs::ferpa_only_policy());
    let ctx = Arc::new(policy.context(&packs::builtin_domains()).expect("policy context"));
    let interviewer = Interviewer::new(policy, ctx, 9);

    let script: BTreeMap<&str, Answer> = [
        ("ferpa_scope", Answer::Yes),
        ("ferpa_identifiable", Answer::Yes),
        ("ferpa_consent", Answer::No),
        ("ferpa_studies", Answer::Yes),
        ("ferpa_audit", Answer::No),
        ("ferpa_directory", Answer::No),
        ("ferpa_school_official", Answer::No),
        ("ferpa_study_purpose", Answer::Value("improve instruction in early literacy".into())),
        ("ferpa_study_start", Answer::Value("2020-01-01".into())),
        ("ferpa_study_end", Answer::Value("2022-12-31".into())),
        ("ferpa_study_topics", Answer::Value("reading fluency, classroom interventions".into())),
        ("ferpa_data_description", Answer::Value("grade 3 reading assessment scores".into())),
    ]
    .into_iter()
    .collect();

    let mut session = Session::new("s1", "ds1", "depositor", ActionKind::Release).with_user("researcher");
    loop {
        let next = interviewer.next_questions(&mut session).expect("next questions");
        let Some(q) = next.first() else { break };
        let answer = script[q.id.as_str()].clone();
        println!("Q [{}] {}\nA {answer}\n", q.id, q.text);
        interviewer.record_answer(&mut session, &q.id, answer).expect("answer");
    }
    let outcome = interviewer.conclude(&mut session, None).expect("conclude");
    println!("outcome: {outcome:?}\n");
    for a in &session.affirmations {
        println!("[ ] {}", a.text);
    }
    let ids: Vec<String> = session.affirmations.iter().map(|a| a.id.clone()).collect();
    interviewer.affirm(&mut session, &ids).expect("affirm");
    let bundle = interviewer
        .license(&session, &packs::template(ActionKind::Release), "2024-01-01T00:00:00Z")
        .expect("license");
    println!("\n{}", bundle.document.text);
    println!("provenance {} ({} chain entries)", bundle.provenance.hash, bundle.provenance.chain.len());
}
