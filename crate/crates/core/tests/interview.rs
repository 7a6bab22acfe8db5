mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use repolicy::domain::ActionKind;
use repolicy::interview::{Answer, AnswerKind, InterviewError, Interviewer, Outcome, Session};
use repolicy::packs;

use common::*;

const YES_NO: [&str; 7] = [
    "ferpa_scope",
    "ferpa_identifiable",
    "ferpa_consent",
    "ferpa_studies",
    "ferpa_audit",
    "ferpa_directory",
    "ferpa_school_official",
];

/// Shared so its verdict cache carries over between cases.
fn interviewer() -> &'static Interviewer {
    static IV: OnceLock<Interviewer> = OnceLock::new();
    IV.get_or_init(|| {
        let policy = Arc::new(packs::ferpa_only_policy());
        let ctx = Arc::new(policy.context(&packs::builtin_domains()).unwrap());
        Interviewer::new(policy, ctx, 9)
    })
}

/// Answers every served question from `script` ("no" or a fixed text when
/// unscripted)
/// and returns the ids served, in order.
fn drive(iv: &Interviewer, session: &mut Session, script: &BTreeMap<&str, Answer>) -> Vec<String> {
    let mut served = Vec::new();
    loop {
        let next = iv.next_questions(session).unwrap();
        let Some(q) = next.first() else { return served };
        served.push(q.id.clone());
        let a = script.get(q.id.as_str()).cloned().unwrap_or_else(|| match q.kind {
            AnswerKind::YesNo => Answer::No,
            AnswerKind::Value => Answer::Value(format!("value for {}", q.id)),
        });
        iv.record_answer(session, &q.id, a).unwrap();
    }
}

/// Outcome of a FERPA-only release interview where every question would be
/// answered as in `yes`.
fn expected_outcome(yes: &BTreeSet<&str>) -> &'static str {
    let case = FerpaCase {
        in_scope: yes.contains("ferpa_scope"),
        identifiable: yes.contains("ferpa_identifiable"),
        consent: yes.contains("ferpa_consent"),
        studies: yes.contains("ferpa_studies"),
        audit: yes.contains("ferpa_audit"),
        epsilon_micros: None,
    };
    match ferpa_release_oracle(&case, 9) {
        Expected::OutOfScope | Expected::Permitted(_) => "permit",
        Expected::Silent => "human_review",
        Expected::Denied if yes.contains("ferpa_directory") || yes.contains("ferpa_school_official") => "human_review",
        Expected::Denied => "reject",
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Questions the interview skips could not have changed the outcome.
    #[test]
    fn skipped_questions_are_irrelevant(bits in 0u8..128) {
        let iv = interviewer();
        let yes: BTreeSet<&str> = YES_NO.iter().enumerate().filter(|(i, _)| bits >> i & 1 == 1).map(|(_, q)| *q).collect();
        let script: BTreeMap<&str, Answer> =
            YES_NO.iter().map(|q| (*q, if yes.contains(q) { Answer::Yes } else { Answer::No })).collect();
        let mut session = Session::new("s", "ds1", "depositor", ActionKind::Release).with_user("user");
        let served = drive(iv, &mut session, &script);
        let outcome = iv.conclude(&mut session, None).unwrap();
        prop_assert_eq!(outcome.label(), expected_outcome(&yes), "served {:?}", served);
        let unique: BTreeSet<&String> = served.iter().collect();
        prop_assert_eq!(unique.len(), served.len(), "a question was served twice");
    }
}

#[test]
fn out_of_scope_needs_one_question() {
    let iv = interviewer();
    let mut session = Session::new("s", "ds1", "depositor", ActionKind::Release);
    let served = drive(iv, &mut session, &[("ferpa_scope", Answer::No)].into_iter().collect());
    assert_eq!(served, vec!["ferpa_scope"]);
    assert!(matches!(iv.conclude(&mut session, None).unwrap(), Outcome::Permit { .. }));
}

#[test]
fn unknown_relevant_answer_goes_to_review() {
    let iv = interviewer();
    let mut session = Session::new("s", "ds1", "depositor", ActionKind::Release);
    let script = [("ferpa_scope", Answer::Yes), ("ferpa_identifiable", Answer::DontKnow)].into_iter().collect();
    let mut script: BTreeMap<&str, Answer> = script;
    for q in &YES_NO[2..] {
        script.insert(q, Answer::No);
    }
    drive(iv, &mut session, &script);
    let outcome = iv.conclude(&mut session, None).unwrap();
    assert!(matches!(&outcome, Outcome::HumanReview { reason } if reason.contains("ferpa_identifiable")), "{outcome:?}");
    assert!(session.affirmations.is_empty());
}

#[test]
fn protocol_errors() {
    let iv = interviewer();
    let mut session = Session::new("s", "ds1", "depositor", ActionKind::Release);
    assert!(matches!(iv.record_answer(&mut session, "nope", Answer::Yes), Err(InterviewError::UnknownQuestion(_))));
    assert!(matches!(
        iv.record_answer(&mut session, "ferpa_identifiable", Answer::Yes),
        Err(InterviewError::UnservedQuestion(_))
    ));
    assert_eq!(iv.next_questions(&mut session).unwrap()[0].id, "ferpa_scope");
    assert!(matches!(
        iv.record_answer(&mut session, "ferpa_scope", Answer::Value("x".into())),
        Err(InterviewError::TypeMismatch { .. })
    ));
    assert!(matches!(iv.conclude(&mut session, None), Err(InterviewError::IncompleteInterview { .. })));
    assert!(matches!(iv.affirm(&mut session, &[]), Err(InterviewError::NotConcluded)));

    iv.record_answer(&mut session, "ferpa_scope", Answer::Yes).unwrap();
    let script = YES_NO.iter().map(|q| (*q, Answer::No)).chain([("ferpa_scope", Answer::Yes)]).collect();
    let mut script: BTreeMap<&str, Answer> = script;
    script.insert("ferpa_identifiable", Answer::Yes);
    drive(iv, &mut session, &script);
    assert_eq!(iv.conclude(&mut session, None).unwrap(), Outcome::Reject);
    assert!(matches!(iv.record_answer(&mut session, "ferpa_scope", Answer::No), Err(InterviewError::AlreadyConcluded)));
    let template = packs::template(ActionKind::Release);
    assert!(matches!(iv.license(&session, &template, "2024-01-01T00:00:00Z"), Err(InterviewError::NotPermitted)));
}

#[test]
fn license_needs_every_affirmation() {
    let iv = interviewer();
    let mut session = Session::new("s", "ds1", "depositor", ActionKind::Release).with_user("user");
    let script: BTreeMap<&str, Answer> = [
        ("ferpa_scope", Answer::Yes),
        ("ferpa_identifiable", Answer::Yes),
        ("ferpa_consent", Answer::Yes),
    ]
    .into_iter()
    .collect();
    drive(iv, &mut session, &script);
    let Outcome::Permit { condition_sets } = iv.conclude(&mut session, None).unwrap() else { panic!("not permitted") };
    let sets: Vec<BTreeSet<String>> = condition_sets.iter().map(|cs| cs.iter().map(String::from).collect()).collect();
    assert_eq!(sets, vec![set(&CONSENT_SET)]);
    assert!(!session.affirmations.is_empty());
    assert!(matches!(iv.affirm(&mut session, &[]), Err(InterviewError::Unconfirmed(_))));
    let ids: Vec<String> = session.affirmations.iter().map(|a| a.id.clone()).collect();
    iv.affirm(&mut session, &ids).unwrap();
    let bundle = iv.license(&session, &packs::template(ActionKind::Release), "2024-01-01T00:00:00Z").unwrap();
    assert!(bundle.provenance.verify());
    for a in &session.affirmations {
        assert!(bundle.document.text.contains(&a.text), "missing affirmation {}", a.id);
    }
}
