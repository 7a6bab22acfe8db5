use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use repolicy::packs;
use repolicy::purpose::Taxonomy;
use repolicy::store::Store;
use repolicy_service::app::Repository;
use repolicy_service::routes::{router, AppState};

fn repository(policy: &str, store: Store) -> Repository {
    let policy = repolicy_service::app::load_policy(policy).unwrap();
    let ctx = policy.context(&packs::builtin_domains()).unwrap();
    let taxonomy: Taxonomy = packs::sample_taxonomy();
    Repository::new(policy, ctx, 9, taxonomy, Some(packs::sample_purpose_profile()), store)
}

fn app(token: Option<&str>) -> Router {
    router(AppState::new(repository("ferpaOnly", Store::in_memory()), token.map(String::from)))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(b) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(b.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, value)
}

fn script(id: &str) -> Value {
    match id {
        "ferpa_scope" | "ferpa_identifiable" | "ferpa_studies" => json!("yes"),
        "ferpa_study_purpose" => json!({"value": "improve instruction in early literacy"}),
        "ferpa_study_start" => json!({"value": "2020-01-01"}),
        "ferpa_study_end" => json!({"value": "2022-12-31"}),
        "ferpa_study_topics" => json!({"value": "reading fluency"}),
        "ferpa_data_description" => json!({"value": "grade 3 reading scores"}),
        _ => json!("no"),
    }
}

async fn start_release(app: &Router, id: &str, dataset: &str) -> Value {
    let (status, body) = call(
        app,
        Method::POST,
        "/sessions",
        Some(json!({"id": id, "dataset": dataset, "depositor": "district", "action": "release", "user": "researcher"})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body
}

async fn answer_all(app: &Router, id: &str, mut questions: Vec<Value>) {
    while let Some(q) = questions.first() {
        let qid = q["id"].as_str().unwrap().to_string();
        let (status, body) = call(
            app,
            Method::POST,
            &format!("/sessions/{id}/answers"),
            Some(json!({"question_id": qid, "answer": script(&qid)})),
        )
        .await;
        assert_eq!(status, StatusCode::OK, "{body}");
        questions = body["questions"].as_array().unwrap().clone();
    }
}

#[tokio::test]
async fn studies_interview_issues_license_with_purpose_term() {
    let app = app(None);
    let start = start_release(&app, "s1", "ds1").await;
    answer_all(&app, "s1", start["questions"].as_array().unwrap().clone()).await;

    let (status, concluded) = call(&app, Method::POST, "/sessions/s1/conclude", Some(json!({}))).await;
    assert_eq!(status, StatusCode::OK, "{concluded}");
    assert_eq!(concluded["outcome"]["outcome"], "permit");
    let ids: Vec<Value> = concluded["affirmations"].as_array().unwrap().iter().map(|a| a["id"].clone()).collect();
    assert!(!ids.is_empty());

    let (status, problem) = call(&app, Method::POST, "/sessions/s1/affirm", Some(json!({"confirmed": []}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(problem["code"], "unconfirmed_affirmations");

    let (status, bundle) = call(&app, Method::POST, "/sessions/s1/affirm", Some(json!({"confirmed": ids}))).await;
    assert_eq!(status, StatusCode::CREATED, "{bundle}");
    let text = bundle["document"]["text"].as_str().unwrap();
    assert!(text.contains("improve instruction in early literacy"), "{text}");
    assert!(!text.contains(":supplied:"));

    let (status, stored) = call(&app, Method::GET, "/sessions/s1/license", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(stored, bundle);

    let (_, meta) = call(&app, Method::GET, "/datasets/ds1/metadata", None).await;
    assert_eq!(meta["handling"]["verdicts"]["release"][0], "permitted");
    assert_eq!(meta["licenses"][0], bundle["provenance"]["hash"]);

    let (status, transcript) = call(&app, Method::GET, "/sessions/s1/transcript", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(transcript.as_str().unwrap().contains("ferpa_studies"));

    let (status, replay) = call(&app, Method::GET, "/decisions/s1-decision/replay", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(replay["identical"], true);
}

#[tokio::test]
async fn early_conclusion_is_a_conflict_listing_open_questions() {
    let app = app(None);
    start_release(&app, "s2", "ds2").await;
    let (status, problem) = call(&app, Method::POST, "/sessions/s2/conclude", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(problem["code"], "incomplete_interview");
    assert_eq!(problem["remaining"][0], "ferpa_scope");
}

#[tokio::test]
async fn unserved_and_mistyped_answers_are_rejected() {
    let app = app(None);
    start_release(&app, "s3", "ds3").await;
    let (status, problem) = call(
        &app,
        Method::POST,
        "/sessions/s3/answers",
        Some(json!({"question_id": "ferpa_study_purpose", "answer": {"value": "x"}})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT, "{problem}");
    assert_eq!(problem["code"], "unserved_question");
    let (status, problem) = call(
        &app,
        Method::POST,
        "/sessions/s3/answers",
        Some(json!({"question_id": "ferpa_scope", "answer": {"value": "x"}})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(problem["code"], "type_mismatch");
    let (status, _) = call(&app, Method::GET, "/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn denied_release_request_carries_proof_summary() {
    let app = app(None);
    start_release(&app, "s4", "ds4").await;
    let (status, body) = call(
        &app,
        Method::POST,
        "/release-requests",
        Some(json!({
            "dataset": "ds4",
            "user": "researcher",
            "facts": ["ferpa_datasetInScope(ds4)", "ferpa_identifiable(ds4)"],
        })),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["outcome"], "denied");
    assert_eq!(body["domains"][0]["verdict"], "denied");
    assert_eq!(body["domains"][0]["proofs"][0]["rule"], "ferpa.release.denied");
    let decision = body["decision"].as_str().unwrap();
    let (_, replay) = call(&app, Method::GET, &format!("/decisions/{decision}/replay"), None).await;
    assert_eq!(replay["identical"], true);
}

#[tokio::test]
async fn purpose_triage_opens_ticket_for_review() {
    let app = app(None);
    start_release(&app, "s5", "ds5").await;
    let (_, body) = call(
        &app,
        Method::POST,
        "/release-requests",
        Some(json!({"dataset": "ds5", "user": "u", "purpose": {"codes": ["2194", "5878"], "free_text": "schizophrenia study"}})),
    )
    .await;
    assert_eq!(body["outcome"], "human_review", "{body}");
    assert_eq!(body["purpose"]["free_text"], "schizophrenia study");
    assert!(body["ticket"].is_string());

    let (_, body) =
        call(&app, Method::POST, "/release-requests", Some(json!({"dataset": "ds5", "user": "u", "purpose": {"codes": ["4006"]}})))
            .await;
    assert_eq!(body["outcome"], "denied");
    assert_eq!(body["reason"], "purpose");

    let (status, problem) =
        call(&app, Method::POST, "/release-requests", Some(json!({"dataset": "ds5", "user": "u", "purpose": {"codes": ["99999"]}})))
            .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(problem["code"], "unknown_code");
}

#[tokio::test]
async fn derivations_accumulate_privacy_budget_across_siblings() {
    let app = app(None);
    start_release(&app, "s6", "src").await;
    let release = |ds: &str| {
        json!({"dataset": ds, "user": "u", "facts": [format!("ferpa_datasetInScope({ds})"), format!("ferpa_identifiable({ds})")]})
    };
    let (status, rec) = call(
        &app,
        Method::POST,
        "/datasets/src/derivations",
        Some(json!({"output": "dp1", "tool": "differentialPrivacy", "params": {"totalBudget": "0.1"}})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{rec}");
    let (_, first) = call(&app, Method::POST, "/release-requests", Some(release("dp1"))).await;
    assert_eq!(first["outcome"], "permitted", "{first}");

    let (status, _) = call(
        &app,
        Method::POST,
        "/datasets/src/derivations",
        Some(json!({"output": "dp2", "tool": "differentialPrivacy", "params": {"totalBudget": "0.05"}})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    let (_, again) = call(&app, Method::POST, "/release-requests", Some(release("dp1"))).await;
    assert_eq!(again["outcome"], "denied", "{again}");

    let (status, problem) = call(
        &app,
        Method::POST,
        "/datasets/src/derivations",
        Some(json!({"output": "dp3", "tool": "differentialPrivacy"})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(problem["code"], "missing_param");

    let (_, history) = call(&app, Method::GET, "/datasets/dp1/history", None).await;
    assert_eq!(history.as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn purpose_profile_can_be_replaced_per_dataset() {
    let app = app(None);
    start_release(&app, "s7", "ds7").await;
    let profile = json!({
        "human_readable": "Anything in education.",
        "always_permitted": "3206.Education",
        "always_denied": "NOT(3206.Education)",
    });
    let (status, rec) = call(&app, Method::PUT, "/datasets/ds7/purpose", Some(profile)).await;
    assert_eq!(status, StatusCode::OK, "{rec}");
    assert_eq!(rec["handling"]["purpose"]["always_permitted"], "3206.Education");
    let (_, body) =
        call(&app, Method::POST, "/release-requests", Some(json!({"dataset": "ds7", "user": "u", "purpose": {"codes": ["3206"]}})))
            .await;
    assert_eq!(body["purpose"]["triage"], "permit");
}

#[tokio::test]
async fn bearer_token_guards_everything_but_health() {
    let app = app(Some("s3cret"));
    let (status, _) = call(&app, Method::GET, "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    let (status, problem) = call(&app, Method::GET, "/datasets/x/metadata", None).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    assert_eq!(problem["code"], "unauthorized");
    let req = Request::get("/datasets/x/metadata")
        .header(header::AUTHORIZATION, "Bearer s3cret")
        .body(Body::empty())
        .unwrap();
    assert_eq!(app.clone().oneshot(req).await.unwrap().status(), StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn audit_endpoints_report_findings() {
    let app = app(None);
    let (status, body) = call(&app, Method::GET, "/audit/ferpa/contradictions?bound=3", None).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["findings"].as_array().unwrap().len(), 0);
    let (_, body) = call(&app, Method::GET, "/audit/ferpa/silence?bound=0&action=release", None).await;
    assert!(!body["findings"].as_array().unwrap().is_empty());
    let (status, _) = call(&app, Method::GET, "/audit/nope/silence", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn stored_log_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    {
        let app = router(AppState::new(repository("ferpaOnly", Store::open(dir.path()).unwrap()), None));
        start_release(&app, "s8", "ds8").await;
    }
    let app = router(AppState::new(repository("ferpaOnly", Store::open(dir.path()).unwrap()), None));
    let (status, session) = call(&app, Method::GET, "/sessions/s8", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(session["dataset"], "ds8");
}
