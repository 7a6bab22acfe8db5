//! HTTP routes. Bodies are JSON; errors are `application/problem+json`.

use std::sync::Arc;

use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use repolicy::domain::ActionKind;
use repolicy::purpose::ProfileSource;

use crate::app::{
    AffirmRequest, AnswerRequest, ApiResult, ConcludeRequest, DerivationRequest, ReleaseRequest, Repository,
    StartSession,
};
use crate::error::ApiError;

#[derive(Clone)]
pub struct AppState {
    pub repo: Arc<Repository>,
    pub token: Option<Arc<str>>,
}

impl AppState {
    pub fn new(repo: Repository, token: Option<String>) -> Self {
        AppState { repo: Arc::new(repo), token: token.map(Into::into) }
    }
}

/// Runs a repository call off the async workers.
async fn blocking<T, F>(state: &AppState, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Repository) -> ApiResult<T> + Send + 'static,
{
    let repo = state.repo.clone();
    tokio::task::spawn_blocking(move || f(&repo))
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/sessions", post(start_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/questions", get(questions))
        .route("/sessions/{id}/answers", post(answer))
        .route("/sessions/{id}/conclude", post(conclude))
        .route("/sessions/{id}/affirm", post(affirm))
        .route("/sessions/{id}/license", get(license))
        .route("/sessions/{id}/transcript", get(transcript))
        .route("/datasets/{id}/metadata", get(dataset))
        .route("/datasets/{id}/history", get(history))
        .route("/datasets/{id}/derivations", post(derivation))
        .route("/datasets/{id}/purpose", put(purpose))
        .route("/release-requests", post(release))
        .route("/audit/{domain}/contradictions", get(contradictions))
        .route("/audit/{domain}/silence", get(silence))
        .route("/decisions/{id}/replay", get(replay))
        .route_layer(middleware::from_fn_with_state(state.clone(), auth));
    Router::new().route("/health", get(health)).merge(api).with_state(state)
}

async fn auth(State(state): State<AppState>, req: Request, next: Next) -> Response {
    if let Some(token) = &state.token {
        let given = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if given != Some(&**token) {
            return ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong bearer token").into_response();
        }
    }
    next.run(req).await
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    policy: String,
    domains: Vec<String>,
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    Json(Health {
        status: "ok",
        policy: state.repo.policy().id.clone(),
        domains: state.repo.policy().domains.clone(),
    })
}

async fn start_session(State(s): State<AppState>, Json(req): Json<StartSession>) -> ApiResult<impl IntoResponse> {
    let view = blocking(&s, move |r| r.start_session(req)).await?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(&s, move |r| r.session(&id)).await?))
}

#[derive(Serialize)]
struct Questions<T> {
    questions: T,
}

async fn questions(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let questions = blocking(&s, move |r| r.questions(&id)).await?;
    Ok(Json(Questions { questions }))
}

async fn answer(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<AnswerRequest>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(&s, move |r| r.answer(&id, req)).await?))
}

async fn conclude(
    State(s): State<AppState>,
    Path(id): Path<String>,
    body: Option<Json<ConcludeRequest>>,
) -> ApiResult<impl IntoResponse> {
    let req = body.map(|Json(b)| b).unwrap_or_default();
    Ok(Json(blocking(&s, move |r| r.conclude(&id, req)).await?))
}

async fn affirm(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<AffirmRequest>,
) -> ApiResult<impl IntoResponse> {
    let bundle = blocking(&s, move |r| r.affirm(&id, req)).await?;
    Ok((StatusCode::CREATED, Json(bundle)))
}

async fn license(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(&s, move |r| r.license(&id)).await?))
}

async fn transcript(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let text = blocking(&s, move |r| r.transcript(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text))
}

async fn dataset(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(&s, move |r| r.dataset(&id)).await?))
}

async fn history(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(&s, move |r| r.dataset_history(&id)).await?))
}

async fn derivation(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<DerivationRequest>,
) -> ApiResult<impl IntoResponse> {
    let rec = blocking(&s, move |r| r.add_derivation(&id, req)).await?;
    Ok((StatusCode::CREATED, Json(rec)))
}

async fn purpose(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(src): Json<ProfileSource>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(&s, move |r| r.set_purpose(&id, src)).await?))
}

async fn release(State(s): State<AppState>, Json(req): Json<ReleaseRequest>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(&s, move |r| r.release_request(req)).await?))
}

#[derive(Deserialize)]
struct AuditParams {
    #[serde(default)]
    bound: Option<usize>,
    #[serde(default)]
    action: Option<ActionKind>,
}

async fn contradictions(
    State(s): State<AppState>,
    Path(domain): Path<String>,
    Query(p): Query<AuditParams>,
) -> ApiResult<impl IntoResponse> {
    let report = blocking(&s, move |r| {
        let bound = p.bound.unwrap_or(r.interviewer().bound());
        r.audit_contradictions(&domain, p.action.unwrap_or(ActionKind::Release), bound)
    })
    .await?;
    Ok(Json(report))
}

async fn silence(
    State(s): State<AppState>,
    Path(domain): Path<String>,
    Query(p): Query<AuditParams>,
) -> ApiResult<impl IntoResponse> {
    let report = blocking(&s, move |r| {
        let bound = p.bound.unwrap_or(r.interviewer().bound());
        r.audit_silence(&domain, p.action.unwrap_or(ActionKind::Release), bound)
    })
    .await?;
    Ok(Json(report))
}

async fn replay(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(&s, move |r| r.replay(&id)).await?))
}
