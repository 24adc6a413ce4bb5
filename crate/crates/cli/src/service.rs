//! HTTP session service backing the feedback console.
//!
//! ```text
//! POST   /sessions                 {pack, problem_id}  -> 201 {session_id, plan_steps, nl_steps}
//! GET    /sessions/{id}                                -> session view
//! POST   /sessions/{id}/feedback   {statements}        -> 202 {session_id, accepted}
//! GET    /sessions/{id}/progress                       -> {generation, best_fitness, evaluations, status, ...}
//! GET    /sessions/{id}/plan                           -> current plan and per-statement judgments
//! DELETE /sessions/{id}                                -> 204
//! ```
//!
//! Every error body is `{"error": "..."}`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use plancritic_core::engine::{
    Engine, EngineError, JudgmentView, SessionHandle, SessionStatus, SessionView,
};
use plancritic_core::pddl::render_plan;

#[derive(Clone)]
pub struct AppState {
    engine: Arc<Engine>,
    sessions: Arc<RwLock<HashMap<String, SessionHandle>>>,
}

impl AppState {
    pub fn new(engine: Engine) -> Self {
        AppState {
            engine: Arc::new(engine),
            sessions: Arc::default(),
        }
    }

    fn session(&self, id: &str) -> Result<SessionHandle, ApiError> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no session '{id}'")))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/feedback", post(post_feedback))
        .route("/sessions/{id}/progress", get(get_progress))
        .route("/sessions/{id}/plan", get(get_plan))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError(StatusCode::BAD_REQUEST, r.body_text())
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let status = match e {
            EngineError::UnknownPack(_) | EngineError::UnknownProblem { .. } => {
                StatusCode::NOT_FOUND
            }
            EngineError::EmptyFeedback => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub pack: String,
    pub problem_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub plan_steps: Vec<String>,
    pub nl_steps: Vec<String>,
}

#[derive(Debug, Deserialize)]
pub struct Feedback {
    pub statements: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PlanView {
    pub session_id: String,
    pub status: SessionStatus,
    pub plan: Option<String>,
    pub plan_steps: Vec<String>,
    pub nl_steps: Vec<String>,
    pub fitness: Option<f64>,
    pub judgments: Vec<JudgmentView>,
}

async fn create_session(
    State(state): State<AppState>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let Json(req) = body?;
    let engine = state.engine.clone();
    // planning the base goal is CPU work
    let handle =
        tokio::task::spawn_blocking(move || engine.create_session(&req.pack, &req.problem_id))
            .await
            .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    let session = handle.snapshot();
    let created = Created {
        session_id: session.id.clone(),
        plan_steps: session
            .current_plan()
            .map(|p| p.steps.iter().map(|s| s.symbolic()).collect())
            .unwrap_or_default(),
        nl_steps: state.engine.describe(&session),
    };
    state
        .sessions
        .write()
        .unwrap_or_else(|e| e.into_inner())
        .insert(session.id, handle);
    Ok((StatusCode::CREATED, Json(created)))
}

async fn get_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    Ok(Json(state.session(&id)?.view()))
}

async fn get_progress(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    Ok(Json(state.session(&id)?.progress()).into_response())
}

async fn get_plan(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<PlanView>, ApiError> {
    let session = state.session(&id)?.snapshot();
    let plan = session.current_plan();
    Ok(Json(PlanView {
        session_id: session.id.clone(),
        status: session.status,
        plan: plan.map(render_plan),
        plan_steps: plan
            .map(|p| p.steps.iter().map(|s| s.symbolic()).collect())
            .unwrap_or_default(),
        nl_steps: state.engine.describe(&session),
        fitness: session.best.as_ref().map(|b| b.fitness()),
        judgments: session.judgments.clone(),
    }))
}

async fn post_feedback(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<Feedback>, JsonRejection>,
) -> Result<(StatusCode, Json<serde_json::Value>), ApiError> {
    let handle = state.session(&id)?;
    let Json(req) = body?;
    let accepted = req
        .statements
        .iter()
        .filter(|s| !s.trim().is_empty())
        .count();
    if accepted == 0 {
        return Err(EngineError::EmptyFeedback.into());
    }
    let engine = state.engine.clone();
    // the outcome lands in the session; failures show up as status "failed"
    tokio::task::spawn_blocking(move || {
        let _ = engine.refine(&handle, &req.statements);
    });
    Ok((
        StatusCode::ACCEPTED,
        Json(json!({ "session_id": id, "accepted": accepted })),
    ))
}

async fn delete_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<StatusCode, ApiError> {
    match state
        .sessions
        .write()
        .unwrap_or_else(|e| e.into_inner())
        .remove(&id)
    {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError(
            StatusCode::NOT_FOUND,
            format!("no session '{id}'"),
        )),
    }
}

/// Binds `addr` and serves until interrupted.
pub async fn serve(engine: Engine, addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(engine)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
