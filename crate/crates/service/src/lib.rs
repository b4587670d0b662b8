//! Local HTTP JSON service behind the interactive what-if board.
//!
//! Models and fixtures are loaded once; every handler is a pure function of
//! the shared read-only state and the request.

pub mod schema;

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use shotgame_core::geometry::{
    BOX_LEFT, BOX_RIGHT, LEFT_POST, PITCH_LENGTH, PITCH_WIDTH, RIGHT_POST,
};
use shotgame_core::metrics::{Engine, MetricsError};
use shotgame_core::nnet::{ClassifierModel, ModelError};
use shotgame_core::pitch_control::ControlParams;
use shotgame_core::scenario::{load_fixtures, FixtureError, ScenarioFixture};
use shotgame_core::theory::{TheoryError, TheoryParams};

pub use schema::{
    evaluate_request, evaluate_scene, EvalError, ScenarioRequest, ScenarioResponse, SCHEMA_VERSION,
};

pub const THEORY_FILE: &str = "theory_params.json";
pub const OFF_FILE: &str = "dnn_off.json";
pub const BLOCK_FILE: &str = "dnn_block.json";

#[derive(Debug, Error)]
pub enum LoadError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Fixture(#[from] FixtureError),
}

/// `theory_params.json`, `dnn_off.json` and `dnn_block.json` from `dir`.
pub fn load_engine(dir: &Path, control: ControlParams) -> Result<Engine, LoadError> {
    let theory = TheoryParams::load(&dir.join(THEORY_FILE))?;
    let off = ClassifierModel::load(&dir.join(OFF_FILE))?;
    let block = ClassifierModel::load(&dir.join(BLOCK_FILE))?;
    Ok(Engine::new(off, block, theory, control)?)
}

pub struct AppState {
    pub engine: Engine,
    pub fixtures: Vec<ScenarioFixture>,
}

impl AppState {
    pub fn load(models: &Path, fixtures: &Path) -> Result<Self, LoadError> {
        Ok(Self {
            engine: load_engine(models, ControlParams::default())?,
            fixtures: load_fixtures(fixtures)?,
        })
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/fixtures", get(list_fixtures))
        .route("/fixtures/{id}", get(get_fixture))
        .route("/scenario/evaluate", post(evaluate))
        .with_state(state)
}

pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<String>,
    message: String,
}

fn error(status: StatusCode, code: &str, path: Option<String>, message: String) -> Response {
    let body = json!({
        "schema_version": SCHEMA_VERSION,
        "error": ErrorBody { code, path, message },
    });
    (status, Json(body)).into_response()
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({
        "schema_version": SCHEMA_VERSION,
        "status": "ok",
        "block_features": state.engine.block.kind,
        "fixtures": state.fixtures.len(),
    }))
}

fn geometry() -> Value {
    let pt = |p: shotgame_core::geometry::PitchPoint| json!([p.x, p.y]);
    json!({
        "pitch_length": PITCH_LENGTH,
        "pitch_width": PITCH_WIDTH,
        "left_post": pt(LEFT_POST),
        "right_post": pt(RIGHT_POST),
        "box_left": pt(BOX_LEFT),
        "box_right": pt(BOX_RIGHT),
    })
}

async fn list_fixtures(State(state): State<Arc<AppState>>) -> Json<Value> {
    let fixtures: Vec<Value> = state
        .fixtures
        .iter()
        .map(|f| json!({"id": f.id, "description": f.description, "players": f.players.len()}))
        .collect();
    Json(json!({
        "schema_version": SCHEMA_VERSION,
        "fixtures": fixtures,
        "geometry": geometry(),
    }))
}

async fn get_fixture(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Response {
    match state.fixtures.iter().find(|f| f.id == id) {
        Some(f) => Json(json!({"schema_version": SCHEMA_VERSION, "fixture": f})).into_response(),
        None => error(
            StatusCode::NOT_FOUND,
            "not_found",
            None,
            format!("no fixture {id:?}"),
        ),
    }
}

/// Dotted serde path to a JSON-pointer style one.
fn pointer(path: &serde_path_to_error::Path) -> String {
    path.to_string().replace(['.', '['], "/").replace(']', "")
}

async fn evaluate(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let de = &mut serde_json::Deserializer::from_slice(&body);
    let req: ScenarioRequest = match serde_path_to_error::deserialize(de) {
        Ok(r) => r,
        Err(e) => {
            let path = pointer(e.path());
            let path = (path != "/" && path != "?").then_some(path);
            return error(
                StatusCode::BAD_REQUEST,
                "invalid_request",
                path,
                e.into_inner().to_string(),
            );
        }
    };
    match evaluate_request(&state.engine, &req) {
        Ok(resp) => Json(resp).into_response(),
        Err(EvalError::Field(f)) => error(
            StatusCode::BAD_REQUEST,
            "out_of_bounds",
            Some(f.path),
            f.message,
        ),
        Err(EvalError::Model(e)) => error(
            StatusCode::UNPROCESSABLE_ENTITY,
            "evaluation_failed",
            None,
            e.to_string(),
        ),
    }
}
