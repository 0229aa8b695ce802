//! HTTP question-answering service.
//!
//! - `GET /health` returns `{"status":"ok"}`.
//! - `POST /retrieve` takes `{"question": ..., "config": {...}}` and returns
//!   the retrieved subgraph. `config` may override any retrieval field.
//! - `POST /ask` takes `{"question": ..., "passages": [...], "task": ...,
//!   "no_graph": false}` and returns the label with its evidence.
//!
//! Malformed bodies get 400, an unreachable LLM endpoint 503. Internal
//! failures are logged and answered with a bare 500.

use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::net::TcpListener;
use umlskg::embed::ScoredCui;
use umlskg::rag::{AnswerLabel, AnswerTask, FragmentPath, RagError, RagPipeline, RetrievalConfig, SubgraphContext};
use umlskg::textualize::{FragmentOrder, TripleFragment};

#[derive(Clone)]
struct AppState {
    pipeline: Arc<RagPipeline>,
}

/// Per-request overrides of the service's retrieval settings.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalOverrides {
    pub seed_k: Option<usize>,
    pub max_hops: Option<u32>,
    pub max_edges: Option<usize>,
    pub per_node_fanout_cap: Option<usize>,
    pub context_budget: Option<usize>,
    pub include_question_passages: Option<bool>,
    pub fragment_order: Option<FragmentOrder>,
}

impl RetrievalOverrides {
    pub fn apply(&self, base: &RetrievalConfig) -> RetrievalConfig {
        RetrievalConfig {
            seed_k: self.seed_k.unwrap_or(base.seed_k),
            max_hops: self.max_hops.unwrap_or(base.max_hops),
            max_edges: self.max_edges.unwrap_or(base.max_edges),
            per_node_fanout_cap: self.per_node_fanout_cap.unwrap_or(base.per_node_fanout_cap),
            context_budget: self.context_budget.unwrap_or(base.context_budget),
            include_question_passages: self.include_question_passages.unwrap_or(base.include_question_passages),
            fragment_order: self.fragment_order.unwrap_or(base.fragment_order),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrieveRequest {
    pub question: String,
    #[serde(default)]
    pub config: RetrievalOverrides,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AskRequest {
    pub question: String,
    #[serde(default)]
    pub passages: Vec<String>,
    #[serde(default)]
    pub task: AnswerTask,
    #[serde(default)]
    pub no_graph: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AskResponse {
    pub label: AnswerLabel,
    pub raw_text: String,
    pub seeds: Vec<ScoredCui>,
    /// Fragments that made it into the prompt, in prompt order.
    pub fragments: Vec<TripleFragment>,
    pub paths: Vec<FragmentPath>,
    pub context_word_count: usize,
    pub prompt_hash: String,
    pub template_hash: String,
}

enum ApiError {
    BadRequest(String),
    Unavailable,
    BadGateway,
    Internal,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, message) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::Unavailable => (StatusCode::SERVICE_UNAVAILABLE, "LLM endpoint unavailable".to_string()),
            ApiError::BadGateway => (StatusCode::BAD_GATEWAY, "LLM endpoint returned an unusable response".to_string()),
            ApiError::Internal => (StatusCode::INTERNAL_SERVER_ERROR, "internal error".to_string()),
        };
        (status, Json(json!({ "error": message }))).into_response()
    }
}

impl From<RagError> for ApiError {
    fn from(e: RagError) -> Self {
        match e {
            RagError::InvalidConfig(m) => ApiError::BadRequest(m),
            RagError::Llm(l) if l.is_unavailable() => {
                tracing::warn!(error = %l, "LLM endpoint unavailable");
                ApiError::Unavailable
            }
            RagError::Llm(l) => {
                tracing::warn!(error = %l, "LLM call failed");
                ApiError::BadGateway
            }
            other => {
                tracing::error!(error = %other, "request failed");
                ApiError::Internal
            }
        }
    }
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("invalid request body: {e}")))
}

fn non_empty(question: &str) -> Result<(), ApiError> {
    if question.trim().is_empty() {
        return Err(ApiError::BadRequest("question is empty".into()));
    }
    Ok(())
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}

async fn retrieve(State(state): State<AppState>, body: Bytes) -> Result<Json<SubgraphContext>, ApiError> {
    let req: RetrieveRequest = parse_body(&body)?;
    non_empty(&req.question)?;
    let cfg = req.config.apply(state.pipeline.retrieval());
    let pipeline = state.pipeline.clone();
    let ctx = tokio::task::spawn_blocking(move || pipeline.retrieve_with(&req.question, &cfg))
        .await
        .map_err(|_| ApiError::Internal)??;
    Ok(Json(ctx))
}

async fn ask(State(state): State<AppState>, body: Bytes) -> Result<Json<AskResponse>, ApiError> {
    let req: AskRequest = parse_body(&body)?;
    non_empty(&req.question)?;
    let pipeline = if req.no_graph {
        state.pipeline.without_graph()
    } else {
        (*state.pipeline).clone()
    };
    let a = pipeline.answer(&req.question, &req.passages, req.task).await?;
    Ok(Json(AskResponse {
        label: a.label,
        raw_text: a.raw_text.clone(),
        seeds: a.context.seeds.clone(),
        fragments: a.prompt.retained.iter().map(|&i| a.context.fragments[i].clone()).collect(),
        paths: a.prompt.retained.iter().map(|&i| a.context.paths[i].clone()).collect(),
        context_word_count: a.prompt.context_word_count,
        prompt_hash: a.prompt.hash(),
        template_hash: a.prompt.template_hash.clone(),
    }))
}

async fn log_requests(req: Request, next: Next) -> Response {
    let method = req.method().clone();
    let path = req.uri().path().to_string();
    let started = Instant::now();
    let resp = next.run(req).await;
    tracing::info!(
        %method,
        %path,
        status = resp.status().as_u16(),
        elapsed_ms = started.elapsed().as_secs_f64() * 1000.0,
        "request"
    );
    resp
}

pub fn router(pipeline: RagPipeline) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/retrieve", post(retrieve))
        .route("/ask", post(ask))
        .layer(middleware::from_fn(log_requests))
        .with_state(AppState {
            pipeline: Arc::new(pipeline),
        })
}

/// Serves until `shutdown` resolves, then drains in-flight requests.
pub async fn serve(
    listener: TcpListener,
    pipeline: RagPipeline,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let addr: SocketAddr = listener.local_addr()?;
    tracing::info!(%addr, "service listening");
    axum::serve(listener, router(pipeline)).with_graceful_shutdown(shutdown).await?;
    tracing::info!("service stopped");
    Ok(())
}

/// Resolves on Ctrl-C or, on Unix, SIGTERM.
pub async fn termination_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}
