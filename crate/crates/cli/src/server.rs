//! Read-only JSON API over one front snapshot, plus the static UI bundle.
//!
//! | route                      | body                          |
//! |----------------------------|-------------------------------|
//! | `GET /api/metrics`         | objectives, metric specs      |
//! | `GET /api/front`           | the front JSON, verbatim      |
//! | `GET /api/solution/{id}`   | one member as a priority table|
//! | `POST /api/scalarize`      | `{weights}` -> `{id, fitness}`|
//! | `POST /api/tlo`            | `{thresholds, priority}`      |
//!
//! Member ids are positions in the front's member list.

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, PathRejection};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;
use vulnrank_core::moo::ObjectiveInfo;
use vulnrank_core::{scalarize_select, tlo_select, Catalog, MetricSpec, ParetoFront, ThresholdSpec, WeightVector};

use crate::commands::{check_join, SolutionView};
use crate::error::{CliError, CliResult};

#[derive(Debug)]
pub struct ServeState {
    front: ParetoFront,
    front_json: String,
    catalog: Option<Catalog>,
}

impl ServeState {
    pub fn new(front: ParetoFront, catalog: Option<Catalog>) -> CliResult<Self> {
        if let Some(c) = &catalog {
            check_join(&front, c)?;
        }
        Ok(ServeState {
            front_json: front.to_json(),
            front,
            catalog,
        })
    }

    pub fn front(&self) -> &ParetoFront {
        &self.front
    }
}

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

impl From<vulnrank_core::Error> for ApiError {
    fn from(e: vulnrank_core::Error) -> Self {
        let status = if e.is_input_error() {
            StatusCode::BAD_REQUEST
        } else {
            StatusCode::INTERNAL_SERVER_ERROR
        };
        ApiError(status, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError(StatusCode::BAD_REQUEST, e.body_text())
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Serialize)]
struct MetricsResponse<'a> {
    objectives: &'a [ObjectiveInfo],
    metrics: &'a [MetricSpec],
    item_count: usize,
    member_count: usize,
}

async fn metrics(State(s): State<Arc<ServeState>>) -> Response {
    Json(MetricsResponse {
        objectives: s.front.objectives(),
        metrics: s.catalog.as_ref().map_or(&[], |c| c.specs()),
        item_count: s.front.item_count(),
        member_count: s.front.len(),
    })
    .into_response()
}

async fn front(State(s): State<Arc<ServeState>>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], s.front_json.clone()).into_response()
}

async fn solution(
    State(s): State<Arc<ServeState>>,
    index: Result<Path<usize>, PathRejection>,
) -> ApiResult<SolutionView> {
    let Path(index) = index.map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.body_text()))?;
    SolutionView::new(&s.front, index, s.catalog.as_ref())
        .map(Json)
        .ok_or_else(|| {
            ApiError(
                StatusCode::NOT_FOUND,
                format!("no member {index}; the front has {} members", s.front.len()),
            )
        })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarizeRequest {
    pub weights: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ScalarizeResponse {
    pub id: usize,
    pub fitness: Vec<f64>,
}

async fn scalarize(
    State(s): State<Arc<ServeState>>,
    body: Result<Json<ScalarizeRequest>, JsonRejection>,
) -> ApiResult<ScalarizeResponse> {
    let Json(req) = body?;
    let weights = WeightVector::new(req.weights)?;
    let pick = scalarize_select(&s.front, &weights)?;
    Ok(Json(ScalarizeResponse {
        id: pick.index,
        fitness: pick.member.fitness.clone(),
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TloRequest {
    /// `null` entries mean no ceiling.
    pub thresholds: Vec<Option<f64>>,
    /// Defaults to objective order.
    #[serde(default)]
    pub priority: Option<Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct TloResponse {
    pub id: Option<usize>,
    pub fitness: Option<Vec<f64>>,
    /// Members within every threshold.
    pub survivors: usize,
}

async fn tlo(State(s): State<Arc<ServeState>>, body: Result<Json<TloRequest>, JsonRejection>) -> ApiResult<TloResponse> {
    let Json(req) = body?;
    let thresholds: Vec<f64> = req.thresholds.iter().map(|t| t.unwrap_or(f64::INFINITY)).collect();
    let priority = req.priority.unwrap_or_else(|| (0..thresholds.len()).collect());
    let spec = ThresholdSpec::new(thresholds, priority)?;
    let pick = tlo_select(&s.front, &spec)?;
    let survivors = s
        .front
        .members()
        .iter()
        .filter(|m| m.fitness.iter().zip(spec.thresholds()).all(|(f, t)| f <= t))
        .count();
    Ok(Json(TloResponse {
        id: pick.map(|p| p.index),
        fitness: pick.map(|p| p.member.fitness.clone()),
        survivors,
    }))
}

const PLACEHOLDER_INDEX: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>vulnrank</title></head>
<body>
<h1>vulnrank</h1>
<p>No UI bundle configured (start with <code>--ui-dir</code>). The JSON API is available:</p>
<ul>
<li><a href=\"/api/metrics\">GET /api/metrics</a></li>
<li><a href=\"/api/front\">GET /api/front</a></li>
<li>GET /api/solution/{id}</li>
<li>POST /api/scalarize {\"weights\": [...]}</li>
<li>POST /api/tlo {\"thresholds\": [...], \"priority\": [...]}</li>
</ul>
</body></html>
";

pub fn router(state: Arc<ServeState>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/metrics", get(metrics))
        .route("/api/front", get(front))
        .route("/api/solution/{index}", get(solution))
        .route("/api/scalarize", post(scalarize))
        .route("/api/tlo", post(tlo))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir).append_index_html_on_directories(true)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER_INDEX) })),
    }
}

/// Binds `addr` and serves until interrupted.
pub fn run_blocking(state: ServeState, addr: &str, ui_dir: Option<PathBuf>) -> CliResult<()> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start the runtime: {e}")))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Runtime(format!("cannot bind {addr}: {e}")))?;
        let local = listener
            .local_addr()
            .map_err(|e| CliError::Runtime(format!("cannot bind {addr}: {e}")))?;
        println!("listening on http://{local}");
        use std::io::Write;
        let _ = std::io::stdout().flush();
        axum::serve(listener, router(Arc::new(state), ui_dir))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::Runtime(format!("server error: {e}")))
    })
}
