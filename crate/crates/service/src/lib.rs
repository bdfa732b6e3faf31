//! Stateless JSON planning service over the waypoint-tsp solver roster.

use std::collections::HashSet;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use tokio::sync::Semaphore;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;

use waypoint_tsp::data::{grid_points, BoundingBox};
use waypoint_tsp::solve::{methods, solve, SolveOptions};
use waypoint_tsp::{tour_length, Budget, Coord, DistanceMatrix, Error, SolveTrace, WaypointSet};

pub const MIN_POINTS: usize = 2;
pub const MAX_POINTS: usize = 2_000;
pub const MAX_BUDGET_MS: u64 = 60_000;
pub const MAX_GRID_POINTS: usize = 2_000;

const FALLBACK_INDEX: &str = include_str!("../static/index.html");

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub port: u16,
    /// Solves allowed to run at once; further requests wait in arrival order.
    pub max_concurrent: usize,
    /// Extra origin allowed by CORS (`*` for any). Same-origin needs none.
    pub cors_origin: Option<String>,
    /// Directory holding the UI bundle served at `/`.
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            port: 8080,
            max_concurrent: std::thread::available_parallelism().map_or(2, |n| n.get()),
            cors_origin: None,
            static_dir: None,
        }
    }
}

#[derive(Clone)]
struct AppState {
    permits: Arc<Semaphore>,
}

/// A point as sent by clients: geographic or planar, with a caller-chosen id.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum PointDto {
    Geographic { id: i64, lat: f64, lon: f64 },
    Planar { id: i64, x: f64, y: f64 },
}

impl PointDto {
    fn id(&self) -> i64 {
        match *self {
            PointDto::Geographic { id, .. } | PointDto::Planar { id, .. } => id,
        }
    }

    fn coord(&self) -> Coord {
        match *self {
            PointDto::Geographic { lat, lon, .. } => Coord::Geographic { lat, lon },
            PointDto::Planar { x, y, .. } => Coord::Planar { x, y },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRequest {
    pub points: Vec<PointDto>,
    pub method: String,
    #[serde(default)]
    pub seed: u64,
    pub time_budget_ms: Option<u64>,
    /// Iteration cap (episodes for RL methods); keeps results reproducible.
    pub max_iters: Option<u64>,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default)]
    pub include_trace: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResponse {
    pub method: String,
    pub order: Vec<i64>,
    pub length_m: f64,
    pub elapsed_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace: Option<SolveTrace>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum BoxDto {
    Geographic { min_lat: f64, max_lat: f64, min_lon: f64, max_lon: f64 },
    Planar { min_x: f64, max_x: f64, min_y: f64, max_y: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRequest {
    pub bbox: BoxDto,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridResponse {
    pub points: Vec<PointDto>,
}

/// An error body `{"error": ..., "field": ...}` with its status code.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    field: Option<&'static str>,
    message: String,
}

impl ApiError {
    fn bad(field: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            field: Some(field),
            message: message.into(),
        }
    }

    fn from_solver(e: Error) -> Self {
        let (status, field) = match &e {
            Error::UnknownMethod(_) => (StatusCode::UNPROCESSABLE_ENTITY, Some("method")),
            Error::BudgetExceeded => (StatusCode::REQUEST_TIMEOUT, Some("time_budget_ms")),
            Error::InvalidParameter { .. } => (StatusCode::BAD_REQUEST, Some("params")),
            Error::SizeOutOfRange { .. } => (StatusCode::BAD_REQUEST, Some("points")),
            Error::CoordinateRange { .. } | Error::MixedCoordinates | Error::Empty(_) => {
                (StatusCode::BAD_REQUEST, Some("points"))
            }
            Error::Io(_) | Error::Json(_) => (StatusCode::INTERNAL_SERVER_ERROR, None),
            _ => (StatusCode::BAD_REQUEST, None),
        };
        ApiError {
            status,
            field,
            message: e.to_string(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            field: None,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = match self.field {
            Some(f) => json!({ "error": self.message, "field": f }),
            None => json!({ "error": self.message }),
        };
        (self.status, Json(body)).into_response()
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad("body", format!("invalid request body: {e}")))
}

fn validate(req: &SolveRequest) -> Result<WaypointSet, ApiError> {
    let n = req.points.len();
    if !(MIN_POINTS..=MAX_POINTS).contains(&n) {
        return Err(ApiError::bad(
            "points",
            format!("expected {MIN_POINTS} to {MAX_POINTS} points, got {n}"),
        ));
    }
    let mut ids = HashSet::with_capacity(n);
    for p in &req.points {
        if !ids.insert(p.id()) {
            return Err(ApiError::bad("points", format!("duplicate id {}", p.id())));
        }
    }
    if let Some(ms) = req.time_budget_ms {
        if ms == 0 || ms > MAX_BUDGET_MS {
            return Err(ApiError::bad(
                "time_budget_ms",
                format!("must be between 1 and {MAX_BUDGET_MS}, got {ms}"),
            ));
        }
    }
    WaypointSet::new(req.points.iter().map(PointDto::coord).collect()).map_err(ApiError::from_solver)
}

/// Runs a solve request to completion. Used by the handler and usable
/// directly without HTTP.
pub fn handle_solve(req: &SolveRequest) -> Result<SolveResponse, ApiError> {
    let set = validate(req)?;
    let d = DistanceMatrix::build(&set, set.default_metric()).map_err(ApiError::from_solver)?;
    let opts = SolveOptions {
        rng_seed: req.seed,
        start: 0,
        budget: Budget {
            max_iters: req.max_iters,
            time_ms: req.time_budget_ms,
        },
        params: req.params.clone(),
    };
    let s = solve(&d, &req.method, &opts).map_err(ApiError::from_solver)?;

    // check what we send back
    let order = s.tour.order();
    let recomputed = tour_length(order, &d).map_err(|e| ApiError::internal(e.to_string()))?;
    if (recomputed - s.tour.length_m()).abs() > 1e-9 * recomputed.max(1.0) {
        return Err(ApiError::internal("tour length check failed"));
    }
    let mut seen = vec![false; order.len()];
    for &i in order {
        if std::mem::replace(&mut seen[i], true) {
            return Err(ApiError::internal("solver returned a repeated city"));
        }
    }
    Ok(SolveResponse {
        method: s.method.to_string(),
        order: order.iter().map(|&i| req.points[i].id()).collect(),
        length_m: s.tour.length_m(),
        elapsed_ms: s.elapsed_ms,
        trace: req.include_trace.then_some(s.trace),
    })
}

pub fn handle_grid(req: &GridRequest) -> Result<GridResponse, ApiError> {
    if req.rows == 0 || req.cols == 0 || req.rows.saturating_mul(req.cols) > MAX_GRID_POINTS {
        return Err(ApiError::bad(
            "rows",
            format!("rows and cols must be >= 1 with at most {MAX_GRID_POINTS} points"),
        ));
    }
    let bbox = match req.bbox {
        BoxDto::Geographic { min_lat, max_lat, min_lon, max_lon } => {
            BoundingBox::geographic(min_lat, max_lat, min_lon, max_lon)
        }
        BoxDto::Planar { min_x, max_x, min_y, max_y } => BoundingBox::planar(min_x, max_x, min_y, max_y),
    }
    .map_err(|e| ApiError::bad("bbox", e.to_string()))?;
    let set = grid_points(&bbox, req.rows, req.cols).map_err(|e| ApiError::bad("rows", e.to_string()))?;
    let points = set
        .points()
        .iter()
        .map(|p| match p.coord {
            Coord::Geographic { lat, lon } => PointDto::Geographic { id: p.id as i64, lat, lon },
            Coord::Planar { x, y } => PointDto::Planar { id: p.id as i64, x, y },
        })
        .collect();
    Ok(GridResponse { points })
}

async fn solve_route(State(state): State<AppState>, body: Bytes) -> Result<Json<SolveResponse>, ApiError> {
    let req: SolveRequest = parse_body(&body)?;
    // the semaphore is fair, so waiting requests are served first come first served
    let _permit = state
        .permits
        .clone()
        .acquire_owned()
        .await
        .map_err(|_| ApiError::internal("service shutting down"))?;
    let out = tokio::task::spawn_blocking(move || handle_solve(&req))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(out))
}

async fn list_methods() -> Json<Value> {
    Json(serde_json::to_value(methods()).expect("method list serialises"))
}

async fn grid(body: Bytes) -> Result<Json<GridResponse>, ApiError> {
    let req: GridRequest = parse_body(&body)?;
    Ok(Json(handle_grid(&req)?))
}

async fn healthz() -> &'static str {
    "ok"
}

async fn fallback_index() -> Html<&'static str> {
    Html(FALLBACK_INDEX)
}

pub fn router(cfg: &ServiceConfig) -> Router {
    let state = AppState {
        permits: Arc::new(Semaphore::new(cfg.max_concurrent.max(1))),
    };
    let mut app = Router::new()
        .route("/api/solve", post(solve_route))
        .route("/api/methods", get(list_methods))
        .route("/api/grid", post(grid))
        .route("/healthz", get(healthz))
        .with_state(state);
    app = match &cfg.static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(fallback_index)),
    };
    if let Some(origin) = &cfg.cors_origin {
        let allow = if origin == "*" {
            AllowOrigin::any()
        } else {
            AllowOrigin::exact(HeaderValue::from_str(origin).unwrap_or(HeaderValue::from_static("null")))
        };
        app = app.layer(
            CorsLayer::new()
                .allow_origin(allow)
                .allow_methods([axum::http::Method::GET, axum::http::Method::POST])
                .allow_headers([header::CONTENT_TYPE]),
        );
    }
    app
}

/// Binds `0.0.0.0:port` and serves until the process ends.
pub async fn serve(cfg: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(SocketAddr::from(([0, 0, 0, 0], cfg.port))).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(&cfg)).await
}
