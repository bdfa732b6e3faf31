//! Browser bindings for the demo page. Results cross the boundary as JSON
//! strings so the page only needs `JSON.parse`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use waypoint_tsp::landscape::{self, Landscape};
use waypoint_tsp::solve::{self, SolveOptions};
use waypoint_tsp::{Budget, DistanceMatrix, MetricKind, WaypointSet};

/// Upper bound on points the page may submit; keeps the tab responsive.
pub const MAX_POINTS: usize = 500;

#[derive(Debug, Serialize)]
pub struct RouteResult {
    pub method: &'static str,
    pub order: Vec<usize>,
    pub length: f64,
    pub elapsed_ms: f64,
    /// `[iteration, best length]` pairs.
    pub trace: Vec<(u64, f64)>,
}

#[derive(Debug, Serialize)]
pub struct WalkResult {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub objective: Vec<f64>,
    pub temperature: Vec<f64>,
}

/// Solves planar points given as a flat `[x0, y0, x1, y1, ...]` array.
pub fn route(xy: &[f64], method: &str, seed: u64, max_iters: u64) -> Result<RouteResult, String> {
    if !xy.len().is_multiple_of(2) {
        return Err("coordinates must come in x,y pairs".into());
    }
    let pairs: Vec<(f64, f64)> = xy.chunks_exact(2).map(|c| (c[0], c[1])).collect();
    if pairs.len() < 2 || pairs.len() > MAX_POINTS {
        return Err(format!("need 2 to {MAX_POINTS} points, got {}", pairs.len()));
    }
    let set = WaypointSet::planar(&pairs).map_err(|e| e.to_string())?;
    let d = DistanceMatrix::build(&set, MetricKind::Euclidean).map_err(|e| e.to_string())?;
    let opts = SolveOptions {
        rng_seed: seed,
        budget: Budget {
            max_iters: Some(max_iters.max(1)),
            time_ms: None,
        },
        ..SolveOptions::default()
    };
    let s = solve::solve(&d, method, &opts).map_err(|e| e.to_string())?;
    Ok(RouteResult {
        method: s.method,
        order: s.tour.order().to_vec(),
        length: s.tour.length_m(),
        elapsed_ms: s.elapsed_ms,
        trace: s.trace.samples.iter().map(|t| (t.iteration, t.best_cost_m)).collect(),
    })
}

/// Runs a hill-climbing (`hc`) or annealing (`sa`) walk with the standard
/// schedule T0 = 1, alpha = 0.99.
pub fn walk(kind: &str, method: &str, x1: f64, x2: f64, seed: u64) -> Result<WalkResult, String> {
    let kind: Landscape = kind.parse().map_err(|e: waypoint_tsp::Error| e.to_string())?;
    let trace = match method {
        "hc" => landscape::hc_walk(kind, (x1, x2), landscape::DEFAULT_MAX_ITERS),
        "sa" => landscape::sa_walk(kind, (x1, x2), 1.0, 0.99, seed, landscape::DEFAULT_MAX_ITERS),
        other => return Err(format!("method must be hc or sa, got {other:?}")),
    }
    .map_err(|e| e.to_string())?;
    let r = &trace.records;
    Ok(WalkResult {
        x1: r.iter().map(|w| w.x1).collect(),
        x2: r.iter().map(|w| w.x2).collect(),
        objective: r.iter().map(|w| w.objective).collect(),
        temperature: r.iter().filter_map(|w| w.temperature).collect(),
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn solve_route(xy: &[f64], method: &str, seed: u32, max_iters: u32) -> Result<String, JsValue> {
    to_js(route(xy, method, seed as u64, max_iters as u64))
}

#[wasm_bindgen]
pub fn landscape_walk(kind: &str, method: &str, x1: f64, x2: f64, seed: u32) -> Result<String, JsValue> {
    to_js(walk(kind, method, x1, x2, seed as u64))
}

/// Method ids and kinds, for the page's selector.
#[wasm_bindgen]
pub fn method_ids() -> String {
    let ids: Vec<(&str, _)> = solve::methods().into_iter().map(|m| (m.id, m.kind)).collect();
    serde_json::to_string(&ids).unwrap_or_else(|_| "[]".into())
}
