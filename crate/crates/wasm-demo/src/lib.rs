//! Browser bindings for three small demos: the circle patch, the seven
//! conditions on 2×2 matrices, and the fixed-rank chart probe.
//!
//! Each export returns a JSON string; the plain functions behind them are
//! usable (and tested) natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use frobkit::builtins::builtin_family;
use frobkit::frobenius::{integrate, GridSpec};
use frobkit::geninv::{moore_penrose_with_tol, seven_conditions};
use frobkit::linalg::rank_of;
use frobkit::opmanifold::{fixed_rank_chart_check, tangency_fixed_rank, OperatorFamilyContext};
use frobkit::sampling::{rank_k_matrix, rng_for};
use frobkit::{Config, Matrix};

const CFG: Config = Config::DEFAULT;

#[derive(Serialize)]
pub struct CirclePatch {
    pub x: Vec<f64>,
    pub y: Vec<Option<f64>>,
    pub max_error: f64,
    pub breaches: usize,
}

/// Integrates the circle family from `(0, 1)` over `[-extent, extent]`.
pub fn circle_patch_native(extent: f64, nodes: usize, step: f64) -> Result<CirclePatch, String> {
    let circle = builtin_family("sphere_2d", &CFG).map_err(|e| e.to_string())?;
    let grid = GridSpec::uniform(1, extent, nodes).map_err(|e| e.to_string())?;
    let patch = integrate(&circle.family, &grid, step, &CFG).map_err(|e| e.to_string())?;
    let x: Vec<f64> = patch.grid.iter().map(|z| z[0]).collect();
    let y: Vec<Option<f64>> = patch.psi.iter().map(|p| p.as_ref().map(|w| w[0])).collect();
    let max_error = x
        .iter()
        .zip(&y)
        .filter_map(|(x, y)| y.map(|y| (y - (1.0 - x * x).max(0.0).sqrt()).abs()))
        .fold(0.0, f64::max);
    Ok(CirclePatch {
        x,
        y,
        max_error,
        breaches: patch.diagnostics.breaches.len(),
    })
}

#[derive(Serialize)]
pub struct ConditionsView {
    pub holds: Vec<(String, bool)>,
    pub agree: bool,
    pub rank_a: usize,
    pub rank_t: usize,
}

/// Seven conditions for row-major 2×2 `A` and `T` with the Moore–Penrose `A⁺`.
pub fn conditions_native(a: &[f64], t: &[f64]) -> Result<ConditionsView, String> {
    if a.len() != 4 || t.len() != 4 {
        return Err("A and T need four entries each".into());
    }
    let a = Matrix::from_row_slice(2, 2, a);
    let t = Matrix::from_row_slice(2, 2, t);
    let gi = moore_penrose_with_tol(&a, CFG.tol_split);
    let report = seven_conditions(&gi, &t, &CFG).map_err(|e| e.to_string())?;
    Ok(ConditionsView {
        holds: report.conditions.iter().map(|(k, c)| (k.clone(), c.holds)).collect(),
        agree: report.agree,
        rank_a: rank_of(&a, CFG.tol_split),
        rank_t: rank_of(&t, CFG.tol_split),
    })
}

#[derive(Serialize)]
pub struct ChartView {
    pub m0_dim: usize,
    pub round_trip_max: f64,
    pub rank_failures: usize,
    pub tangency_residual: f64,
    pub tangent_span_dim: usize,
}

/// Chart checks around a random rank-`k` matrix of shape `m × n`.
pub fn chart_probe_native(m: usize, n: usize, k: usize, samples: usize, seed: u64) -> Result<ChartView, String> {
    if m == 0 || n == 0 || m > 6 || n > 6 || k == 0 || k > m.min(n) {
        return Err(format!("need 1 ≤ k ≤ min(m, n) and m, n ≤ 6, got {m}×{n} rank {k}"));
    }
    let mut rng = rng_for(seed, 0);
    let ctx = OperatorFamilyContext::new(&rank_k_matrix(&mut rng, m, n, k), &CFG).map_err(|e| e.to_string())?;
    let report = fixed_rank_chart_check(&ctx, samples, seed, &CFG);
    let x = ctx.sample_rank_k(&mut rng);
    let tan = tangency_fixed_rank(&ctx, &x, ctx.m0.dim() + 4, seed, &CFG).map_err(|e| e.to_string())?;
    Ok(ChartView {
        m0_dim: report.m0_dim,
        round_trip_max: report.round_trip_max,
        rank_failures: report.rank_failures,
        tangency_residual: tan.max_residual,
        tangent_span_dim: tan.span_dim,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn circle_patch(extent: f64, nodes: usize, step: f64) -> Result<String, JsValue> {
    to_js(circle_patch_native(extent, nodes, step))
}

#[wasm_bindgen]
pub fn conditions(a: &[f64], t: &[f64]) -> Result<String, JsValue> {
    to_js(conditions_native(a, t))
}

#[wasm_bindgen]
pub fn chart_probe(m: usize, n: usize, k: usize, samples: usize, seed: u64) -> Result<String, JsValue> {
    to_js(chart_probe_native(m, n, k, samples, seed))
}
