//! wasm-bindgen bindings for the static demo in `www/`. Every export returns
//! either SVG markup or a JSON string so the page needs no glue beyond
//! `JSON.parse`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use germlab::entropy::manning_bound;
use germlab::germ::{solve_ray, Classification, SolverOptions};
use germlab::group::{build_octagon_group, THETA_MAX};
use germlab::limits::{limit_set_sample, plane_fit};
use germlab::mesh::{build_cotan, triangulate_domain};
use germlab::quaddiff::{poincare_series, Seed, SeriesOptions};
use germlab::rigidity::{rigidity_bounds, RigidityBounds, CHI_NOTE};
use germlab::svg::{limit_set_plot, line_chart, Series};

/// Largest word length the page may ask for; depth 7 already has about a
/// million elements.
pub const MAX_LIMIT_DEPTH: usize = 7;
const MAX_ELEMENTS: usize = 2_000_000;
const RAY_LEVEL: usize = 1;
const RAY_SERIES_DEPTH: usize = 6;
const RAY_POLE: (f64, f64) = (1.3, 0.0);

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializes")
}

#[derive(Serialize)]
pub struct LimitSetView {
    pub theta: f64,
    pub depth: usize,
    pub points: usize,
    pub plane_distance: f64,
    pub svg: String,
}

pub fn limit_set_view(theta: f64, depth: usize) -> germlab::Result<LimitSetView> {
    let depth = depth.clamp(2, MAX_LIMIT_DEPTH);
    let rep = build_octagon_group()?.bend(theta)?;
    let sample = limit_set_sample(&rep, depth, MAX_ELEMENTS)?;
    let title = format!("limit set, θ = {theta:.3}, depth {depth}");
    Ok(LimitSetView {
        theta,
        depth,
        points: sample.points.len(),
        plane_distance: plane_fit(&sample.points).max_distance,
        svg: limit_set_plot(&title, &sample.points),
    })
}

/// Limit set of the bent group as `{theta, depth, points, plane_distance, svg}`.
#[wasm_bindgen]
pub fn limit_set(theta: f64, depth: usize) -> Result<String, JsError> {
    limit_set_view(theta, depth).map(|v| to_json(&v)).map_err(js)
}

#[wasm_bindgen]
pub fn theta_max() -> f64 {
    THETA_MAX
}

#[derive(Serialize)]
pub struct RigidityView {
    pub bounds: RigidityBounds,
    pub note: &'static str,
    pub svg: String,
}

pub fn rigidity_view(epsilon: f64) -> germlab::Result<RigidityView> {
    let bounds = rigidity_bounds(epsilon)?;
    let grid: Vec<RigidityBounds> = (0..=90)
        .map(|i| rigidity_bounds(i as f64 / 100.0))
        .collect::<germlab::Result<_>>()?;
    let pick = |f: fn(&RigidityBounds) -> f64| grid.iter().map(|b| (b.epsilon, f(b))).collect::<Vec<_>>();
    let series = [
        Series {
            name: "diameter",
            color: "#1f4e9c",
            points: pick(|b| b.diam_bound),
        },
        Series {
            name: "Teichmüller",
            color: "#c0392b",
            points: pick(|b| b.teich_bound),
        },
        Series {
            name: "volume / 10",
            color: "#27ae60",
            points: pick(|b| b.vol_bound / 10.0),
        },
        Series {
            name: "selected ε",
            color: "#222222",
            points: vec![(epsilon, 0.0), (epsilon, bounds.teich_bound.min(4.0))],
        },
    ];
    Ok(RigidityView {
        bounds,
        note: CHI_NOTE,
        svg: line_chart("rigidity bounds against ε = sup ‖B‖²", "ε", &series, None),
    })
}

/// Rigidity bounds at `epsilon` with a chart over `[0, 0.9]`.
#[wasm_bindgen]
pub fn rigidity(epsilon: f64) -> Result<String, JsError> {
    rigidity_view(epsilon).map(|v| to_json(&v)).map_err(js)
}

#[derive(Serialize)]
pub struct RayPoint {
    pub t: f64,
    pub manning: f64,
    pub sup_b_sq: f64,
    pub volume: f64,
    pub classification: Classification,
}

#[derive(Serialize)]
pub struct RayView {
    pub points: Vec<RayPoint>,
    pub terminated: Option<String>,
    pub svg: String,
}

pub fn germ_ray_view(t_max: f64, steps: usize) -> germlab::Result<RayView> {
    let steps = steps.clamp(1, 40);
    let rep = build_octagon_group()?;
    let mesh = triangulate_domain(&rep, RAY_LEVEL)?;
    let op = build_cotan(&mesh)?;
    let opts = SeriesOptions {
        depth: RAY_SERIES_DEPTH,
        ..SeriesOptions::default()
    };
    let w0 = germlab::moebius::C64::new(RAY_POLE.0, RAY_POLE.1);
    let qd = poincare_series(&rep, &mesh, Seed::Pole { w0 }, &opts)?;
    let q = qd.norm_sq_h(&mesh);
    let ts: Vec<f64> = (0..=steps).map(|i| t_max * i as f64 / steps as f64).collect();
    let mut points = Vec::new();
    let mut terminated = None;
    for (t, r) in ts.iter().zip(solve_ray(&op, &q, &ts, &SolverOptions::default())) {
        match r {
            Ok(g) => points.push(RayPoint {
                t: *t,
                manning: manning_bound(&g),
                sup_b_sq: g.sup_b_sq(),
                volume: g.volume(),
                classification: g.classification(),
            }),
            Err(e) => {
                terminated = Some(e.to_string());
                break;
            }
        }
    }
    let series = [
        Series {
            name: "M(t)",
            color: "#c0392b",
            points: points.iter().map(|p| (p.t, p.manning)).collect(),
        },
        Series {
            name: "sup ‖B‖²",
            color: "#1f4e9c",
            points: points.iter().map(|p| (p.t, p.sup_b_sq)).collect(),
        },
    ];
    let svg = line_chart("germ ray on the level-1 mesh", "t", &series, None);
    Ok(RayView { points, terminated, svg })
}

/// Solves the germ ray on `[0, t_max]` in `steps` steps on a coarse mesh.
#[wasm_bindgen]
pub fn germ_ray(t_max: f64, steps: usize) -> Result<String, JsError> {
    germ_ray_view(t_max, steps).map(|v| to_json(&v)).map_err(js)
}
