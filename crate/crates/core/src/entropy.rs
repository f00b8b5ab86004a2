//! Volume entropy of germs from metric-ball growth in the universal cover,
//! the Manning lower bound, and scans along rays `t ↦ (e^{2u_t}h, tB)`.

use serde::Serialize;

use crate::cover::{ball_growth, cover_tiles, tile_cover, GrowthCurve};
use crate::error::{Error, Result};
use crate::germ::{jacobi_min_eig, solve_ray, Classification, Germ, SolverOptions};
use crate::group::SurfaceGroupRep;
use crate::mesh::{CotanOperator, GluedMesh};
use crate::quaddiff::{wp_norm_sq, QuadDiff};

#[derive(Clone, Debug)]
pub struct EntropyOptions {
    /// Word-length bound for the tiles of the cover.
    pub depth: usize,
    /// Fit window in units of `e^{2u}h`; `None` uses `[0.45, 0.9]·R_safe·e^{min u}`,
    /// the word-length safe radius converted to a lower bound in `g`.
    pub window: Option<(f64, f64)>,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        EntropyOptions {
            depth: 8,
            window: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyEstimate {
    /// Growth rate of the germ's own metric `c·e^{2u}h`.
    pub value: f64,
    /// Growth rate of `e^{2u}h`, which does not depend on `c`.
    pub unit_rate: f64,
    pub scale: f64,
    pub window: (f64, f64),
    pub stderr: f64,
    pub depth: usize,
    pub safe_radius: f64,
    pub within_safe: bool,
    pub curve: GrowthCurve,
}

/// Least-squares line through `(x, y)`; returns slope and its standard error.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Insufficient(format!("{n} points in fit window")));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = points
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum();
    let stderr = (rss / (nf - 2.0) / sxx).sqrt();
    Ok((slope, stderr))
}

/// `x / s`, moved by at most one ulp so that multiplying back by `s`
/// reproduces `x` whenever some float does.
fn divide_round_trip(x: f64, s: f64) -> f64 {
    let v = x / s;
    [v, v.next_up(), v.next_down()]
        .into_iter()
        .find(|c| c * s == x)
        .unwrap_or(v)
}

/// Default fit window for a germ with the given `min u`.
pub fn default_window(rep: &SurfaceGroupRep, depth: usize, min_u: f64) -> (f64, f64) {
    let r = rep.safe_radius(depth) * min_u.min(0.0).exp();
    (0.45 * r, 0.9 * r)
}

pub fn entropy_estimate(germ: &Germ, rep: &SurfaceGroupRep, mesh: &GluedMesh, opts: &EntropyOptions) -> Result<EntropyEstimate> {
    let min_u = germ.u.iter().cloned().fold(f64::INFINITY, f64::min);
    let (lo, hi) = opts.window.unwrap_or_else(|| default_window(rep, opts.depth, min_u));
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Window {
            lo,
            hi,
            reason: "window must satisfy 0 < lo < hi".into(),
        });
    }
    let reach_h = hi * (-min_u).exp() + 0.5;
    let tiles = cover_tiles(rep, opts.depth, reach_h + rep.octagon().circumradius)?;
    let cover = tile_cover(rep, mesh, &tiles, &germ.u)?;
    drop(tiles);
    let area: Vec<f64> = germ
        .u
        .iter()
        .zip(&germ.mass)
        .map(|(u, m)| (2.0 * u).exp() * m)
        .collect();
    let curve = ball_growth(&cover, cover.base(), hi, &area);
    if curve.truncated {
        return Err(Error::Window {
            lo,
            hi,
            reason: format!("exceeds safe radius {:.4} at depth {}", curve.safe_radius, opts.depth),
        });
    }
    let pts: Vec<(f64, f64)> = curve
        .radii
        .iter()
        .zip(&curve.areas)
        .filter(|(r, _)| **r >= lo - 1e-9 && **r <= hi + 1e-9)
        .map(|(r, a)| (*r, a.ln()))
        .collect();
    let (unit_rate, unit_err) = fit_slope(&pts)?;
    let scale = germ.scale_factor();
    let root = scale.sqrt();
    Ok(EntropyEstimate {
        value: divide_round_trip(unit_rate, root),
        unit_rate,
        scale,
        window: (lo, hi),
        stderr: unit_err / root,
        depth: opts.depth,
        safe_radius: curve.safe_radius,
        within_safe: hi <= curve.safe_radius,
        curve,
    })
}

/// `(1/Vol) ∫ √(−K_g) dV_g`; on an unscaled germ `−K_g = 1 + ½‖B‖²_g`.
pub fn manning_bound(germ: &Germ) -> f64 {
    let dv = germ.dv();
    let num: f64 = germ.curvature().iter().zip(&dv).map(|(k, v)| (-k).sqrt() * v).sum();
    num / dv.iter().sum::<f64>()
}

/// `(lo, hi)` with `lo = (1/Vol) ∫ √(−K_g) dV_g`, `hi = √(max −K_g)`.
pub fn entropy_brackets(germ: &Germ) -> (f64, f64) {
    let hi = germ.curvature().iter().fold(0.0f64, |m, k| m.max(-k)).sqrt();
    (manning_bound(germ), hi)
}

#[derive(Clone, Debug, Serialize)]
pub struct RayScanRow {
    pub t: f64,
    pub status: String,
    pub manning: Option<f64>,
    pub entropy: Option<f64>,
    pub entropy_stderr: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub lambda_min: Option<f64>,
    pub sup_b_sq: Option<f64>,
    pub volume: Option<f64>,
    pub classification: Option<Classification>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RayScan {
    pub rows: Vec<RayScanRow>,
    pub manning_increasing: bool,
    pub entropy_monotone: bool,
    pub chain_holds: bool,
    pub tolerance: f64,
    pub monotone_tolerance: f64,
}

#[derive(Clone, Debug)]
pub struct ScanOptions {
    pub solver: SolverOptions,
    pub entropy: EntropyOptions,
    pub with_entropy: bool,
    /// Allowed gap in `M ≤ Ê + tol`.
    pub tolerance: f64,
    /// Allowed decrease of `Ê` between scan points.
    pub monotone_tolerance: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            solver: SolverOptions::default(),
            entropy: EntropyOptions::default(),
            with_entropy: true,
            tolerance: 0.1,
            monotone_tolerance: 0.05,
        }
    }
}

pub fn ray_scan(
    rep: &SurfaceGroupRep,
    mesh: &GluedMesh,
    op: &CotanOperator,
    qd: &QuadDiff,
    ts: &[f64],
    opts: &ScanOptions,
) -> Result<RayScan> {
    if ts.windows(2).any(|w| w[1] <= w[0]) || ts.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::OutOfRange {
            what: "scan parameters",
            value: ts.first().copied().unwrap_or(f64::NAN),
            allowed: "strictly increasing from 0".into(),
        });
    }
    let q = qd.norm_sq_h(mesh);
    let germs = solve_ray(op, &q, ts, &opts.solver);
    // One window for the whole scan, from the germ with the smallest u.
    let mut entropy_opts = opts.entropy.clone();
    if entropy_opts.window.is_none() {
        let min_u = germs
            .iter()
            .flatten()
            .flat_map(|g| g.u.iter().cloned())
            .fold(0.0, f64::min);
        entropy_opts.window = Some(default_window(rep, opts.entropy.depth, min_u));
    }
    let mut rows = Vec::with_capacity(ts.len());
    for (&t, g) in ts.iter().zip(germs) {
        let row = match g {
            Ok(g) => {
                let (lo, hi) = entropy_brackets(&g);
                let jac = jacobi_min_eig(&g, op, 1e-8).ok();
                let ent = if opts.with_entropy {
                    Some(entropy_estimate(&g, rep, mesh, &entropy_opts)?)
                } else {
                    None
                };
                RayScanRow {
                    t,
                    status: "ok".into(),
                    manning: Some(manning_bound(&g)),
                    entropy: ent.as_ref().map(|e| e.value),
                    entropy_stderr: ent.as_ref().map(|e| e.stderr),
                    lo: Some(lo),
                    hi: Some(hi),
                    lambda_min: jac.map(|j| j.lambda_min),
                    sup_b_sq: Some(g.sup_b_sq()),
                    volume: Some(g.volume()),
                    classification: Some(g.classification()),
                }
            }
            Err(_) => RayScanRow {
                t,
                status: "ray-terminated".into(),
                manning: None,
                entropy: None,
                entropy_stderr: None,
                lo: None,
                hi: None,
                lambda_min: None,
                sup_b_sq: None,
                volume: None,
                classification: None,
            },
        };
        rows.push(row);
    }
    let ms: Vec<f64> = rows.iter().filter_map(|r| r.manning).collect();
    let manning_increasing = ms.windows(2).all(|w| w[1] > w[0]);
    let almost: Vec<&RayScanRow> = rows
        .iter()
        .filter(|r| matches!(r.classification, Some(Classification::Fuchsian | Classification::AlmostFuchsian)))
        .collect();
    let es: Vec<f64> = almost.iter().filter_map(|r| r.entropy).collect();
    let entropy_monotone = es
        .iter()
        .enumerate()
        .all(|(i, a)| es[i + 1..].iter().all(|b| *b >= a - opts.monotone_tolerance));
    let chain_holds = rows.iter().all(|r| match (r.manning, r.entropy) {
        (Some(m), Some(e)) => m >= 1.0 - 1e-9 && m <= e + opts.tolerance,
        (Some(m), None) => m >= 1.0 - 1e-9,
        _ => true,
    });
    Ok(RayScan {
        rows,
        manning_increasing,
        entropy_monotone,
        chain_holds,
        tolerance: opts.tolerance,
        monotone_tolerance: opts.monotone_tolerance,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HessianReport {
    pub dt: f64,
    pub header: String,
    pub manning: [f64; 2],
    pub manning_curvature: [f64; 2],
    pub entropy: Option<[f64; 2]>,
    pub second_diff_m: f64,
    pub second_diff_m_curvature: f64,
    pub second_diff_e: Option<f64>,
    pub second_diff_e_stderr: Option<f64>,
    pub inconclusive: bool,
    /// `2π ⟨α, α⟩_WP` for the differential as given.
    pub wp_bound: f64,
    /// The same divided by the normalized area `4π`.
    pub wp_bound_per_area: f64,
    pub e_above_m: Option<bool>,
}

pub const HESSIAN_HEADER: &str = "germs rescaled to area 4π at each t; \
    M = (1/Vol) ∫ √(1 + ½‖B‖²) dV for the rescaled pair (g, B); \
    manning_curvature uses √(−K) instead and is ≤ 1 on this family by Cauchy–Schwarz; \
    second differences use u(−t) = u(t), so f'' ≈ 2(f(dt) − f(0))/dt²; \
    wp_bound = 2π⟨α,α⟩_WP with ⟨α,α⟩_WP = ∫‖α‖²_h dV_h";

/// Rescales a germ to total area `4π`.
pub fn normalize_area(g: &Germ) -> Germ {
    let c = 4.0 * std::f64::consts::PI / g.volume();
    g.scaled(c)
}

/// `(1/Vol) ∫ √(1 + ½‖B‖²_g) dV_g`; agrees with [`manning_bound`] on an
/// unscaled germ.
fn integrand_mean(g: &Germ) -> f64 {
    let dv = g.dv();
    let num: f64 = g.half_b_sq().iter().zip(&dv).map(|(h, v)| (1.0 + h).sqrt() * v).sum();
    num / dv.iter().sum::<f64>()
}

pub fn hessian_experiment(
    rep: &SurfaceGroupRep,
    mesh: &GluedMesh,
    op: &CotanOperator,
    qd: &QuadDiff,
    dt: f64,
    with_entropy: bool,
    opts: &ScanOptions,
) -> Result<HessianReport> {
    if !(0.01..=0.1).contains(&dt) {
        return Err(Error::OutOfRange {
            what: "finite-difference step",
            value: dt,
            allowed: "[0.01, 0.1]".into(),
        });
    }
    let q = qd.norm_sq_h(mesh);
    let germs: Vec<Germ> = solve_ray(op, &q, &[0.0, dt], &opts.solver)
        .into_iter()
        .map(|g| g.map(|g| normalize_area(&g)))
        .collect::<Result<_>>()?;
    let m = [integrand_mean(&germs[0]), integrand_mean(&germs[1])];
    let mk = [manning_bound(&germs[0]), manning_bound(&germs[1])];
    let d2 = |f: [f64; 2]| 2.0 * (f[1] - f[0]) / (dt * dt);
    let second_diff_m = d2(m);
    let (entropy, second_diff_e, se) = if with_entropy {
        let e0 = entropy_estimate(&germs[0], rep, mesh, &opts.entropy)?;
        let e1 = entropy_estimate(&germs[1], rep, mesh, &opts.entropy)?;
        let se = 2.0 * (e0.stderr.powi(2) + e1.stderr.powi(2)).sqrt() / (dt * dt);
        (Some([e0.value, e1.value]), Some(d2([e0.value, e1.value])), Some(se))
    } else {
        (None, None, None)
    };
    let inconclusive = match (second_diff_e, se) {
        (Some(v), Some(s)) => s > v.abs(),
        _ => true,
    };
    let wp = 2.0 * std::f64::consts::PI * wp_norm_sq(qd, mesh);
    Ok(HessianReport {
        dt,
        header: HESSIAN_HEADER.into(),
        manning: m,
        manning_curvature: mk,
        entropy,
        second_diff_m,
        second_diff_m_curvature: d2(mk),
        second_diff_e,
        second_diff_e_stderr: se,
        inconclusive,
        wp_bound: wp,
        wp_bound_per_area: wp / (4.0 * std::f64::consts::PI),
        e_above_m: second_diff_e.map(|e| e >= second_diff_m - 0.05),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        let (s, e) = fit_slope(&pts).unwrap();
        assert!((s - 2.0).abs() < 1e-12 && e < 1e-10);
        assert!(fit_slope(&pts[..2]).is_err());
    }

    #[test]
    fn round_trip_division() {
        for &x in &[0.9876543210123, 1.0, 1.0123456789, 0.3333333333333333] {
            for &c in &[0.5f64, 2.0] {
                let s = c.sqrt();
                assert_eq!(divide_round_trip(x, s) * s, x);
            }
        }
    }

    #[test]
    fn constant_field_manning() {
        let g = Germ {
            t: 1.0,
            u: vec![0.0; 4],
            q_h: vec![0.3; 4],
            mass: vec![1.0, 2.0, 3.0, 4.0],
            log_scale: 0.0,
            residual: 0.0,
            newton_steps: 0,
        };
        assert_eq!(manning_bound(&g), 1.3f64.sqrt());
        let (lo, hi) = entropy_brackets(&g);
        assert!((lo - 1.3f64.sqrt()).abs() < 1e-15 && (hi - 1.3f64.sqrt()).abs() < 1e-15);
    }
}
