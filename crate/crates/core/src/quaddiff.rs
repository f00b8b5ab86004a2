//! Holomorphic quadratic differentials `α = a(z) dz²` on the quotient, built
//! as Poincaré theta series of a rational seed with a pole outside the disk.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::ball::{walk_ball, BallOptions};
use crate::error::{Error, Result};
use crate::group::SurfaceGroupRep;
use crate::mesh::GluedMesh;
use crate::moebius::{Moebius, C64};

pub const DEFAULT_W0: f64 = 1.3;
pub const MAX_SERIES_DEPTH: usize = 12;
/// Relative tail size above which a series is flagged as not converged.
pub const TAIL_WARNING: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Seed {
    /// `f(z) = (z − w₀)^{−4}`.
    Pole { w0: C64 },
    Zero,
}

#[derive(Clone, Debug)]
pub struct SeriesOptions {
    pub depth: usize,
    /// Group elements displacing the centre further than this are summed but
    /// not expanded; their descendants contribute below `e^{−2R}`.
    pub prune_radius: Option<f64>,
    pub max_elements: usize,
    /// Rescale so that `max ‖α‖²_h = 1` over the mesh.
    pub normalize: bool,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions {
            depth: 10,
            prune_radius: Some(12.0),
            max_elements: 20_000_000,
            normalize: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadDiff {
    /// Coefficient `a(z)` per mesh vertex before the circle action.
    base: Vec<C64>,
    /// Accumulated circle-action angle.
    phase: f64,
    pub seed: Seed,
    pub depth: usize,
    /// Factor applied to the raw series by normalization.
    pub scale: f64,
    /// Largest last-annulus contribution relative to `max |a|`.
    pub tail: f64,
    /// Largest automorphy defect across glued vertex pairs, relative to `max |a|`.
    pub automorphy_residual: f64,
    pub converged: bool,
    pub terms: usize,
}

/// `e^{iθ}`, exact at multiples of π/2.
fn unit_phase(theta: f64) -> C64 {
    let k = (theta / FRAC_PI_2).round();
    if theta - k * FRAC_PI_2 == 0.0 {
        return match (k as i64).rem_euclid(4) {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
    }
    C64::from_polar(1.0, theta)
}

/// Density of the hyperbolic metric `h = λ_h |dz|²` on the disk.
pub fn lambda_h(z: C64) -> f64 {
    let s = 1.0 - z.norm_sqr();
    4.0 / (s * s)
}

impl QuadDiff {
    /// Builds a differential directly from per-vertex coefficients.
    pub fn from_samples(samples: Vec<C64>, seed: Seed, depth: usize) -> Self {
        QuadDiff {
            base: samples,
            phase: 0.0,
            seed,
            depth,
            scale: 1.0,
            tail: 0.0,
            automorphy_residual: 0.0,
            converged: true,
            terms: 0,
        }
    }

    pub fn zero(mesh: &GluedMesh) -> Self {
        Self::from_samples(vec![C64::new(0.0, 0.0); mesh.vertices.len()], Seed::Zero, 0)
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn sample(&self, v: usize) -> C64 {
        self.base[v] * unit_phase(self.phase)
    }

    pub fn samples(&self) -> Vec<C64> {
        let e = unit_phase(self.phase);
        self.base.iter().map(|a| a * e).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.base.iter().fold(0.0, |m, a| m.max(a.norm()))
    }

    pub fn is_zero(&self) -> bool {
        self.base.iter().all(|a| a.norm_sqr() == 0.0)
    }

    /// The circle action `α ↦ e^{iθ}α`.
    pub fn rotate(&self, theta: f64) -> QuadDiff {
        let mut out = self.clone();
        out.phase += theta;
        out
    }

    /// `‖α‖²_h` per quotient vertex, read at each class representative. The
    /// circle action does not enter, so rotated differentials give
    /// bit-identical norms.
    pub fn norm_sq_h(&self, mesh: &GluedMesh) -> Vec<f64> {
        mesh.representatives()
            .iter()
            .map(|&v| {
                let l = lambda_h(mesh.vertices[v]);
                self.base[v].norm_sqr() / (l * l)
            })
            .collect()
    }

    /// Coefficient per quotient vertex at the class representative.
    pub fn class_samples(&self, mesh: &GluedMesh) -> Vec<C64> {
        let e = unit_phase(self.phase);
        mesh.representatives().iter().map(|&v| self.base[v] * e).collect()
    }
}

fn seed_term(m: &Moebius, z: C64, w0: C64) -> C64 {
    // γ'(z)² f(γz) = (az + b − w₀(cz + d))^{−4}
    let w = m.a * z + m.b - w0 * (m.c * z + m.d);
    let w2 = w * w;
    (w2 * w2).inv()
}

pub fn poincare_series(rep: &SurfaceGroupRep, mesh: &GluedMesh, seed: Seed, opts: &SeriesOptions) -> Result<QuadDiff> {
    if !rep.is_fuchsian() {
        return Err(Error::NotFuchsian);
    }
    if opts.depth > MAX_SERIES_DEPTH {
        return Err(Error::OutOfRange {
            what: "series depth",
            value: opts.depth as f64,
            allowed: format!("[0, {MAX_SERIES_DEPTH}]"),
        });
    }
    let w0 = match seed {
        Seed::Zero => {
            let mut qd = QuadDiff::zero(mesh);
            qd.depth = opts.depth;
            return Ok(qd);
        }
        Seed::Pole { w0 } => w0,
    };
    if w0.norm() < 1.05 {
        return Err(Error::OutOfRange {
            what: "seed pole modulus",
            value: w0.norm(),
            allowed: "[1.05, ∞)".into(),
        });
    }
    let zs = &mesh.vertices;
    let mut sum = vec![C64::new(0.0, 0.0); zs.len()];
    let mut last = vec![0.0f64; zs.len()];
    let mut terms = 0usize;
    let ball_opts = BallOptions {
        max_elements: opts.max_elements,
        prune_radius: opts.prune_radius,
    };
    walk_ball(rep, opts.depth, &ball_opts, |e| {
        let m = e.map.to_disk();
        terms += 1;
        let in_last = e.word.len() == opts.depth;
        for (i, &z) in zs.iter().enumerate() {
            let t = seed_term(&m, z, w0);
            sum[i] += t;
            if in_last {
                last[i] += t.norm();
            }
        }
    })?;
    let max_abs = sum.iter().fold(0.0f64, |m, a| m.max(a.norm()));
    let scale = if opts.normalize && max_abs > 0.0 {
        let reps = mesh.representatives();
        let peak = reps
            .iter()
            .map(|&v| sum[v].norm_sqr() / lambda_h(zs[v]).powi(2))
            .fold(0.0, f64::max);
        1.0 / peak.sqrt()
    } else {
        1.0
    };
    let base: Vec<C64> = sum.iter().map(|a| a * scale).collect();
    let tail = if opts.depth == 0 || max_abs == 0.0 {
        0.0
    } else {
        last.iter().fold(0.0, |m: f64, x| m.max(*x)) / max_abs
    };
    let mut qd = QuadDiff {
        base,
        phase: 0.0,
        seed,
        depth: opts.depth,
        scale,
        tail,
        automorphy_residual: 0.0,
        converged: tail <= TAIL_WARNING,
        terms,
    };
    qd.automorphy_residual = automorphy_residual(rep, mesh, &qd);
    Ok(qd)
}

/// Largest `|a(N z) N'(z)² − a(z)|` over glued vertex pairs, relative to
/// `max |a|`.
pub fn automorphy_residual(rep: &SurfaceGroupRep, mesh: &GluedMesh, qd: &QuadDiff) -> f64 {
    let max = qd.max_abs();
    if max == 0.0 {
        return 0.0;
    }
    let gens: Vec<Moebius> = (0..crate::group::LETTERS).map(|k| rep.disk_generator(k)).collect();
    mesh.gluing
        .iter()
        .map(|g| {
            let d = gens[g.gen].derivative(mesh.vertices[g.a]);
            (qd.base[g.b] * d * d - qd.base[g.a]).norm()
        })
        .fold(0.0, f64::max)
        / max
}

#[derive(Clone, Debug, Serialize)]
pub struct PointwiseNorms {
    pub alpha_h: Vec<f64>,
    pub alpha_g: Vec<f64>,
    /// `½‖B‖²_g`, equal to `‖α‖²_g`.
    pub half_b_sq_g: Vec<f64>,
}

pub fn pointwise_norms(qd: &QuadDiff, u: &[f64], mesh: &GluedMesh) -> PointwiseNorms {
    let alpha_h = qd.norm_sq_h(mesh);
    let alpha_g: Vec<f64> = alpha_h.iter().zip(u).map(|(a, u)| a * (-4.0 * u).exp()).collect();
    PointwiseNorms {
        alpha_h,
        half_b_sq_g: alpha_g.clone(),
        alpha_g,
    }
}

/// `⟨α, α⟩_WP = ∫ ‖α‖²_h dV_h` by lumped quadrature.
pub fn wp_norm_sq(qd: &QuadDiff, mesh: &GluedMesh) -> f64 {
    qd.norm_sq_h(mesh)
        .iter()
        .zip(&mesh.vertex_area)
        .map(|(q, a)| q * a)
        .sum()
}

/// Beltrami coefficient `μ = e^{−2u} ā / λ_h` per quotient vertex.
pub fn fock_beltrami(qd: &QuadDiff, u: &[f64], mesh: &GluedMesh) -> Vec<C64> {
    let reps = mesh.representatives();
    qd.class_samples(mesh)
        .iter()
        .zip(&reps)
        .zip(u)
        .map(|((a, &v), u)| a.conj() * ((-2.0 * u).exp() / lambda_h(mesh.vertices[v])))
        .collect()
}

/// Components `(B₁₁, B₁₂, B₂₂)` of `B = Re α` in the disk chart.
pub fn hopf_tensor(a: C64) -> [f64; 3] {
    [a.re, -a.im, -a.re]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::build_octagon_group;
    use crate::mesh::triangulate_domain;

    #[test]
    fn phase_table_is_exact() {
        assert_eq!(unit_phase(0.0), C64::new(1.0, 0.0));
        assert_eq!(unit_phase(std::f64::consts::PI), C64::new(-1.0, 0.0));
        assert_eq!(unit_phase(-FRAC_PI_2), C64::new(0.0, -1.0));
        assert!((unit_phase(0.3) - C64::from_polar(1.0, 0.3)).norm() == 0.0);
    }

    #[test]
    fn depth_zero_is_the_seed() {
        let rep = build_octagon_group().unwrap();
        let mesh = triangulate_domain(&rep, 1).unwrap();
        let w0 = C64::new(1.3, 0.0);
        let opts = SeriesOptions {
            depth: 0,
            normalize: false,
            ..Default::default()
        };
        let qd = poincare_series(&rep, &mesh, Seed::Pole { w0 }, &opts).unwrap();
        for (v, z) in mesh.vertices.iter().enumerate() {
            let expect = ((z - w0).powi(4)).inv();
            assert!((qd.sample(v) - expect).norm() <= 1e-14 * expect.norm());
        }
        assert!(qd.automorphy_residual > 1e-3);
    }

    #[test]
    fn zero_seed_and_bad_pole() {
        let rep = build_octagon_group().unwrap();
        let mesh = triangulate_domain(&rep, 1).unwrap();
        let qd = poincare_series(&rep, &mesh, Seed::Zero, &SeriesOptions::default()).unwrap();
        assert!(qd.is_zero());
        assert_eq!(wp_norm_sq(&qd, &mesh), 0.0);
        let bad = Seed::Pole { w0: C64::new(1.01, 0.0) };
        assert!(poincare_series(&rep, &mesh, bad, &SeriesOptions::default()).is_err());
        let bent = rep.bend(0.1).unwrap();
        assert!(poincare_series(&bent, &mesh, Seed::Zero, &SeriesOptions::default()).is_err());
    }

    #[test]
    fn hopf_identity() {
        let a = C64::new(0.7, -1.9);
        let [b11, b12, b22] = hopf_tensor(a);
        assert_eq!(b11 + b22, 0.0);
        let lambda = 3.5;
        let b_sq = (b11 * b11 + b22 * b22 + 2.0 * b12 * b12) / (lambda * lambda);
        let alpha_sq = a.norm_sqr() / (lambda * lambda);
        assert!((b_sq - 2.0 * alpha_sq).abs() <= 1e-12 * b_sq);
    }
}
