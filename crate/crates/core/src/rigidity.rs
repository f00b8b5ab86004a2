//! Closed-form rigidity bounds in terms of `ε = sup ‖B‖²_g`, principal
//! curvatures, and the Uhlenbeck metric on `Σ × ℝ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::germ::Germ;
use crate::mesh::GluedMesh;
use crate::quaddiff::{hopf_tensor, lambda_h, QuadDiff};

/// `|χ(Σ)|` for genus two. The volume bound is stated with `2π|χ|` so that
/// it is positive.
pub const ABS_EULER_CHAR: f64 = 2.0;

pub const CHI_NOTE: &str = "volume bound uses 2π|χ(Σ)| = 4π; with the signed χ(Σ) = −2 the printed bound would be negative";

#[derive(Clone, Debug, Serialize)]
pub struct RigidityBounds {
    pub epsilon: f64,
    pub diam_bound: f64,
    pub teich_bound: f64,
    pub vol_bound: f64,
    pub bilipschitz_factor: f64,
}

pub fn rigidity_bounds(epsilon: f64) -> Result<RigidityBounds> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::OutOfRange {
            what: "epsilon (sup ‖B‖²); the bounds are unbounded from 1 on",
            value: epsilon,
            allowed: "[0, 1)".into(),
        });
    }
    let r = epsilon.sqrt();
    let teich = ((1.0 + r) / (1.0 - r)).ln();
    let diam = 0.5 * teich;
    Ok(RigidityBounds {
        epsilon,
        diam_bound: diam,
        teich_bound: teich,
        vol_bound: 2.0 * std::f64::consts::PI * ABS_EULER_CHAR * (r / (1.0 - epsilon) + diam),
        bilipschitz_factor: 1.0 + epsilon,
    })
}

/// `(λ₁, λ₂) = (√(½‖B‖²_g), −λ₁)` per quotient vertex.
pub fn principal_curvatures(germ: &Germ) -> Vec<(f64, f64)> {
    germ.principal_curvatures()
}

#[derive(Clone, Debug, Serialize)]
pub struct UhlenbeckMetric {
    /// `[1] ⊕ Pᵀ g P` with `P = cosh s·I + sinh s·S`, in the disk chart.
    pub matrix: [[f64; 3]; 3],
    pub slice_det: f64,
    /// `|tanh s|·λ₁ < 1`, i.e. `P` is invertible.
    pub valid: bool,
}

/// The metric `ds² + g((cosh s + sinh s·S)·, (cosh s + sinh s·S)·)` at a
/// quotient vertex, where `S = g⁻¹B` is the shape operator of the germ.
pub fn uhlenbeck_metric(germ: &Germ, qd: &QuadDiff, mesh: &GluedMesh, vertex: usize, s: f64) -> UhlenbeckMetric {
    let rep = mesh.representatives()[vertex];
    let a = qd.class_samples(mesh)[vertex];
    let conformal = (2.0 * (germ.u[vertex] + germ.log_scale)).exp() * lambda_h(mesh.vertices[rep]);
    let b = hopf_tensor(a * germ.t);
    // S = g⁻¹B is symmetric in this conformal chart.
    let sh = [[b[0] / conformal, b[1] / conformal], [b[1] / conformal, b[2] / conformal]];
    let (c, n) = (s.cosh(), s.sinh());
    let p = [
        [c + n * sh[0][0], n * sh[0][1]],
        [n * sh[1][0], c + n * sh[1][1]],
    ];
    let mut m = [[0.0; 3]; 3];
    m[0][0] = 1.0;
    for i in 0..2 {
        for j in 0..2 {
            m[i + 1][j + 1] = conformal * (p[0][i] * p[0][j] + p[1][i] * p[1][j]);
        }
    }
    let det_p = p[0][0] * p[1][1] - p[0][1] * p[1][0];
    let lambda1 = germ.half_b_sq()[vertex].sqrt();
    UhlenbeckMetric {
        matrix: m,
        slice_det: conformal * conformal * det_p * det_p,
        valid: s.tanh().abs() * lambda1 < 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_epsilon() {
        let b = rigidity_bounds(0.25).unwrap();
        assert!((b.diam_bound - 0.5 * 3f64.ln()).abs() <= 1e-15);
        assert!((b.teich_bound - 3f64.ln()).abs() <= 1e-15);
        assert_eq!(b.teich_bound, 2.0 * b.diam_bound);
        assert!((b.vol_bound - 15.280).abs() <= 1e-3);
        let z = rigidity_bounds(0.0).unwrap();
        assert_eq!((z.diam_bound, z.teich_bound, z.vol_bound), (0.0, 0.0, 0.0));
        assert!(rigidity_bounds(1.0).is_err());
        assert!(rigidity_bounds(-0.1).is_err());
    }
}
