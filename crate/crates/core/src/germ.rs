//! Germs `(e^{2u}h, t·Re α)` from the Gauss equation
//! `Δ_h u = e^{2u} + t²e^{−2u}‖α‖²_h − 1`, and the Jacobi operator
//! `−Δ_g − (‖B‖²_g − 2)` of the resulting minimal surface.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, max_abs};
use crate::mesh::CotanOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Fuchsian,
    AlmostFuchsian,
    Indefinite,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Fuchsian => "fuchsian",
            Classification::AlmostFuchsian => "almost-fuchsian",
            Classification::Indefinite => "indefinite",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Germ {
    pub t: f64,
    /// Conformal factor per quotient vertex: `g = e^{2u} h`.
    pub u: Vec<f64>,
    /// `‖α‖²_h` per quotient vertex.
    pub q_h: Vec<f64>,
    /// Lumped `h`-area per quotient vertex.
    pub mass: Vec<f64>,
    /// Constant rescaling: the metric is `e^{2·log_scale} g` with `B` fixed.
    pub log_scale: f64,
    pub residual: f64,
    pub newton_steps: usize,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_newton: usize,
    pub continuation_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_newton: 50,
            continuation_step: 0.05,
        }
    }
}

impl Germ {
    pub fn n(&self) -> usize {
        self.u.len()
    }

    /// The germ `(c·g, B)`.
    pub fn scaled(&self, c: f64) -> Germ {
        let mut g = self.clone();
        g.log_scale += 0.5 * c.ln();
        g
    }

    pub fn scale_factor(&self) -> f64 {
        (2.0 * self.log_scale).exp()
    }

    /// `½‖B‖²_g = t² e^{−4u} ‖α‖²_h`, per vertex.
    pub fn half_b_sq(&self) -> Vec<f64> {
        let t2 = self.t * self.t;
        let s = (-4.0 * self.log_scale).exp();
        self.u
            .iter()
            .zip(&self.q_h)
            .map(|(u, q)| t2 * (-4.0 * u).exp() * q * s)
            .collect()
    }

    pub fn sup_b_sq(&self) -> f64 {
        self.half_b_sq().iter().fold(0.0, |m, x| m.max(2.0 * x))
    }

    /// `K_g = −1 − ½‖B‖²_g` for the unscaled germ; scales by `1/c`.
    pub fn curvature(&self) -> Vec<f64> {
        let t2 = self.t * self.t;
        let s = (-2.0 * self.log_scale).exp();
        self.u
            .iter()
            .zip(&self.q_h)
            .map(|(u, q)| (-1.0 - t2 * (-4.0 * u).exp() * q) * s)
            .collect()
    }

    /// Lumped `g`-area per vertex.
    pub fn dv(&self) -> Vec<f64> {
        self.u
            .iter()
            .zip(&self.mass)
            .map(|(u, m)| (2.0 * (u + self.log_scale)).exp() * m)
            .collect()
    }

    pub fn volume(&self) -> f64 {
        self.dv().iter().sum()
    }

    pub fn classification(&self) -> Classification {
        let sup = self.sup_b_sq();
        if sup == 0.0 {
            Classification::Fuchsian
        } else if sup < 2.0 {
            Classification::AlmostFuchsian
        } else {
            Classification::Indefinite
        }
    }

    /// Principal curvatures `(λ₁, −λ₁)` with `λ₁ = √(½‖B‖²_g)`.
    pub fn principal_curvatures(&self) -> Vec<(f64, f64)> {
        self.half_b_sq()
            .iter()
            .map(|h| {
                let l = h.sqrt();
                (l, -l)
            })
            .collect()
    }
}

/// `F(u) = Δ_h u − e^{2u} − t²e^{−2u}q + 1`, per vertex.
pub fn gauss_defect(op: &CotanOperator, q_h: &[f64], t: f64, u: &[f64]) -> Vec<f64> {
    let lap = op.laplacian(u);
    let t2 = t * t;
    lap.iter()
        .zip(u)
        .zip(q_h)
        .map(|((l, u), q)| l - (2.0 * u).exp() - t2 * (-2.0 * u).exp() * q + 1.0)
        .collect()
}

/// Damped Newton iteration from `u0`.
fn newton(op: &CotanOperator, q_h: &[f64], t: f64, u0: Vec<f64>, opts: &SolverOptions) -> Result<(Vec<f64>, f64, usize)> {
    let t2 = t * t;
    let mut u = u0;
    let mut f = gauss_defect(op, q_h, t, &u);
    let mut res = max_abs(&f);
    for step in 0..=opts.max_newton {
        if res <= opts.tol {
            return Ok((u, res, step));
        }
        if step == opts.max_newton {
            break;
        }
        let diag: Vec<f64> = u
            .iter()
            .zip(q_h)
            .zip(&op.mass)
            .map(|((u, q), m)| m * (2.0 * (2.0 * u).exp() - 2.0 * t2 * (-2.0 * u).exp() * q))
            .collect();
        let a = op.stiffness.plus_diagonal(&diag);
        let rhs: Vec<f64> = f.iter().zip(&op.mass).map(|(f, m)| f * m).collect();
        let delta = a.lu()?.solve(&rhs);
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::RayTerminated { t, residual: res });
        }
        let mut s = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(u, d)| u + s * d).collect();
            let ft = gauss_defect(op, q_h, t, &trial);
            let rt = max_abs(&ft);
            if rt < res || (rt <= opts.tol) {
                u = trial;
                f = ft;
                res = rt;
                break;
            }
            s *= 0.5;
            if s < 1.0 / 1024.0 {
                return Err(Error::RayTerminated { t, residual: res });
            }
        }
    }
    Err(Error::RayTerminated { t, residual: res })
}

fn make_germ(op: &CotanOperator, q_h: &[f64], t: f64, u: Vec<f64>, residual: f64, steps: usize) -> Germ {
    Germ {
        t,
        u,
        q_h: q_h.to_vec(),
        mass: op.mass.clone(),
        log_scale: 0.0,
        residual,
        newton_steps: steps,
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::OutOfRange {
            what: "ray parameter",
            value: t,
            allowed: "[0, ∞)".into(),
        });
    }
    Ok(())
}

/// Solves the Gauss equation at `t`, starting from `u = 0` and falling back
/// to continuation in steps of `opts.continuation_step`.
pub fn solve_gauss(op: &CotanOperator, q_h: &[f64], t: f64, opts: &SolverOptions) -> Result<Germ> {
    check_t(t)?;
    if q_h.len() != op.n() {
        return Err(Error::Linear(format!("forcing has {} entries for {} vertices", q_h.len(), op.n())));
    }
    match newton(op, q_h, t, vec![0.0; op.n()], opts) {
        Ok((u, r, s)) => Ok(make_germ(op, q_h, t, u, r, s)),
        Err(_) => {
            let rows = solve_ray(op, q_h, &[t], opts);
            rows.into_iter().next().unwrap()
        }
    }
}

/// Solves along increasing `ts`, continuing from the previous solution with
/// sub-steps no longer than `opts.continuation_step`. After the first
/// failure every later entry reports the same termination.
pub fn solve_ray(op: &CotanOperator, q_h: &[f64], ts: &[f64], opts: &SolverOptions) -> Vec<Result<Germ>> {
    let mut out = Vec::with_capacity(ts.len());
    let mut u = vec![0.0; op.n()];
    let mut t_prev = 0.0;
    let mut failure: Option<(f64, f64)> = None;
    for &t in ts {
        if let Some((tf, rf)) = failure {
            out.push(Err(Error::RayTerminated { t: tf, residual: rf }));
            continue;
        }
        if let Err(e) = check_t(t) {
            out.push(Err(e));
            continue;
        }
        let gap = (t - t_prev).abs();
        let n = (gap / opts.continuation_step).ceil().max(1.0) as usize;
        let mut result = Ok((u.clone(), 0.0, 0));
        let mut steps_total = 0;
        for k in 1..=n {
            let tk = if k == n { t } else { t_prev + (t - t_prev) * k as f64 / n as f64 };
            let start = match &result {
                Ok((uu, _, _)) => uu.clone(),
                Err(_) => break,
            };
            result = newton(op, q_h, tk, start, opts);
            if let Ok((_, _, s)) = &result {
                steps_total += s;
            }
        }
        match result {
            Ok((uu, r, _)) => {
                u = uu.clone();
                t_prev = t;
                out.push(Ok(make_germ(op, q_h, t, uu, r, steps_total)));
            }
            Err(Error::RayTerminated { t: tf, residual }) => {
                failure = Some((tf, residual));
                out.push(Err(Error::RayTerminated { t: tf, residual }));
            }
            Err(e) => {
                failure = Some((t, f64::NAN));
                out.push(Err(e));
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub gauss_residual: f64,
    pub max_u: f64,
    pub max_principle: bool,
    pub max_curvature: f64,
    pub curvature_bound: bool,
    pub gauss_bonnet: f64,
    pub gauss_bonnet_rel_err: f64,
    pub passed: bool,
}

pub fn validate(germ: &Germ, op: &CotanOperator, tol: f64) -> ValidationReport {
    let f = gauss_defect(op, &germ.q_h, germ.t, &germ.u);
    let gauss_residual = max_abs(&f);
    let max_u = germ.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let k = germ.curvature();
    let max_curvature = k.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let gauss_bonnet = dot(&k, &germ.dv());
    let expect = -4.0 * std::f64::consts::PI;
    let gauss_bonnet_rel_err = ((gauss_bonnet - expect) / expect).abs();
    let max_principle = max_u <= 1e-8;
    let curvature_bound = max_curvature <= -1.0 + 1e-6;
    ValidationReport {
        gauss_residual,
        max_u,
        max_principle,
        max_curvature,
        curvature_bound,
        gauss_bonnet,
        gauss_bonnet_rel_err,
        passed: gauss_residual <= tol && max_principle && curvature_bound && gauss_bonnet_rel_err <= 0.01,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct JacobiReport {
    pub lambda_min: f64,
    pub eigenfield: Vec<f64>,
    pub sup_norm_b_sq: f64,
    pub classification: Classification,
    pub iterations: usize,
    pub residual: f64,
}

/// Smallest eigenvalue of the pencil `(L + diag((2 − ‖B‖²_g) M_g), M_g)`
/// with `M_g = e^{2u} M`, by shifted inverse iteration.
pub fn jacobi_min_eig(germ: &Germ, op: &CotanOperator, tol: f64) -> Result<JacobiReport> {
    let n = germ.n();
    let mg = germ.dv();
    let potential: Vec<f64> = germ.half_b_sq().iter().map(|h| 2.0 - 2.0 * h).collect();
    let shift = potential.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let a_diag: Vec<f64> = potential.iter().zip(&mg).map(|(p, m)| p * m).collect();
    let a = op.stiffness.plus_diagonal(&a_diag);
    let shifted_diag: Vec<f64> = potential.iter().zip(&mg).map(|(p, m)| (p - shift) * m).collect();
    let factor = op.stiffness.plus_diagonal(&shifted_diag).cholesky()?;

    let b_norm = |x: &[f64]| x.iter().zip(&mg).map(|(x, m)| x * x * m).sum::<f64>().sqrt();
    let mut x = vec![1.0; n];
    let nx = b_norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut lambda = f64::NAN;
    let mut residual = f64::INFINITY;
    const MAX_ITER: usize = 2000;
    for it in 1..=MAX_ITER {
        let bx: Vec<f64> = x.iter().zip(&mg).map(|(x, m)| x * m).collect();
        let mut y = factor.solve(&bx);
        let ny = b_norm(&y);
        y.iter_mut().for_each(|v| *v /= ny);
        let ay = a.mul_vec(&y);
        let next = dot(&y, &ay);
        // ‖Ay − λ M_g y‖ in the M_g⁻¹ norm
        residual = ay
            .iter()
            .zip(&y)
            .zip(&mg)
            .map(|((ay, y), m)| (ay - next * m * y).powi(2) / m)
            .sum::<f64>()
            .sqrt();
        let settled = (next - lambda).abs() <= tol * next.abs().max(1.0);
        lambda = next;
        x = y;
        if settled && residual <= tol.sqrt() {
            if x.iter().sum::<f64>() < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
            return Ok(JacobiReport {
                lambda_min: lambda,
                eigenfield: x,
                sup_norm_b_sq: germ.sup_b_sq(),
                classification: germ.classification(),
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::EigenStagnation {
        iterations: MAX_ITER,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::build_octagon_group;
    use crate::mesh::{build_cotan, triangulate_domain};

    fn operator(level: usize) -> CotanOperator {
        let rep = build_octagon_group().unwrap();
        build_cotan(&triangulate_domain(&rep, level).unwrap()).unwrap()
    }

    #[test]
    fn fuchsian_germ_is_exact() {
        let op = operator(2);
        let q = vec![0.5; op.n()];
        let g = solve_gauss(&op, &q, 0.0, &SolverOptions::default()).unwrap();
        assert!(g.u.iter().all(|&u| u == 0.0));
        assert_eq!(g.residual, 0.0);
        assert_eq!(g.classification(), Classification::Fuchsian);
        assert!(solve_gauss(&op, &q, -0.1, &SolverOptions::default()).is_err());
    }

    #[test]
    fn constant_forcing_back_substitution() {
        let op = operator(2);
        let q = vec![3.0 / 16.0; op.n()];
        let g = solve_gauss(&op, &q, 1.0, &SolverOptions::default()).unwrap();
        let expect = 0.5 * 0.75f64.ln();
        for &u in &g.u {
            assert!((u - expect).abs() <= 1e-8);
        }
        // Substituting back: e^{4u} − e^{2u} + 3/16 = 0.
        let x = (2.0 * expect).exp();
        assert!((x * x - x + 3.0 / 16.0).abs() <= 1e-15);
    }

    #[test]
    fn corrupted_germ_fails_validation() {
        let op = operator(2);
        let q: Vec<f64> = (0..op.n()).map(|i| 0.5 + 0.4 * ((i as f64) * 0.7).sin()).collect();
        let mut g = solve_gauss(&op, &q, 0.4, &SolverOptions::default()).unwrap();
        let good = validate(&g, &op, 1e-8);
        assert!(good.passed, "{good:?}");
        g.u[5] += 0.1;
        assert!(validate(&g, &op, 1e-8).gauss_residual > 0.01);
    }
}
