//! Genus-2 surface group uniformized by the regular octagon with interior
//! angles π/4, and its bending deformations.
//!
//! Letters `0..8` index the octagon sides. Letter `k` is the side-pairing map
//! `N_k` that carries the partner side onto side `k` and the octagon onto the
//! neighbouring tile across side `k`. Sides follow the commutator pattern
//! `a1 b1 A1 B1 a2 b2 A2 B2`, so `N_{partner(k)} = N_k⁻¹`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ball::{enumerate_ball, BallOptions, Word};
use crate::error::{Error, Result};
use crate::moebius::{disk_distance, Moebius, C64};

pub const LETTERS: usize = 8;
pub const SIDE_LABELS: [&str; LETTERS] = ["a1", "b1", "A1", "B1", "a2", "b2", "A2", "B2"];
pub const PARTNER: [usize; LETTERS] = [2, 3, 0, 1, 6, 7, 4, 5];

/// Largest bending angle accepted by [`SurfaceGroupRep::bend`].
pub const THETA_MAX: f64 = 0.5;

pub fn inverse_letter(k: usize) -> usize {
    PARTNER[k]
}

/// Regular hyperbolic octagon with interior angles π/4, centred at the
/// origin of the disk. Vertex `k` sits at angle `kπ/4 − π/8`; side `k` runs
/// from vertex `k` to vertex `k+1` and its midpoint lies at angle `kπ/4`.
#[derive(Clone, Debug, PartialEq)]
pub struct Octagon {
    pub vertices: [C64; LETTERS],
    pub inradius: f64,
    pub circumradius: f64,
}

impl Octagon {
    pub fn regular() -> Self {
        let cot = 1.0 / (PI / 8.0).tan();
        let circumradius = (cot * cot).acosh();
        let inradius = cot.acosh();
        let r = (circumradius / 2.0).tanh();
        let vertices =
            std::array::from_fn(|k| C64::from_polar(r, k as f64 * PI / 4.0 - PI / 8.0));
        Octagon {
            vertices,
            inradius,
            circumradius,
        }
    }

    pub fn side_angle(k: usize) -> f64 {
        k as f64 * PI / 4.0
    }

    pub fn side_endpoints(&self, k: usize) -> (C64, C64) {
        (self.vertices[k], self.vertices[(k + 1) % LETTERS])
    }

    /// Euclidean margin by which `z` clears the geodesic carrying side `k`;
    /// positive on the octagon's side.
    pub fn side_margin(&self, k: usize, z: C64) -> f64 {
        let m = (self.inradius / 2.0).tanh();
        let centre = C64::from_polar((1.0 + m * m) / (2.0 * m), Self::side_angle(k));
        let radius = (1.0 - m * m) / (2.0 * m);
        (z - centre).norm() - radius
    }

    /// Smallest side margin; positive strictly inside.
    pub fn interior_margin(&self, z: C64) -> f64 {
        (0..LETTERS)
            .map(|k| self.side_margin(k, z))
            .fold(f64::INFINITY, f64::min)
    }

    /// Hyperbolic area from the angle deficit, `6π − 8·π/4`.
    pub fn area(&self) -> f64 {
        6.0 * PI - 8.0 * PI / 4.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RepKind {
    Fuchsian,
    Bent { theta: f64 },
}

#[derive(Clone, Debug)]
pub struct SurfaceGroupRep {
    generators: [Moebius; LETTERS],
    octagon: Octagon,
    relator: [usize; LETTERS],
    /// Offset into the cyclic relator at which `[a1,b1]` starts.
    split: usize,
    kind: RepKind,
}

#[derive(Clone, Debug, Serialize)]
pub struct PresentationReport {
    /// `None` for bent representations, whose generators no longer pair sides.
    pub side_residual: Option<f64>,
    pub relator_residual: f64,
    /// Interior samples whose non-trivial depth-2 images re-entered the octagon.
    pub overlap_violations: Option<usize>,
    pub passed: bool,
}

impl SurfaceGroupRep {
    pub fn generators(&self) -> &[Moebius; LETTERS] {
        &self.generators
    }

    pub fn generator(&self, k: usize) -> Moebius {
        self.generators[k]
    }

    pub fn disk_generator(&self, k: usize) -> Moebius {
        self.generators[k].to_disk()
    }

    pub fn octagon(&self) -> &Octagon {
        &self.octagon
    }

    pub fn relator(&self) -> [usize; LETTERS] {
        self.relator
    }

    pub fn kind(&self) -> RepKind {
        self.kind
    }

    pub fn is_fuchsian(&self) -> bool {
        self.kind == RepKind::Fuchsian
    }

    pub fn evaluate(&self, word: &Word) -> Moebius {
        word.letters()
            .fold(Moebius::IDENTITY, |acc, k| acc.compose(&self.generators[k]))
    }

    fn evaluate_letters(&self, letters: impl IntoIterator<Item = usize>) -> Moebius {
        letters
            .into_iter()
            .fold(Moebius::IDENTITY, |acc, k| acc.compose(&self.generators[k]))
    }

    /// The separating commutator `[a1, b1]` read off the relator.
    pub fn commutator(&self) -> Moebius {
        self.evaluate_letters((0..4).map(|i| self.relator[(self.split + i) % LETTERS]))
    }

    pub fn relator_residual(&self) -> f64 {
        self.evaluate_letters(self.relator).distance_to(&Moebius::IDENTITY)
    }

    /// Replaces letter `k` (and its inverse letter). Used to probe the
    /// presentation checks; the result is no longer a surface group.
    pub fn with_generator(&self, k: usize, m: Moebius) -> Self {
        let mut out = self.clone();
        out.generators[k] = m;
        out.generators[PARTNER[k]] = m.inverse();
        out
    }

    /// Shortest translation length among non-trivial elements of word
    /// length at most two.
    pub fn systole_depth2(&self) -> f64 {
        let ball = enumerate_ball(self, 2, &BallOptions::default()).expect("depth-2 ball");
        ball.elements
            .iter()
            .skip(1)
            .filter_map(|e| e.map.classify().ok())
            .map(|c| c.translation_length)
            .fold(f64::INFINITY, f64::min)
    }

    /// Radius below which the word ball of the given depth is taken to be
    /// complete: `(N − 1)·sys/2`.
    pub fn safe_radius(&self, depth: usize) -> f64 {
        depth.saturating_sub(1) as f64 * self.systole_depth2() / 2.0
    }

    pub fn bend(&self, theta: f64) -> Result<Self> {
        if !self.is_fuchsian() {
            return Err(Error::NotFuchsian);
        }
        if !(theta.abs() <= THETA_MAX) {
            return Err(Error::OutOfRange {
                what: "bending angle",
                value: theta,
                allowed: format!("[-{THETA_MAX}, {THETA_MAX}]"),
            });
        }
        if theta == 0.0 {
            return Ok(self.clone());
        }
        // Anything commuting with c is a polynomial in c: E = αI + βc with
        // eigenvalues e^{±iθ/2} on the eigenvectors of c.
        let c = self.commutator();
        let tr = c.trace();
        let lambda = (tr + (tr * tr - 4.0).sqrt()) / 2.0;
        let rot = C64::from_polar(1.0, theta / 2.0);
        let beta = (rot - rot.inv()) / (lambda - lambda.inv());
        let alpha = rot - beta * lambda;
        let elliptic = Moebius::new(alpha + beta * c.a, beta * c.b, beta * c.c, alpha + beta * c.d);
        let second_half: Vec<usize> = (4..8).map(|i| self.relator[(self.split + i) % LETTERS]).collect();
        let mut out = self.clone();
        for &k in &second_half {
            out.generators[k] = self.generators[k].conjugate_by(&elliptic);
        }
        out.kind = RepKind::Bent { theta };
        Ok(out)
    }

    pub fn verify_presentation(&self, samples: usize, seed: u64) -> PresentationReport {
        let relator_residual = self.relator_residual();
        let (side_residual, overlap_violations) = if self.is_fuchsian() {
            (Some(self.side_residual()), Some(self.overlap_violations(samples, seed)))
        } else {
            (None, None)
        };
        let passed = relator_residual <= 1e-8
            && side_residual.is_none_or(|r| r <= 1e-9)
            && overlap_violations.is_none_or(|v| v == 0);
        PresentationReport {
            side_residual,
            relator_residual,
            overlap_violations,
            passed,
        }
    }

    fn side_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..LETTERS {
            let g = self.disk_generator(k);
            let (p0, p1) = self.octagon.side_endpoints(PARTNER[k]);
            let (q0, q1) = self.octagon.side_endpoints(k);
            let (i0, i1) = (g.apply(p0), g.apply(p1));
            let straight = (i0 - q0).norm().max((i1 - q1).norm());
            let swapped = (i0 - q1).norm().max((i1 - q0).norm());
            worst = worst.max(straight.min(swapped));
        }
        worst
    }

    fn overlap_violations(&self, samples: usize, seed: u64) -> usize {
        let ball = match enumerate_ball(self, 2, &BallOptions::default()) {
            Ok(b) => b,
            Err(_) => return usize::MAX,
        };
        let maps: Vec<Moebius> = ball.elements.iter().skip(1).map(|e| e.map.to_disk()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = (self.octagon.circumradius / 2.0).tanh();
        let mut violations = 0;
        let mut taken = 0;
        while taken < samples {
            let z = C64::new(rng.random_range(-r..r), rng.random_range(-r..r));
            if self.octagon.interior_margin(z) <= 1e-6 {
                continue;
            }
            taken += 1;
            if maps.iter().any(|g| self.octagon.interior_margin(g.apply(z)) > 1e-7) {
                violations += 1;
            }
        }
        violations
    }
}

/// Builds the Fuchsian genus-2 group from the regular octagon and checks it.
pub fn build_octagon_group() -> Result<SurfaceGroupRep> {
    let octagon = Octagon::regular();
    let mut disk = [Moebius::IDENTITY; LETTERS];
    for (k, g) in disk.iter_mut().enumerate() {
        let p = PARTNER[k];
        *g = Moebius::disk_rotation(Octagon::side_angle(k))
            .compose(&Moebius::disk_translation(2.0 * octagon.inradius))
            .compose(&Moebius::disk_rotation(PI - Octagon::side_angle(p)));
    }
    for k in 0..LETTERS {
        if disk[k].compose(&disk[PARTNER[k]]).distance_to(&Moebius::IDENTITY) > 1e-12 {
            return Err(Error::Construction(format!("N_{k} and its partner are not inverse")));
        }
    }
    let relator = vertex_cycle(&octagon, &disk)?;
    let split = (0..LETTERS)
        .find(|&r| (0..LETTERS).all(|i| (relator[(r + i) % LETTERS] < 4) == (i < 4)))
        .ok_or_else(|| Error::Construction(format!("relator {relator:?} does not split")))?;

    let mut generators = [Moebius::IDENTITY; LETTERS];
    for k in 0..LETTERS {
        let m = disk[k].from_disk();
        if !m.is_real(1e-12) {
            return Err(Error::Construction(format!("generator {k} is not real: {m}")));
        }
        generators[k] = Moebius::new(m.a.re.into(), m.b.re.into(), m.c.re.into(), m.d.re.into());
    }
    let rep = SurfaceGroupRep {
        generators,
        octagon,
        relator,
        split,
        kind: RepKind::Fuchsian,
    };
    let report = rep.verify_presentation(32, 0x5eed);
    if !report.passed {
        return Err(Error::Construction(format!("presentation check failed: {report:?}")));
    }
    Ok(rep)
}

/// Walks the tiles around octagon vertex 0 and returns the letters crossed.
fn vertex_cycle(octagon: &Octagon, disk: &[Moebius; LETTERS]) -> Result<[usize; LETTERS]> {
    let start = (0usize, 0usize);
    let (mut vertex, mut side) = start;
    let mut letters = Vec::new();
    let mut product = Moebius::IDENTITY;
    loop {
        letters.push(side);
        product = product.compose(&disk[side]);
        let image = disk[side].inverse().apply(octagon.vertices[vertex]);
        let next = (0..LETTERS)
            .min_by(|&i, &j| {
                let di = (octagon.vertices[i] - image).norm();
                let dj = (octagon.vertices[j] - image).norm();
                di.total_cmp(&dj)
            })
            .unwrap();
        if (octagon.vertices[next] - image).norm() > 1e-9 {
            return Err(Error::Construction("vertex image is not a vertex".into()));
        }
        let arrived_on = PARTNER[side];
        // Vertex k lies on sides k−1 and k.
        let other = if arrived_on == next { (next + LETTERS - 1) % LETTERS } else { next };
        vertex = next;
        side = other;
        if (vertex, side) == start {
            break;
        }
        if letters.len() > 4 * LETTERS {
            return Err(Error::Construction("vertex cycle does not close".into()));
        }
    }
    if letters.len() != LETTERS {
        return Err(Error::Construction(format!(
            "expected a single vertex cycle of length 8, got {}",
            letters.len()
        )));
    }
    if product.distance_to(&Moebius::IDENTITY) > 1e-9 {
        return Err(Error::Construction("vertex cycle product is not the identity".into()));
    }
    Ok(std::array::from_fn(|i| letters[i]))
}

/// Mean distance from a disk point to its image; handy for diagnostics.
pub fn disk_displacement(g: &Moebius, z: C64) -> f64 {
    disk_distance(z, g.apply(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn octagon_geometry() {
        let o = Octagon::regular();
        assert_abs_diff_eq!(o.circumradius, 5.82842712474619f64.acosh(), epsilon = 1e-12);
        assert_abs_diff_eq!(o.circumradius, 2.448452447678076, epsilon = 1e-12);
        assert_abs_diff_eq!(o.area(), 4.0 * PI, epsilon = 1e-15);
        // Right triangle centre / side midpoint / vertex: angles π/8 at both
        // the centre and the vertex.
        let (a, c) = (o.inradius, o.circumradius);
        assert_abs_diff_eq!((a.sinh() / c.sinh()).asin(), PI / 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!((a.tanh() / c.tanh()).acos(), PI / 8.0, epsilon = 1e-12);
        let deficit = PI - (PI / 2.0 + PI / 8.0 + PI / 8.0);
        assert_abs_diff_eq!(16.0 * deficit, 4.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn built_group_checks_out() {
        let rep = build_octagon_group().unwrap();
        let report = rep.verify_presentation(64, 7);
        assert!(report.passed, "{report:?}");
        assert!(report.side_residual.unwrap() <= 1e-9);
        assert!(report.relator_residual <= 1e-8);
        for g in rep.generators() {
            assert!(g.is_real(0.0));
        }
        // Relator acts trivially on an interior point.
        let z = C64::new(0.11, -0.07);
        let w = rep.relator().iter().rev().fold(z, |z, &k| rep.disk_generator(k).apply(z));
        assert!((w - z).norm() <= 1e-8);
    }

    #[test]
    fn generators_are_equidistant_from_centre() {
        let rep = build_octagon_group().unwrap();
        let d0 = rep.generator(0).displacement();
        for g in rep.generators() {
            assert_abs_diff_eq!(g.displacement(), d0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(d0, 2.0 * rep.octagon().inradius, epsilon = 1e-12);
    }

    #[test]
    fn perturbed_generator_breaks_relator() {
        let rep = build_octagon_group().unwrap();
        let g = rep.generator(0);
        let bumped = Moebius::new(g.a + 1e-3, g.b, g.c, g.d);
        let bad = rep.with_generator(0, bumped);
        assert!(bad.verify_presentation(8, 1).relator_residual > 1e-4);
    }

    #[test]
    fn bending_preserves_relation_and_traces() {
        let rep = build_octagon_group().unwrap();
        let same = rep.bend(0.0).unwrap();
        for k in 0..LETTERS {
            assert_eq!(same.generator(k), rep.generator(k));
        }
        let bent = rep.bend(0.2).unwrap();
        assert!(bent.relator_residual() <= 1e-8);
        assert!(bent.verify_presentation(8, 1).passed);
        // a1, b1 untouched; a2 conjugated.
        assert_eq!(bent.generator(0), rep.generator(0));
        assert_eq!(bent.generator(1), rep.generator(1));
        let a2 = bent.generator(4);
        assert!(!a2.is_real(1e-6));
        assert_abs_diff_eq!((a2.trace() - rep.generator(4).trace()).norm(), 0.0, epsilon = 1e-10);
        assert!(rep.bend(0.6).is_err());
        assert!(matches!(bent.bend(0.1), Err(Error::NotFuchsian)));
    }

    #[test]
    fn bending_is_injective_in_angle() {
        let rep = build_octagon_group().unwrap();
        let tr = |theta: f64| {
            let b = rep.bend(theta).unwrap();
            b.generator(0).compose(&b.generator(4)).trace()
        };
        let thetas = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
        for i in 0..thetas.len() {
            for j in i + 1..thetas.len() {
                assert!((tr(thetas[i]) - tr(thetas[j])).norm() > 1e-9);
            }
        }
    }
}
