//! Möbius isometries of the hyperbolic plane and of hyperbolic 3-space.
//!
//! Matrices are elements of SL(2,ℂ) acting on ℂ ∪ {∞} by `z ↦ (az+b)/(cz+d)`
//! and on the upper half-space model of ℍ³. The Poincaré disk is used for
//! planar computations; the Cayley transform `z ↦ (z−i)/(z+i)` carries the
//! upper half-plane onto it.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);
const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Tolerance on `||tr| − 2|` under which a map counts as parabolic.
pub const PARABOLIC_TOL: f64 = 1e-9;

/// Unit-determinant 2×2 complex matrix, defined up to a global sign.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moebius {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Elliptic,
    Parabolic,
    Loxodromic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Classification {
    pub kind: Kind,
    pub translation_length: f64,
}

/// A point of ℂ ∪ {∞}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryPoint {
    Finite(C64),
    Infinity,
}

impl BoundaryPoint {
    /// Unit-sphere chart: Cayley transform followed by inverse stereographic
    /// projection. The extended real line lands on the equator `z = 0`.
    pub fn to_sphere(self) -> [f64; 3] {
        let w = match self {
            BoundaryPoint::Infinity => ONE,
            BoundaryPoint::Finite(z) => {
                let den = z + I;
                if den.norm_sqr() == 0.0 {
                    return [0.0, 0.0, 1.0];
                }
                (z - I) / den
            }
        };
        let r2 = w.norm_sqr();
        let s = 1.0 + r2;
        [2.0 * w.re / s, 2.0 * w.im / s, (r2 - 1.0) / s]
    }
}

/// Fixed points of a non-identity map, attracting point first when one exists.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FixedPoints {
    One(BoundaryPoint),
    Two {
        attracting: BoundaryPoint,
        repelling: BoundaryPoint,
    },
}

/// Interior point of the Poincaré disk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskPoint(C64);

impl DiskPoint {
    pub fn new(z: C64) -> Result<Self> {
        if z.norm() < 1.0 - 1e-15 {
            Ok(Self(z))
        } else {
            Err(Error::OutsideDisk(format!("{z}")))
        }
    }

    pub fn origin() -> Self {
        Self(ZERO)
    }

    pub fn z(self) -> C64 {
        self.0
    }
}

/// Point of the upper half-space model: `x + height·j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct H3Point {
    pub x: C64,
    pub height: f64,
}

impl H3Point {
    /// The basepoint `j = (0, 1)`.
    pub const J: H3Point = H3Point {
        x: ZERO,
        height: 1.0,
    };
}

impl Moebius {
    pub const IDENTITY: Moebius = Moebius {
        a: ONE,
        b: ZERO,
        c: ZERO,
        d: ONE,
    };

    /// Builds a map from arbitrary nonsingular entries, rescaled to unit
    /// determinant and put in canonical sign form.
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Moebius { a, b, c, d }.normalized()
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    pub fn diagonal(lambda: C64) -> Self {
        Self::new(lambda, ZERO, ZERO, lambda.inv())
    }

    /// Rotation of the disk about the origin by `angle`.
    pub fn disk_rotation(angle: f64) -> Self {
        Self::diagonal(C64::from_polar(1.0, angle / 2.0))
    }

    /// Hyperbolic translation of the disk along the real diameter, moving the
    /// origin a hyperbolic distance `distance` towards +1.
    pub fn disk_translation(distance: f64) -> Self {
        let (s, c) = ((distance / 2.0).sinh(), (distance / 2.0).cosh());
        Self::real(c, s, s, c)
    }

    /// Disk automorphism `z ↦ e^{iφ}(z − p)/(1 − p̄z)`.
    pub fn disk_automorphism(p: C64, phi: f64) -> Self {
        let e = C64::from_polar(1.0, phi);
        Self::new(e, -e * p, -p.conj(), ONE)
    }

    /// The Cayley transform `z ↦ (z − i)/(z + i)`.
    pub fn cayley() -> Self {
        Self::new(ONE, -I, ONE, I)
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> C64 {
        self.a + self.d
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()
    }

    pub fn entries(&self) -> [C64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Rescales by `1/√det` and fixes the sign so that the first entry that is
    /// not negligible has positive real part (or, if purely imaginary,
    /// positive imaginary part).
    pub fn normalized(self) -> Self {
        let s = self.det().sqrt();
        let m = Moebius {
            a: self.a / s,
            b: self.b / s,
            c: self.c / s,
            d: self.d / s,
        };
        m.canonical()
    }

    pub fn canonical(self) -> Self {
        let scale = self.frobenius_sq().sqrt();
        let tiny = 1e-12 * scale;
        for e in self.entries() {
            if e.norm() <= tiny {
                continue;
            }
            let negative = if e.re.abs() > tiny {
                e.re < 0.0
            } else {
                e.im < 0.0
            };
            return if negative { self.negated() } else { self };
        }
        self
    }

    fn negated(self) -> Self {
        Moebius {
            a: -self.a,
            b: -self.b,
            c: -self.c,
            d: -self.d,
        }
    }

    pub fn inverse(&self) -> Self {
        Moebius {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
        .canonical()
    }

    /// Matrix product `self · other` (apply `other` first), renormalized.
    pub fn compose(&self, other: &Moebius) -> Moebius {
        let m = self.product_raw(other);
        // Renormalize only when drift is visible; keeps products cheap in
        // the ball enumeration.
        if (m.det() - ONE).norm() > 1e-13 {
            m.normalized()
        } else {
            m.canonical()
        }
    }

    fn product_raw(&self, o: &Moebius) -> Moebius {
        Moebius {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    /// Conjugation `p · self · p⁻¹`.
    pub fn conjugate_by(&self, p: &Moebius) -> Moebius {
        p.compose(self).compose(&p.inverse())
    }

    pub fn apply(&self, z: C64) -> C64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// Derivative `1/(cz + d)²`.
    pub fn derivative(&self, z: C64) -> C64 {
        let w = self.c * z + self.d;
        (w * w).inv()
    }

    pub fn apply_boundary(&self, p: BoundaryPoint) -> BoundaryPoint {
        match p {
            BoundaryPoint::Infinity => {
                if self.c.norm_sqr() == 0.0 {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Finite(self.a / self.c)
                }
            }
            BoundaryPoint::Finite(z) => {
                let den = self.c * z + self.d;
                if den.norm_sqr() == 0.0 {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Finite((self.a * z + self.b) / den)
                }
            }
        }
    }

    /// Action on the upper half-space model.
    pub fn apply_h3(&self, p: H3Point) -> H3Point {
        let t2 = p.height * p.height;
        let w = self.c * p.x + self.d;
        let den = w.norm_sqr() + self.c.norm_sqr() * t2;
        let x = ((self.a * p.x + self.b) * w.conj() + self.a * self.c.conj() * t2) / den;
        H3Point {
            x,
            height: p.height / den,
        }
    }

    /// Hyperbolic distance from `j` to its image, `arccosh(‖m‖²_F / 2)`.
    pub fn displacement(&self) -> f64 {
        (self.frobenius_sq() / 2.0).max(1.0).acosh()
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        let m = self.canonical();
        (m.a - ONE).norm() <= tol
            && m.b.norm() <= tol
            && m.c.norm() <= tol
            && (m.d - ONE).norm() <= tol
    }

    /// Largest entrywise deviation between the two sign classes.
    pub fn distance_to(&self, other: &Moebius) -> f64 {
        let plus = self
            .entries()
            .iter()
            .zip(other.entries())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        let minus = self
            .entries()
            .iter()
            .zip(other.entries())
            .map(|(x, y)| (x + y).norm())
            .fold(0.0, f64::max);
        plus.min(minus)
    }

    pub fn classify(&self) -> Result<Classification> {
        if self.is_identity(1e-12) {
            return Err(Error::IdentityMap);
        }
        let tr = self.trace();
        let real = tr.im.abs() <= 1e-12 * tr.norm().max(1.0);
        let abs = tr.norm();
        if real && (abs - 2.0).abs() <= PARABOLIC_TOL {
            return Ok(Classification {
                kind: Kind::Parabolic,
                translation_length: 0.0,
            });
        }
        if real && abs < 2.0 {
            return Ok(Classification {
                kind: Kind::Elliptic,
                translation_length: 0.0,
            });
        }
        let length = if real {
            2.0 * (abs / 2.0).acosh()
        } else {
            2.0 * (tr / 2.0).acosh().re.abs()
        };
        Ok(Classification {
            kind: Kind::Loxodromic,
            translation_length: length,
        })
    }

    pub fn fixed_points(&self) -> Result<FixedPoints> {
        if self.is_identity(1e-12) {
            return Err(Error::IdentityMap);
        }
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        let scale = self.frobenius_sq().sqrt();
        if c.norm() <= 1e-14 * scale {
            let gap = a - d;
            if gap.norm() <= 1e-12 * scale {
                return Ok(FixedPoints::One(BoundaryPoint::Infinity));
            }
            let finite = BoundaryPoint::Finite(b / (d - a));
            // z ↦ (a/d) z + b/d: ∞ attracts when |a| > |d|.
            return Ok(if a.norm() > d.norm() {
                FixedPoints::Two {
                    attracting: BoundaryPoint::Infinity,
                    repelling: finite,
                }
            } else {
                FixedPoints::Two {
                    attracting: finite,
                    repelling: BoundaryPoint::Infinity,
                }
            });
        }
        let tr = a + d;
        let disc = (tr * tr - 4.0).sqrt();
        if disc.norm() <= 1e-12 * scale {
            return Ok(FixedPoints::One(BoundaryPoint::Finite((a - d) / (2.0 * c))));
        }
        let z1 = (a - d + disc) / (2.0 * c);
        let z2 = (a - d - disc) / (2.0 * c);
        // |m'(z)| = 1/|cz + d|²; the attracting point has |cz + d| > 1.
        let (attracting, repelling) = if (c * z1 + d).norm() >= (c * z2 + d).norm() {
            (z1, z2)
        } else {
            (z2, z1)
        };
        Ok(FixedPoints::Two {
            attracting: BoundaryPoint::Finite(attracting),
            repelling: BoundaryPoint::Finite(repelling),
        })
    }

    /// Attracting fixed point of a loxodromic map.
    pub fn attracting_fixed_point(&self) -> Option<BoundaryPoint> {
        match self.fixed_points().ok()? {
            FixedPoints::Two { attracting, .. } => Some(attracting),
            FixedPoints::One(_) => None,
        }
    }

    /// Change of model from the upper half-plane to the disk: `K m K⁻¹`.
    pub fn to_disk(&self) -> Moebius {
        self.conjugate_by(&Moebius::cayley())
    }

    /// Inverse of [`Moebius::to_disk`].
    pub fn from_disk(&self) -> Moebius {
        self.conjugate_by(&Moebius::cayley().inverse())
    }

    /// Whether all entries are real to within `tol` (relative to the norm).
    pub fn is_real(&self, tol: f64) -> bool {
        let scale = self.frobenius_sq().sqrt().max(1.0);
        self.entries().iter().all(|e| e.im.abs() <= tol * scale)
    }

    /// Grid-quantized canonical entries. Coordinates sitting within 0.05 grid
    /// cells of a cell boundary also produce the neighbouring cell, so that
    /// numerically equal matrices always share at least one key.
    pub fn quantized_keys(&self, grid: f64, out: &mut Vec<[i64; 8]>) {
        const PROBE: f64 = 0.05;
        out.clear();
        let m = self.canonical();
        let scale = grid * m.frobenius_sq().sqrt().max(1.0);
        let vals = [
            m.a.re, m.a.im, m.b.re, m.b.im, m.c.re, m.c.im, m.d.re, m.d.im,
        ];
        let mut base = [0i64; 8];
        let mut alt: [Option<i64>; 8] = [None; 8];
        for (k, v) in vals.iter().enumerate() {
            let x = v / scale;
            let f = x.floor();
            base[k] = f as i64;
            let frac = x - f;
            if frac < PROBE {
                alt[k] = Some(base[k] - 1);
            } else if frac > 1.0 - PROBE {
                alt[k] = Some(base[k] + 1);
            }
        }
        out.push(base);
        for (k, a) in alt.iter().enumerate() {
            if let Some(v) = a {
                let n = out.len();
                for i in 0..n {
                    let mut key = out[i];
                    key[k] = *v;
                    out.push(key);
                }
            }
        }
    }
}

impl Mul for Moebius {
    type Output = Moebius;
    fn mul(self, rhs: Moebius) -> Moebius {
        self.compose(&rhs)
    }
}

impl fmt::Display for Moebius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

pub fn compose(m1: &Moebius, m2: &Moebius) -> Moebius {
    m1.compose(m2)
}

/// Poincaré-disk distance `2 artanh |p − q| / |1 − p̄q|`.
pub fn dist_h2(p: DiskPoint, q: DiskPoint) -> f64 {
    let num = (p.0 - q.0).norm();
    let den = (ONE - p.0.conj() * q.0).norm();
    2.0 * (num / den).min(1.0).atanh()
}

/// Disk distance for raw coordinates assumed to lie inside the disk.
pub fn disk_distance(p: C64, q: C64) -> f64 {
    let num = (p - q).norm();
    let den = (ONE - p.conj() * q).norm();
    2.0 * (num / den).min(1.0).atanh()
}

pub fn dist_h3(p: H3Point, q: H3Point) -> f64 {
    let dh = p.height - q.height;
    let arg = 1.0 + ((p.x - q.x).norm_sqr() + dh * dh) / (2.0 * p.height * q.height);
    arg.max(1.0).acosh()
}

pub fn dist_h3_displacement(m: &Moebius) -> f64 {
    m.displacement()
}

/// Gromov product `(x|y)_p = ½(d(x,p) + d(y,p) − d(x,y))` for any metric.
pub fn gromov_product<P: Copy>(x: P, y: P, p: P, dist: impl Fn(P, P) -> f64) -> f64 {
    0.5 * (dist(x, p) + dist(y, p) - dist(x, y))
}
