//! Geodesic triangulation of the octagon, glued along the side pairings, with
//! the cotan Laplacian and lumped mass of the hyperbolic background metric.

use std::f64::consts::PI;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::group::{SurfaceGroupRep, LETTERS, PARTNER};
use crate::linalg::SparseSym;
use crate::moebius::{disk_distance, C64};

pub const MIN_LEVEL: usize = 1;
pub const MAX_LEVEL: usize = 7;

/// Boundary identification: `N_gen` carries mesh vertex `a` to mesh vertex `b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Glue {
    pub a: usize,
    pub b: usize,
    pub gen: usize,
}

#[derive(Clone, Debug)]
pub struct GluedMesh {
    pub level: usize,
    /// Disk coordinates; vertices on the octagon boundary appear once per side.
    pub vertices: Vec<C64>,
    pub triangles: Vec<[usize; 3]>,
    pub gluing: Vec<Glue>,
    /// Quotient vertex of each mesh vertex.
    pub class_of: Vec<usize>,
    pub n_classes: usize,
    /// Hyperbolic length of the edge opposite each corner.
    pub edge_lengths: Vec<[f64; 3]>,
    /// Exact hyperbolic area of each triangle.
    pub triangle_area: Vec<f64>,
    /// Lumped hyperbolic area per quotient vertex.
    pub vertex_area: Vec<f64>,
    /// Octagon sides each mesh vertex lies on (bit `k` for side `k`).
    pub side_mask: Vec<u8>,
}

/// Geodesic midpoint of two disk points.
pub fn geodesic_midpoint(p: C64, q: C64) -> C64 {
    let one = C64::new(1.0, 0.0);
    let w = (q - p) / (one - p.conj() * q);
    let r = w.norm();
    if r == 0.0 {
        return p;
    }
    let half = (r.atanh() / 2.0).tanh();
    let m = w * (half / r);
    (m + p) / (one + p.conj() * m)
}

/// Interior angles of a hyperbolic triangle with side lengths opposite each
/// corner, by the hyperbolic law of cosines.
pub fn hyperbolic_angles(len: [f64; 3]) -> [f64; 3] {
    let (ch, sh): (Vec<f64>, Vec<f64>) = len.iter().map(|l| (l.cosh(), l.sinh())).unzip();
    std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        ((ch[j] * ch[k] - ch[i]) / (sh[j] * sh[k])).clamp(-1.0, 1.0).acos()
    })
}

/// Cotangents of the Euclidean comparison triangle with the same side lengths.
pub fn comparison_cotangents(len: [f64; 3]) -> Result<[f64; 3]> {
    let [a, b, c] = len;
    let s = (a + b + c) / 2.0;
    let area = (s * (s - a) * (s - b) * (s - c)).max(0.0).sqrt();
    if area < 1e-14 {
        return Err(Error::DegenerateTriangle { index: usize::MAX, area });
    }
    let sq = [a * a, b * b, c * c];
    Ok(std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        (sq[j] + sq[k] - sq[i]) / (4.0 * area)
    }))
}

fn comparison_angles(len: [f64; 3]) -> [f64; 3] {
    let sq = len.map(|l| l * l);
    std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        ((sq[j] + sq[k] - sq[i]) / (2.0 * len[j] * len[k])).clamp(-1.0, 1.0).acos()
    })
}

struct Builder {
    vertices: Vec<C64>,
    side_mask: Vec<u8>,
    midpoints: FxHashMap<(usize, usize), usize>,
}

impl Builder {
    fn add(&mut self, z: C64, mask: u8) -> usize {
        self.vertices.push(z);
        self.side_mask.push(mask);
        self.vertices.len() - 1
    }

    fn midpoint(&mut self, i: usize, j: usize) -> usize {
        let key = (i.min(j), i.max(j));
        if let Some(&m) = self.midpoints.get(&key) {
            return m;
        }
        let z = geodesic_midpoint(self.vertices[i], self.vertices[j]);
        // The midpoint lies on a side only when the whole edge does.
        let mask = self.side_mask[i] & self.side_mask[j];
        let m = self.add(z, mask);
        self.midpoints.insert(key, m);
        m
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

/// Splits the octagon into 16 centre-fan triangles and refines each one
/// `level` times by geodesic midpoints.
pub fn triangulate_domain(rep: &SurfaceGroupRep, level: usize) -> Result<GluedMesh> {
    if !(MIN_LEVEL..=MAX_LEVEL).contains(&level) {
        return Err(Error::OutOfRange {
            what: "mesh level",
            value: level as f64,
            allowed: format!("[{MIN_LEVEL}, {MAX_LEVEL}]"),
        });
    }
    if !rep.is_fuchsian() {
        return Err(Error::NotFuchsian);
    }
    let octagon = rep.octagon();
    let mut b = Builder {
        vertices: Vec::new(),
        side_mask: Vec::new(),
        midpoints: FxHashMap::default(),
    };
    let centre = b.add(C64::new(0.0, 0.0), 0);
    let corners: Vec<usize> = (0..LETTERS)
        .map(|k| {
            let mask = (1u8 << k) | (1u8 << ((k + LETTERS - 1) % LETTERS));
            b.add(octagon.vertices[k], mask)
        })
        .collect();
    let mut triangles = Vec::with_capacity(16 << (2 * level));
    for k in 0..LETTERS {
        let (v0, v1) = (corners[k], corners[(k + 1) % LETTERS]);
        let m = b.midpoint(v0, v1);
        triangles.push([centre, v0, m]);
        triangles.push([centre, m, v1]);
    }
    for _ in 0..level {
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for &[i, j, k] in &triangles {
            let (a, bb, c) = (b.midpoint(i, j), b.midpoint(j, k), b.midpoint(k, i));
            next.extend([[i, a, c], [a, j, bb], [c, bb, k], [a, bb, c]]);
        }
        triangles = next;
    }
    let Builder {
        vertices,
        side_mask,
        ..
    } = b;

    let gluing = glue_sides(rep, &vertices, &side_mask)?;
    assemble(level, vertices, triangles, gluing, side_mask)
}

/// Rebuilds a mesh from its vertex, triangle and glue records. Side
/// membership is read off the gluing: `Glue { a, b, gen: k }` puts `b` on
/// side `k` and `a` on the partner side.
pub fn mesh_from_records(vertices: Vec<C64>, triangles: Vec<[usize; 3]>, gluing: Vec<Glue>) -> Result<GluedMesh> {
    let level = (MIN_LEVEL..=MAX_LEVEL)
        .find(|&l| triangles.len() == 16 << (2 * l))
        .ok_or_else(|| Error::Construction(format!("{} triangles is not 16·4^level", triangles.len())))?;
    let n = vertices.len();
    let mut side_mask = vec![0u8; n];
    for g in &gluing {
        if g.a >= n || g.b >= n || g.gen >= LETTERS {
            return Err(Error::Construction(format!("glue record {} {} {} out of range", g.a, g.b, g.gen)));
        }
        side_mask[g.b] |= 1 << g.gen;
        side_mask[g.a] |= 1 << PARTNER[g.gen];
    }
    if let Some(t) = triangles.iter().find(|t| t.iter().any(|&v| v >= n)) {
        return Err(Error::Construction(format!("triangle {t:?} refers to a missing vertex")));
    }
    assemble(level, vertices, triangles, gluing, side_mask)
}

fn assemble(
    level: usize,
    vertices: Vec<C64>,
    triangles: Vec<[usize; 3]>,
    gluing: Vec<Glue>,
    side_mask: Vec<u8>,
) -> Result<GluedMesh> {
    let mut uf = UnionFind((0..vertices.len()).collect());
    for g in &gluing {
        uf.union(g.a, g.b);
    }
    let mut class_index = FxHashMap::default();
    let mut class_of = vec![0usize; vertices.len()];
    for v in 0..vertices.len() {
        let root = uf.find(v);
        let n = class_index.len();
        class_of[v] = *class_index.entry(root).or_insert(n);
    }
    let n_classes = class_index.len();

    let mut edge_lengths = Vec::with_capacity(triangles.len());
    let mut triangle_area = Vec::with_capacity(triangles.len());
    let mut vertex_area = vec![0.0; n_classes];
    for (index, t) in triangles.iter().enumerate() {
        let len: [f64; 3] = std::array::from_fn(|c| {
            disk_distance(vertices[t[(c + 1) % 3]], vertices[t[(c + 2) % 3]])
        });
        let angles = hyperbolic_angles(len);
        let area = PI - angles.iter().sum::<f64>();
        if !(area >= 1e-14) {
            return Err(Error::DegenerateTriangle { index, area });
        }
        for &v in t {
            vertex_area[class_of[v]] += area / 3.0;
        }
        edge_lengths.push(len);
        triangle_area.push(area);
    }

    Ok(GluedMesh {
        level,
        vertices,
        triangles,
        gluing,
        class_of,
        n_classes,
        edge_lengths,
        triangle_area,
        vertex_area,
        side_mask,
    })
}

/// For each side `k`, matches every vertex `a` on the partner side with the
/// vertex `b = N_k(a)` on side `k`.
fn glue_sides(rep: &SurfaceGroupRep, vertices: &[C64], side_mask: &[u8]) -> Result<Vec<Glue>> {
    let on_side = |k: usize| -> Vec<usize> {
        (0..vertices.len()).filter(|&v| side_mask[v] & (1 << k) != 0).collect()
    };
    let mut gluing = Vec::new();
    for k in 0..LETTERS {
        let g = rep.disk_generator(k);
        let targets = on_side(k);
        for a in on_side(PARTNER[k]) {
            let z = g.apply(vertices[a]);
            let (b, err) = targets
                .iter()
                .map(|&b| (b, (vertices[b] - z).norm()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .ok_or_else(|| Error::Construction(format!("side {k} has no vertices")))?;
            if err > 1e-9 {
                return Err(Error::Construction(format!(
                    "vertex {a} has no partner on side {k} (gap {err:e})"
                )));
            }
            gluing.push(Glue { a, b, gen: k });
        }
    }
    Ok(gluing)
}

/// Cotan stiffness matrix `L_h` (positive semidefinite) and lumped mass on
/// the quotient vertex set. `Δ_h u = −(L u)/M`.
#[derive(Clone, Debug)]
pub struct CotanOperator {
    pub stiffness: SparseSym,
    pub mass: Vec<f64>,
}

impl CotanOperator {
    pub fn n(&self) -> usize {
        self.mass.len()
    }

    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let lu = self.stiffness.mul_vec(u);
        lu.iter().zip(&self.mass).map(|(l, m)| -l / m).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.mass.iter().sum()
    }
}

pub fn build_cotan(mesh: &GluedMesh) -> Result<CotanOperator> {
    let mut entries: FxHashMap<(usize, usize), f64> = FxHashMap::default();
    for (index, (t, len)) in mesh.triangles.iter().zip(&mesh.edge_lengths).enumerate() {
        let cot = comparison_cotangents(*len).map_err(|e| match e {
            Error::DegenerateTriangle { area, .. } => Error::DegenerateTriangle { index, area },
            other => other,
        })?;
        for c in 0..3 {
            let i = mesh.class_of[t[(c + 1) % 3]];
            let j = mesh.class_of[t[(c + 2) % 3]];
            let w = cot[c] / 2.0;
            *entries.entry((i, j)).or_default() -= w;
            *entries.entry((j, i)).or_default() -= w;
            *entries.entry((i, i)).or_default() += w;
            *entries.entry((j, j)).or_default() += w;
        }
    }
    let triplets: Vec<(usize, usize, f64)> = entries.into_iter().map(|((i, j), v)| (i, j, v)).collect();
    Ok(CotanOperator {
        stiffness: SparseSym::from_triplets(mesh.n_classes, &triplets)?,
        mass: mesh.vertex_area.clone(),
    })
}

impl GluedMesh {
    pub fn total_area(&self) -> f64 {
        self.triangle_area.iter().sum()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.side_mask[v] != 0
    }

    /// Representative mesh vertex of each quotient vertex (the first one).
    pub fn representatives(&self) -> Vec<usize> {
        let mut rep = vec![usize::MAX; self.n_classes];
        for (v, &c) in self.class_of.iter().enumerate() {
            if rep[c] == usize::MAX {
                rep[c] = v;
            }
        }
        rep
    }

    /// Unordered mesh edges, each listed once.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |c| (t[c].min(t[(c + 1) % 3]), t[c].max(t[(c + 1) % 3]))))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// `V − E + F` of the glued complex.
    pub fn euler_characteristic(&self) -> i64 {
        let edges = self.edges();
        let boundary = edges
            .iter()
            .filter(|&&(i, j)| self.side_mask[i] & self.side_mask[j] != 0)
            .count();
        let glued_edges = edges.len() - boundary + boundary / 2;
        self.n_classes as i64 - glued_edges as i64 + self.triangles.len() as i64
    }

    /// Sum of hyperbolic corner angles per quotient vertex.
    pub fn angle_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_classes];
        for (t, len) in self.triangles.iter().zip(&self.edge_lengths) {
            let a = hyperbolic_angles(*len);
            for c in 0..3 {
                sums[self.class_of[t[c]]] += a[c];
            }
        }
        sums
    }

    /// Total curvature from angle defects of the Euclidean comparison
    /// triangles, `Σ (2π − θ_v)`.
    pub fn angle_defect_curvature(&self) -> f64 {
        let mut sums = vec![0.0; self.n_classes];
        for (t, len) in self.triangles.iter().zip(&self.edge_lengths) {
            let a = comparison_angles(*len);
            for c in 0..3 {
                sums[self.class_of[t[c]]] += a[c];
            }
        }
        sums.iter().map(|s| 2.0 * PI - s).sum()
    }

    /// Quotient class containing the octagon corners.
    pub fn corner_class(&self) -> usize {
        self.class_of[1]
    }

    /// Glue table as a map `(vertex, generator) → partner`.
    pub fn glue_map(&self) -> FxHashMap<(usize, usize), usize> {
        self.gluing.iter().map(|g| ((g.a, g.gen), g.b)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::build_octagon_group;
    use approx::assert_abs_diff_eq;

    #[test]
    fn midpoint_is_equidistant() {
        let p = C64::new(0.3, -0.2);
        let q = C64::new(-0.5, 0.6);
        let m = geodesic_midpoint(p, q);
        let d = disk_distance(p, q);
        assert_abs_diff_eq!(disk_distance(p, m), d / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(disk_distance(m, q), d / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn level_one_counts() {
        let rep = build_octagon_group().unwrap();
        let mesh = triangulate_domain(&rep, 1).unwrap();
        assert_eq!(mesh.triangles.len(), 64);
        assert_eq!(mesh.euler_characteristic(), -2);
        assert!(triangulate_domain(&rep, 0).is_err());
        assert!(triangulate_domain(&rep, 8).is_err());
    }

    #[test]
    fn area_and_angles() {
        let rep = build_octagon_group().unwrap();
        for level in 1..=3 {
            let mesh = triangulate_domain(&rep, level).unwrap();
            assert_abs_diff_eq!(mesh.total_area(), 4.0 * PI, epsilon = 1e-9);
            let sums = mesh.angle_sums();
            for s in &sums {
                assert_abs_diff_eq!(*s, 2.0 * PI, epsilon = 1e-9);
            }
            let corner = mesh.corner_class();
            assert_eq!((1..=8).filter(|&v| mesh.class_of[v] == corner).count(), 8);
        }
    }

    #[test]
    fn gluing_is_an_involution() {
        let rep = build_octagon_group().unwrap();
        let mesh = triangulate_domain(&rep, 2).unwrap();
        let map = mesh.glue_map();
        for g in &mesh.gluing {
            assert_eq!(map[&(g.b, PARTNER[g.gen])], g.a);
        }
        for v in 0..mesh.vertices.len() {
            let n = mesh.gluing.iter().filter(|g| g.a == v).count();
            let sides = mesh.side_mask[v].count_ones() as usize;
            assert_eq!(n, sides);
        }
    }

    #[test]
    fn cotan_basics() {
        let rep = build_octagon_group().unwrap();
        let mesh = triangulate_domain(&rep, 2).unwrap();
        let op = build_cotan(&mesh).unwrap();
        let ones = vec![1.0; op.n()];
        let l1 = op.stiffness.mul_vec(&ones);
        assert!(l1.iter().all(|x| x.abs() <= 1e-10));
        assert_abs_diff_eq!(op.total_area(), 4.0 * PI, epsilon = 1e-9);
        assert!(op.mass.iter().all(|&m| m > 0.0));
    }

    #[test]
    fn degenerate_comparison_triangle() {
        assert!(comparison_cotangents([1.0, 1.0, 2.0]).is_err());
    }
}
