//! Tiling of the universal cover by translates of the glued mesh, with
//! conformal edge lengths, and metric-ball growth by Dijkstra.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64 as C64;
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::ball::{walk_ball, BallOptions, ElementSet, Word};
use crate::error::{Error, Result};
use crate::group::SurfaceGroupRep;
use crate::mesh::GluedMesh;
use crate::moebius::{disk_distance, Moebius};

/// Two tile vertices closer than this (disk coordinates) are the same point.
pub const MERGE_TOL: f64 = 1e-7;
/// Growth curves are sampled on this radial step.
pub const GROWTH_STEP: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct CoverGraph {
    /// Tile maps in disk form; the first is the identity.
    pub tiles: Vec<Moebius>,
    pub tile_words: Vec<Word>,
    pub positions: Vec<C64>,
    /// Quotient vertex of each cover vertex.
    pub class: Vec<u32>,
    /// Lower bound on the `g`-distance from the base point to any point
    /// outside the tiled region.
    pub reach: f64,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
}

impl CoverGraph {
    pub fn n_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn n_edges(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.offsets[v]..self.offsets[v + 1]).map(move |p| (self.targets[p] as usize, self.weights[p]))
    }

    /// Cover vertex at the centre of the identity tile.
    pub fn base(&self) -> usize {
        0
    }

    /// Single-source graph distances, exploring only up to `limit`.
    pub fn distances(&self, source: usize, limit: f64) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.n_vertices()];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Entry(0.0, source));
        while let Some(Entry(d, v)) = heap.pop() {
            if d > dist[v] || d > limit {
                continue;
            }
            for (w, len) in self.neighbors(v) {
                let nd = d + len;
                if nd < dist[w] {
                    dist[w] = nd;
                    heap.push(Entry(nd, w));
                }
            }
        }
        dist
    }
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Tiles for every element of word length at most `depth` whose centre lies
/// within `radius` of the base point.
pub fn cover_tiles(rep: &SurfaceGroupRep, depth: usize, radius: f64) -> Result<Vec<(Word, Moebius)>> {
    let margin = rep.octagon().circumradius;
    let opts = BallOptions {
        prune_radius: Some(radius + margin),
        ..BallOptions::default()
    };
    let mut tiles = Vec::new();
    walk_ball(rep, depth, &opts, |e| {
        if e.map.displacement() <= radius {
            tiles.push((e.word, e.map));
        }
    })?;
    Ok(tiles)
}

fn grid_key(z: C64) -> (i64, i64) {
    let cell = 4.0 * MERGE_TOL;
    ((z.re / cell).floor() as i64, (z.im / cell).floor() as i64)
}

/// Builds the cover graph over the given tiles (UHP maps). `u` is a field on
/// quotient vertices; edge weights are `ℓ_h · exp((u₁ + u₂)/2)`.
pub fn tile_cover(rep: &SurfaceGroupRep, mesh: &GluedMesh, tiles: &[(Word, Moebius)], u: &[f64]) -> Result<CoverGraph> {
    if u.len() != mesh.n_classes {
        return Err(Error::Linear(format!("field has {} entries for {} vertices", u.len(), mesh.n_classes)));
    }
    if tiles.first().map(|(w, _)| w.len()) != Some(0) {
        return Err(Error::Construction("first tile must be the identity".into()));
    }
    let mut present = ElementSet::new();
    for (_, m) in tiles {
        present.insert(m);
    }
    let gens = rep.generators();
    let nv = mesh.vertices.len();
    let mut positions: Vec<C64> = Vec::with_capacity(tiles.len() * nv);
    let mut class: Vec<u32> = Vec::with_capacity(tiles.len() * nv);
    let mut grid: FxHashMap<(i64, i64), Vec<u32>> = FxHashMap::default();
    let mut local = vec![0u32; nv];
    let mut edges: Vec<(u32, u32, f64)> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::with_capacity(tiles.len() * mesh.triangles.len());
    let mesh_edges = mesh_edge_lengths(mesh);
    let mut disk_tiles = Vec::with_capacity(tiles.len());
    let mut words = Vec::with_capacity(tiles.len());
    let mut missing = f64::INFINITY;
    for (word, m) in tiles {
        for g in gens {
            let n = m.compose(g);
            if !present.contains(&n) {
                missing = missing.min(n.displacement());
            }
        }
        let dm = m.to_disk();
        for v in 0..nv {
            let z = dm.apply(mesh.vertices[v]);
            let mut found: Option<u32> = None;
            if mesh.is_boundary(v) {
                let (kx, ky) = grid_key(z);
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        if let Some(list) = grid.get(&(kx + dx, ky + dy)) {
                            for &w in list {
                                if (positions[w as usize] - z).norm() <= MERGE_TOL {
                                    if found.is_some_and(|f| f != w) {
                                        return Err(Error::MergeAmbiguity(format!(
                                            "two cover vertices within {MERGE_TOL} of {z}"
                                        )));
                                    }
                                    found = Some(w);
                                }
                            }
                        }
                    }
                }
            }
            let id = match found {
                Some(w) => {
                    if class[w as usize] as usize != mesh.class_of[v] {
                        return Err(Error::MergeAmbiguity(format!("merged vertices of different classes at {z}")));
                    }
                    w
                }
                None => {
                    let id = positions.len() as u32;
                    positions.push(z);
                    class.push(mesh.class_of[v] as u32);
                    if mesh.is_boundary(v) {
                        grid.entry(grid_key(z)).or_default().push(id);
                    }
                    id
                }
            };
            local[v] = id;
        }
        for &(i, j, len) in &mesh_edges {
            let (a, b) = (local[i], local[j]);
            let w = len * (0.5 * (u[mesh.class_of[i]] + u[mesh.class_of[j]])).exp();
            edges.push((a.min(b), a.max(b), w));
        }
        triangles.extend(mesh.triangles.iter().map(|t| [local[t[0]], local[t[1]], local[t[2]]]));
        disk_tiles.push(dm);
        words.push(*word);
    }
    edges.sort_unstable_by_key(|e| (e.0, e.1));
    edges.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);

    // Each edge shared by two triangles also contributes the geodesic between
    // the opposite corners.
    let mut opposite = vec![[u32::MAX; 2]; edges.len()];
    for t in &triangles {
        for c in 0..3 {
            let (a, b) = (t[(c + 1) % 3], t[(c + 2) % 3]);
            let key = (a.min(b), a.max(b));
            let idx = edges
                .binary_search_by(|e| (e.0, e.1).cmp(&key))
                .expect("triangle edge is listed");
            let slot = &mut opposite[idx];
            if slot[0] == u32::MAX {
                slot[0] = t[c];
            } else {
                slot[1] = t[c];
            }
        }
    }
    let diagonals: Vec<(u32, u32, f64)> = opposite
        .iter()
        .filter(|o| o[1] != u32::MAX)
        .map(|&[a, b]| {
            let len = disk_distance(positions[a as usize], positions[b as usize]);
            let w = len * (0.5 * (u[class[a as usize] as usize] + u[class[b as usize] as usize])).exp();
            (a.min(b), a.max(b), w)
        })
        .collect();
    drop(triangles);
    drop(opposite);
    edges.extend(diagonals);
    edges.sort_unstable_by_key(|e| (e.0, e.1));
    edges.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);

    let n = positions.len();
    let mut degree = vec![0usize; n + 1];
    for &(a, b, _) in &edges {
        degree[a as usize + 1] += 1;
        degree[b as usize + 1] += 1;
    }
    for i in 0..n {
        degree[i + 1] += degree[i];
    }
    let offsets = degree.clone();
    let mut fill = degree;
    let mut targets = vec![0u32; 2 * edges.len()];
    let mut weights = vec![0.0; 2 * edges.len()];
    for &(a, b, w) in &edges {
        for (s, t) in [(a, b), (b, a)] {
            let p = fill[s as usize];
            targets[p] = t;
            weights[p] = w;
            fill[s as usize] += 1;
        }
    }
    let min_u = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let reach = (missing - rep.octagon().circumradius).max(0.0) * min_u.exp();
    Ok(CoverGraph {
        tiles: disk_tiles,
        tile_words: words,
        positions,
        class,
        reach,
        offsets,
        targets,
        weights,
    })
}

/// Mesh edges `(i, j, ℓ_h)` with `i < j`.
fn mesh_edge_lengths(mesh: &GluedMesh) -> Vec<(usize, usize, f64)> {
    let mut out: Vec<(usize, usize, f64)> = mesh
        .triangles
        .iter()
        .zip(&mesh.edge_lengths)
        .flat_map(|(t, len)| {
            (0..3).map(move |c| {
                let (i, j) = (t[(c + 1) % 3], t[(c + 2) % 3]);
                (i.min(j), i.max(j), len[c])
            })
        })
        .collect();
    out.sort_unstable_by_key(|e| (e.0, e.1));
    out.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthCurve {
    pub radii: Vec<f64>,
    pub counts: Vec<usize>,
    pub areas: Vec<f64>,
    /// Distances below this are exact: every path leaving the cover is longer.
    pub safe_radius: f64,
    /// `Rmax` exceeded the safe radius and the curve was cut there.
    pub truncated: bool,
}

/// Cumulative vertex count and lumped area of the metric ball about `base`
/// on the grid `0.1, 0.2, …`. `vertex_area` is indexed by quotient vertex.
pub fn ball_growth(cover: &CoverGraph, base: usize, rmax: f64, vertex_area: &[f64]) -> GrowthCurve {
    let safe_radius = cover.reach;
    let truncated = rmax > safe_radius;
    let top = rmax.min(safe_radius);
    let dist = cover.distances(base, top);
    let steps = (top / GROWTH_STEP + 1e-9).floor() as usize;
    let mut order: Vec<(f64, usize)> = dist
        .iter()
        .enumerate()
        .filter(|(_, d)| **d <= top)
        .map(|(v, d)| (*d, v))
        .collect();
    order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut radii = Vec::with_capacity(steps);
    let mut counts = Vec::with_capacity(steps);
    let mut areas = Vec::with_capacity(steps);
    let mut idx = 0;
    let mut count = 0usize;
    let mut area = 0.0;
    for k in 1..=steps {
        let r = k as f64 * GROWTH_STEP;
        while idx < order.len() && order[idx].0 <= r {
            count += 1;
            area += vertex_area[cover.class[order[idx].1] as usize];
            idx += 1;
        }
        radii.push(r);
        counts.push(count);
        areas.push(area);
    }
    GrowthCurve {
        radii,
        counts,
        areas,
        safe_radius,
        truncated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::build_octagon_group;
    use crate::mesh::triangulate_domain;

    #[test]
    fn single_tile_cover() {
        let rep = build_octagon_group().unwrap();
        let mesh = triangulate_domain(&rep, 2).unwrap();
        let tiles = cover_tiles(&rep, 0, 10.0).unwrap();
        let cover = tile_cover(&rep, &mesh, &tiles, &vec![0.0; mesh.n_classes]).unwrap();
        assert_eq!(cover.n_vertices(), mesh.vertices.len());
        let d = cover.distances(cover.base(), f64::INFINITY);
        let diam = 2.0 * rep.octagon().circumradius;
        assert!(d.iter().all(|&x| x.is_finite() && x <= diam * 1.1));
        assert!(cover.reach < rep.octagon().circumradius);
    }

    #[test]
    fn constant_field_scales_distances() {
        let rep = build_octagon_group().unwrap();
        let mesh = triangulate_domain(&rep, 1).unwrap();
        let tiles = cover_tiles(&rep, 2, 5.0).unwrap();
        let c = -0.3;
        let flat = tile_cover(&rep, &mesh, &tiles, &vec![0.0; mesh.n_classes]).unwrap();
        let scaled = tile_cover(&rep, &mesh, &tiles, &vec![c; mesh.n_classes]).unwrap();
        assert_eq!(flat.n_vertices(), scaled.n_vertices());
        let d0 = flat.distances(0, f64::INFINITY);
        let d1 = scaled.distances(0, f64::INFINITY);
        for (a, b) in d0.iter().zip(&d1) {
            assert!((a * c.exp() - b).abs() <= 1e-12 * a.max(1.0));
        }
        for (v, z) in flat.positions.iter().enumerate() {
            assert!(d0[v] >= disk_distance(C64::new(0.0, 0.0), *z) - 1e-9);
        }
    }
}
