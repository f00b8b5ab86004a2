//! Orbit counting in H³, estimators for the critical exponent δ(Γ), limit
//! set samples and their box-counting dimension.

use nalgebra::{Matrix3, Vector3};
use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;

use crate::ball::{walk_ball, BallOptions};
use crate::entropy::fit_slope;
use crate::error::{Error, Result};
use crate::group::SurfaceGroupRep;
use crate::moebius::Kind;

/// Width of the displacement histogram bins.
pub const CENSUS_BIN: f64 = 1e-4;
/// Grid on the sphere below which limit points are identified.
pub const LIMIT_DEDUP: f64 = 1e-6;
/// Radial step of the `log N(R)` fit.
pub const COUNT_STEP: f64 = 0.01;
pub const MIN_CENSUS_DEPTH: usize = 6;
pub const MIN_BOX_POINTS: usize = 10_000;

/// Displacements `d(j, γ·j)` over a word-length ball, kept as one
/// histogram per word length.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitCensus {
    pub depth: usize,
    pub bin: f64,
    pub sphere_sizes: Vec<usize>,
    /// Per word length, `(bin index, count)` sorted by bin.
    pub annuli: Vec<Vec<(u32, u32)>>,
    pub safe_radius: f64,
}

pub fn orbit_count(rep: &SurfaceGroupRep, depth: usize, max_elements: usize) -> Result<OrbitCensus> {
    let mut dense: Vec<Vec<u32>> = vec![Vec::new(); depth + 1];
    let opts = BallOptions {
        max_elements,
        prune_radius: None,
    };
    let summary = walk_ball(rep, depth, &opts, |e| {
        let k = (e.map.displacement() / CENSUS_BIN) as usize;
        let h = &mut dense[e.word.len()];
        if h.len() <= k {
            h.resize(k + 1, 0);
        }
        h[k] += 1;
    })?;
    let annuli = dense
        .into_iter()
        .map(|h| {
            h.into_iter()
                .enumerate()
                .filter(|(_, c)| *c > 0)
                .map(|(k, c)| (k as u32, c))
                .collect()
        })
        .collect();
    Ok(OrbitCensus {
        depth,
        bin: CENSUS_BIN,
        sphere_sizes: summary.sphere_sizes,
        annuli,
        safe_radius: rep.safe_radius(depth),
    })
}

impl OrbitCensus {
    pub fn total(&self) -> usize {
        self.sphere_sizes.iter().sum()
    }

    /// `N(R) = #{γ : d(j, γj) < R}`, resolved to the bin width.
    pub fn count_below(&self, r: f64) -> usize {
        let limit = (r / self.bin).round() as u64;
        self.annuli
            .iter()
            .map(|a| {
                let end = a.partition_point(|(k, _)| (*k as u64) < limit);
                a[..end].iter().map(|(_, c)| *c as usize).sum::<usize>()
            })
            .sum()
    }

    /// Bin-centre displacements, sorted, with multiplicity.
    pub fn displacements(&self) -> Vec<f64> {
        let mut merged: Vec<(u32, u32)> = self.annuli.iter().flatten().copied().collect();
        merged.sort_unstable();
        merged
            .into_iter()
            .flat_map(|(k, c)| std::iter::repeat_n((k as f64 + 0.5) * self.bin, c as usize))
            .collect()
    }

    /// `t_n(s) = Σ_{|w| = n} e^{−s·d(j, wj)}`.
    pub fn annulus_sum(&self, n: usize, s: f64) -> f64 {
        self.annuli[n]
            .iter()
            .map(|&(k, c)| c as f64 * (-s * (k as f64 + 0.5) * self.bin).exp())
            .sum()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaEstimate {
    pub slope: f64,
    pub slope_stderr: f64,
    /// Largest change of the slope when 10% is cut from either end.
    pub slope_jackknife: f64,
    pub critical: f64,
    pub window: (f64, f64),
    pub depth: usize,
    pub agreement: f64,
}

pub fn delta_estimate(census: &OrbitCensus) -> Result<DeltaEstimate> {
    if census.depth < MIN_CENSUS_DEPTH {
        return Err(Error::OutOfRange {
            what: "census depth",
            value: census.depth as f64,
            allowed: format!("[{MIN_CENSUS_DEPTH}, ∞)"),
        });
    }
    let window = (0.45 * census.safe_radius, 0.9 * census.safe_radius);
    let fit = |lo: f64, hi: f64| -> Result<(f64, f64)> {
        let first = (lo / COUNT_STEP).ceil() as usize;
        let last = (hi / COUNT_STEP + 1e-9).floor() as usize;
        let pts: Vec<(f64, f64)> = (first..=last)
            .map(|k| {
                let r = k as f64 * COUNT_STEP;
                (r, (census.count_below(r) as f64).ln())
            })
            .collect();
        if pts.len() < 5 {
            return Err(Error::Window {
                lo,
                hi,
                reason: format!("only {} grid radii", pts.len()),
            });
        }
        fit_slope(&pts)
    };
    let (slope, slope_stderr) = fit(window.0, window.1)?;
    let cut = 0.1 * (window.1 - window.0);
    let a = fit(window.0 + cut, window.1)?.0;
    let b = fit(window.0, window.1 - cut)?.0;
    let slope_jackknife = (a - slope).abs().max((b - slope).abs());
    let critical = critical_exponent(census);
    Ok(DeltaEstimate {
        slope,
        slope_stderr,
        slope_jackknife,
        critical,
        window,
        depth: census.depth,
        agreement: (slope - critical).abs(),
    })
}

/// Smallest `s` for which `t_n(s)` is non-increasing over the last four
/// word lengths, by bisection.
pub fn critical_exponent(census: &OrbitCensus) -> f64 {
    let n = census.depth;
    let settled = |s: f64| (n - 3..n).all(|k| census.annulus_sum(k + 1, s) <= census.annulus_sum(k, s));
    let (mut lo, mut hi) = (0.0, 4.0);
    while !settled(hi) {
        hi *= 2.0;
    }
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if settled(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitSetSample {
    pub points: Vec<[f64; 3]>,
    pub depth: usize,
    pub dedup_grid: f64,
}

fn sphere_key(p: &[f64; 3]) -> [i64; 3] {
    p.map(|x| (x / LIMIT_DEDUP).round() as i64)
}

/// Attracting fixed points of the loxodromic elements of the ball, on the
/// unit sphere, in enumeration order with duplicates removed.
pub fn limit_set_sample(rep: &SurfaceGroupRep, depth: usize, max_elements: usize) -> Result<LimitSetSample> {
    let mut seen: FxHashSet<[i64; 3]> = FxHashSet::default();
    let mut points = Vec::new();
    let opts = BallOptions {
        max_elements,
        prune_radius: None,
    };
    walk_ball(rep, depth, &opts, |e| {
        if e.word.is_empty() {
            return;
        }
        let Ok(class) = e.map.classify() else { return };
        if class.kind != Kind::Loxodromic {
            return;
        }
        if let Some(p) = e.map.attracting_fixed_point() {
            let x = p.to_sphere();
            if seen.insert(sphere_key(&x)) {
                points.push(x);
            }
        }
    })?;
    Ok(LimitSetSample {
        points,
        depth,
        dedup_grid: LIMIT_DEDUP,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PlaneFit {
    pub normal: [f64; 3],
    pub offset: f64,
    pub max_distance: f64,
}

/// Least-squares plane through the sample.
pub fn plane_fit(points: &[[f64; 3]]) -> PlaneFit {
    let n = points.len().max(1) as f64;
    let c = points
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + Vector3::from(*p))
        / n;
    let cov = points.iter().fold(Matrix3::zeros(), |acc, p| {
        let d = Vector3::from(*p) - c;
        acc + d * d.transpose()
    });
    let eig = cov.symmetric_eigen();
    let (imin, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, &v)| if v < best.1 { (i, v) } else { best });
    let normal: Vector3<f64> = eig.eigenvectors.column(imin).into();
    let offset = normal.dot(&c);
    let max_distance = points
        .iter()
        .map(|p| (normal.dot(&Vector3::from(*p)) - offset).abs())
        .fold(0.0, f64::max);
    PlaneFit {
        normal: normal.into(),
        offset,
        max_distance,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoxDimension {
    pub value: f64,
    pub stderr: f64,
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
}

fn cell_of(p: &[f64; 3], eps: f64) -> [i64; 3] {
    p.map(|x| (x / eps).floor() as i64)
}

/// Quantile `q` of the distance to the nearest other point, over every
/// `stride`-th point.
fn nn_quantile(points: &[[f64; 3]], stride: usize, q: f64) -> f64 {
    let diam = 2.0;
    let eps = diam / (points.len() as f64).max(1.0);
    let mut grid: FxHashMap<[i64; 3], Vec<usize>> = FxHashMap::default();
    for (i, p) in points.iter().enumerate() {
        grid.entry(cell_of(p, eps)).or_default().push(i);
    }
    let mut nn: Vec<f64> = Vec::new();
    for i in (0..points.len()).step_by(stride.max(1)) {
        let p = &points[i];
        let c = cell_of(p, eps);
        let mut best = f64::INFINITY;
        let mut ring = 1i64;
        loop {
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    for dz in -ring..=ring {
                        if let Some(list) = grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                            for &j in list {
                                if j != i {
                                    best = best.min(chord(p, &points[j]));
                                }
                            }
                        }
                    }
                }
            }
            // Cells within `ring` cover every point closer than ring·eps.
            if best <= ring as f64 * eps || ring as f64 * eps > diam {
                break;
            }
            ring *= 2;
        }
        nn.push(best);
    }
    nn.sort_by(|a, b| a.total_cmp(b));
    nn[((nn.len() - 1) as f64 * q).round() as usize]
}

fn chord(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Diameter estimate from two farthest-point sweeps.
fn sweep_diameter(points: &[[f64; 3]]) -> f64 {
    let farthest = |from: &[f64; 3]| {
        points
            .iter()
            .map(|p| (chord(from, p), *p))
            .fold((0.0, *from), |best, x| if x.0 > best.0 { x } else { best })
    };
    let (_, a) = farthest(&points[0]);
    farthest(&a).0
}

/// Quantile of nearest-neighbour spacing that sets the finest box scale.
/// Fixed points cluster tightly, so the median spacing says little about
/// how well the sample covers the set.
pub const NN_QUANTILE: f64 = 0.99;

/// Box-counting dimension in the chordal metric of the unit sphere, over
/// dyadic scales from an eighth of the sample diameter down to four times
/// the `NN_QUANTILE` nearest-neighbour spacing.
pub fn box_dimension(sample: &LimitSetSample, scales: Option<&[f64]>) -> Result<BoxDimension> {
    let pts = &sample.points;
    if pts.len() < MIN_BOX_POINTS {
        return Err(Error::Insufficient(format!(
            "{} limit points, need {MIN_BOX_POINTS}",
            pts.len()
        )));
    }
    let scales: Vec<f64> = match scales {
        Some(s) => s.to_vec(),
        None => {
            let diam = sweep_diameter(pts);
            let floor = 4.0 * nn_quantile(pts, (pts.len() / 4000).max(1), NN_QUANTILE);
            let mut s = diam / 8.0;
            let mut out = Vec::new();
            while s >= floor {
                out.push(s);
                s /= 2.0;
            }
            out
        }
    };
    if scales.len() < 3 {
        return Err(Error::Insufficient(format!("{} usable scales", scales.len())));
    }
    // Fewest boxes over eight half-cell grid offsets, to damp aliasing.
    let counts: Vec<usize> = scales
        .iter()
        .map(|&eps| {
            (0..8)
                .map(|m| {
                    let shift = [0, 1, 2].map(|k| if m >> k & 1 == 1 { 0.5 * eps } else { 0.0 });
                    pts.iter()
                        .map(|p| cell_of(&[p[0] + shift[0], p[1] + shift[1], p[2] + shift[2]], eps))
                        .collect::<FxHashSet<_>>()
                        .len()
                })
                .min()
                .unwrap_or(0)
        })
        .collect();
    let fit: Vec<(f64, f64)> = scales
        .iter()
        .zip(&counts)
        .map(|(s, c)| ((1.0 / s).ln(), (*c as f64).ln()))
        .collect();
    let (value, stderr) = fit_slope(&fit)?;
    Ok(BoxDimension {
        value,
        stderr,
        scales,
        counts,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BowenRow {
    pub theta: f64,
    pub delta: DeltaEstimate,
    pub box_dimension: Option<f64>,
    pub plane_distance: f64,
    /// Manning bound of the Fuchsian germ, the left side of `1 ≤ δ`.
    pub manning_fuchsian: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BowenTable {
    pub rows: Vec<BowenRow>,
    pub fuchsian_near_one: bool,
    pub bent_above_one: bool,
    pub all_below_two: bool,
    pub manning_inequality: bool,
}

#[derive(Clone, Debug)]
pub struct BowenOptions {
    pub depth: usize,
    pub limit_depth: usize,
    pub max_elements: usize,
    pub tolerance: f64,
}

impl Default for BowenOptions {
    fn default() -> Self {
        BowenOptions {
            depth: 8,
            limit_depth: 6,
            max_elements: 60_000_000,
            tolerance: 0.1,
        }
    }
}

/// `δ̂` and the box dimension for each bending angle, with the rigidity flags.
pub fn bowen_check(base: &SurfaceGroupRep, thetas: &[f64], opts: &BowenOptions) -> Result<BowenTable> {
    if !thetas.contains(&0.0) {
        return Err(Error::OutOfRange {
            what: "bending angles",
            value: f64::NAN,
            allowed: "a list containing 0".into(),
        });
    }
    let mut rows = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let rep = base.bend(theta)?;
        let census = orbit_count(&rep, opts.depth, opts.max_elements)?;
        let delta = delta_estimate(&census)?;
        drop(census);
        let sample = limit_set_sample(&rep, opts.limit_depth, opts.max_elements)?;
        let box_dimension = box_dimension(&sample, None).ok().map(|b| b.value);
        let plane_distance = plane_fit(&sample.points).max_distance;
        rows.push(BowenRow {
            theta,
            delta,
            box_dimension,
            plane_distance,
            manning_fuchsian: 1.0,
        });
    }
    let est = |r: &BowenRow| [r.delta.slope, r.delta.critical];
    let fuchsian_near_one = rows
        .iter()
        .filter(|r| r.theta == 0.0)
        .all(|r| est(r).iter().all(|d| (d - 1.0).abs() <= opts.tolerance));
    let bent_above_one = rows
        .iter()
        .filter(|r| r.theta.abs() >= 0.2)
        .all(|r| est(r).iter().all(|&d| d > 1.0));
    let all_below_two = rows.iter().all(|r| est(r).iter().all(|&d| d <= 1.9));
    let manning_inequality = rows
        .iter()
        .all(|r| est(r).iter().all(|&d| r.manning_fuchsian <= d + opts.tolerance));
    Ok(BowenTable {
        rows,
        fuchsian_near_one,
        bent_above_one,
        all_below_two,
        manning_inequality,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::build_octagon_group;

    #[test]
    fn depth_one_displacements_are_equal() {
        let rep = build_octagon_group().unwrap();
        let c = orbit_count(&rep, 1, 1000).unwrap();
        assert_eq!(c.sphere_sizes, vec![1, 8]);
        assert_eq!(c.annuli[1].len(), 1);
        assert_eq!(c.annuli[1][0].1, 8);
        assert_eq!(c.count_below(1e-3), 1);
        let d = c.displacements();
        assert_eq!(d.len(), 9);
        assert!(d.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn synthetic_circle_has_dimension_one() {
        let n = 200_000;
        let points: Vec<[f64; 3]> = (0..n)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                [a.cos(), a.sin(), 0.0]
            })
            .collect();
        let s = LimitSetSample {
            points,
            depth: 0,
            dedup_grid: LIMIT_DEDUP,
        };
        let b = box_dimension(&s, None).unwrap();
        assert!((b.value - 1.0).abs() <= 0.02, "{b:?}");
        assert!(plane_fit(&s.points).max_distance < 1e-12);
    }

    #[test]
    fn small_samples_are_rejected() {
        let s = LimitSetSample {
            points: vec![[1.0, 0.0, 0.0]; 10],
            depth: 0,
            dedup_grid: LIMIT_DEDUP,
        };
        assert!(box_dimension(&s, None).is_err());
        let rep = build_octagon_group().unwrap();
        let c = orbit_count(&rep, 3, 10_000).unwrap();
        assert!(delta_estimate(&c).is_err());
    }
}
