//! Word-length balls in the Cayley graph of the surface group.
//!
//! Elements are enumerated sphere by sphere. Each new product is reduced
//! against every element seen so far through a 64-bit fingerprint of the
//! quantized orbit point `γ·j` in upper half-space, so relations are detected
//! numerically rather than by rewriting words. The group acts freely, so the
//! orbit point determines the element, and distinct orbit points are at least
//! the shortest displacement (about 3) apart.

use std::fmt;

use rustc_hash::FxHashSet;

use crate::error::{Error, Result};
use crate::group::{SurfaceGroupRep, LETTERS, PARTNER, SIDE_LABELS};
use crate::moebius::Moebius;

/// Cell size, in hyperbolic units, of the orbit-point grid.
pub const DEDUP_CELL: f64 = 0.1;
/// Fraction of a cell near each face within which the neighbouring cell is
/// also probed.
const PROBE: f64 = 0.25;

fn push_cells(v: f64, out: &mut [i64; 2]) -> usize {
    let f = v.floor();
    out[0] = f as i64;
    let frac = v - f;
    if frac < PROBE {
        out[1] = out[0] - 1;
        2
    } else if frac > 1.0 - PROBE {
        out[1] = out[0] + 1;
        2
    } else {
        1
    }
}

/// Grid keys of the orbit point `m·j`: log-height, then the horizontal
/// coordinates measured in units of the cell's reference height. Points
/// within `PROBE·DEDUP_CELL` of a cell face also yield the neighbouring key.
pub fn orbit_keys(m: &Moebius, out: &mut Vec<[i64; 3]>) {
    out.clear();
    let den = m.c.norm_sqr() + m.d.norm_sqr();
    let x = (m.a * m.c.conj() + m.b * m.d.conj()) / den;
    let eta = -den.ln() / DEDUP_CELL;
    let mut ec = [0i64; 2];
    let mut xc = [0i64; 2];
    let mut yc = [0i64; 2];
    let ne = push_cells(eta, &mut ec);
    for &e in &ec[..ne] {
        let unit = DEDUP_CELL * (DEDUP_CELL * e as f64).exp();
        let nx = push_cells(x.re / unit, &mut xc);
        let ny = push_cells(x.im / unit, &mut yc);
        for &i in &xc[..nx] {
            for &j in &yc[..ny] {
                out.push([e, i, j]);
            }
        }
    }
}

/// Word of length at most 16, four bits per letter.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Word {
    packed: u64,
    len: u8,
}

impl Word {
    pub const EMPTY: Word = Word { packed: 0, len: 0 };
    pub const MAX_LEN: usize = 16;

    pub fn from_letters(letters: &[usize]) -> Word {
        letters.iter().fold(Word::EMPTY, |w, &k| w.push(k))
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(self, letter: usize) -> Word {
        assert!(self.len() < Self::MAX_LEN && letter < LETTERS);
        Word {
            packed: self.packed | ((letter as u64) << (4 * self.len)),
            len: self.len + 1,
        }
    }

    pub fn letter(&self, i: usize) -> usize {
        ((self.packed >> (4 * i)) & 0xf) as usize
    }

    pub fn last(&self) -> Option<usize> {
        (self.len > 0).then(|| self.letter(self.len() - 1))
    }

    pub fn letters(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).map(|i| self.letter(i))
    }

    pub fn inverse(&self) -> Word {
        (0..self.len())
            .rev()
            .fold(Word::EMPTY, |w, i| w.push(PARTNER[self.letter(i)]))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "e");
        }
        for (i, k) in self.letters().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", SIDE_LABELS[k])?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BallElement {
    pub word: Word,
    pub map: Moebius,
}

#[derive(Clone, Debug)]
pub struct BallOptions {
    /// Hard cap on the number of distinct elements.
    pub max_elements: usize,
    /// Elements displacing `j` further than this are kept but not expanded.
    pub prune_radius: Option<f64>,
}

impl Default for BallOptions {
    fn default() -> Self {
        BallOptions {
            max_elements: 20_000_000,
            prune_radius: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GroupBall {
    pub depth: usize,
    /// Identity first, then spheres in order of word length.
    pub elements: Vec<BallElement>,
    /// Number of new elements at each word length `0..=depth`.
    pub sphere_sizes: Vec<usize>,
    /// Elements that were not expanded because of the prune radius.
    pub pruned: usize,
}

impl GroupBall {
    pub fn maps(&self) -> impl Iterator<Item = &Moebius> {
        self.elements.iter().map(|e| &e.map)
    }
}

#[derive(Clone, Debug)]
pub struct WalkSummary {
    pub sphere_sizes: Vec<usize>,
    pub pruned: usize,
}

#[inline]
fn mix(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58476d1ce4e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn fingerprint(key: &[i64; 3]) -> u64 {
    key.iter()
        .fold(0x9e3779b97f4a7c15u64, |h, &k| mix(h ^ mix(k as u64)))
}

/// Set of group elements keyed by orbit-point fingerprints.
#[derive(Default)]
pub struct ElementSet {
    seen: FxHashSet<u64>,
    keys: Vec<[i64; 3]>,
}

impl ElementSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }

    pub fn contains(&mut self, m: &Moebius) -> bool {
        orbit_keys(m, &mut self.keys);
        self.keys.iter().any(|k| self.seen.contains(&fingerprint(k)))
    }

    /// Inserts `m` unless a numerically equal element is present; returns
    /// whether it was new.
    pub fn insert(&mut self, m: &Moebius) -> bool {
        orbit_keys(m, &mut self.keys);
        if self.keys.iter().any(|k| self.seen.contains(&fingerprint(k))) {
            return false;
        }
        self.seen.insert(fingerprint(&self.keys[0]));
        true
    }
}

/// Visits every distinct element of the ball of the given word length,
/// sphere by sphere. Only the current sphere is held in memory.
pub fn walk_ball(
    rep: &SurfaceGroupRep,
    depth: usize,
    opts: &BallOptions,
    mut visit: impl FnMut(&BallElement),
) -> Result<WalkSummary> {
    let gens = rep.generators();
    let mut set = ElementSet::new();
    let identity = BallElement {
        word: Word::EMPTY,
        map: Moebius::IDENTITY,
    };
    set.insert(&identity.map);
    visit(&identity);
    let mut sphere = vec![identity];
    let mut sizes = vec![1usize];
    let mut pruned = 0usize;
    let mut total = 1usize;
    for n in 1..=depth {
        let mut next = Vec::new();
        let mut count = 0usize;
        for e in &sphere {
            if let Some(r) = opts.prune_radius {
                if e.map.displacement() > r {
                    pruned += 1;
                    continue;
                }
            }
            let back = e.word.last().map(|k| PARTNER[k]);
            for (s, g) in gens.iter().enumerate() {
                if Some(s) == back {
                    continue;
                }
                let m = e.map.compose(g);
                if !set.insert(&m) {
                    continue;
                }
                total += 1;
                if total > opts.max_elements {
                    return Err(Error::Resource {
                        budget: opts.max_elements,
                        attempted: n,
                        achieved: n - 1,
                    });
                }
                let el = BallElement {
                    word: e.word.push(s),
                    map: m,
                };
                visit(&el);
                count += 1;
                if n < depth {
                    next.push(el);
                }
            }
        }
        sizes.push(count);
        sphere = next;
    }
    Ok(WalkSummary {
        sphere_sizes: sizes,
        pruned,
    })
}

pub fn enumerate_ball(rep: &SurfaceGroupRep, depth: usize, opts: &BallOptions) -> Result<GroupBall> {
    let mut elements = Vec::new();
    let summary = walk_ball(rep, depth, opts, |e| elements.push(*e))?;
    Ok(GroupBall {
        depth,
        elements,
        sphere_sizes: summary.sphere_sizes,
        pruned: summary.pruned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::build_octagon_group;

    #[test]
    fn word_packing() {
        let w = Word::from_letters(&[0, 5, 7, 2]);
        assert_eq!(w.len(), 4);
        assert_eq!(w.letters().collect::<Vec<_>>(), vec![0, 5, 7, 2]);
        assert_eq!(w.last(), Some(2));
        assert_eq!(w.inverse().letters().collect::<Vec<_>>(), [0, 5, 7, 2].iter().rev().map(|&k| PARTNER[k]).collect::<Vec<_>>());
        assert_eq!(w.to_string(), "a1 b2 B2 A1");
        assert_eq!(Word::EMPTY.to_string(), "e");
    }

    #[test]
    fn small_sphere_sizes() {
        let rep = build_octagon_group().unwrap();
        let ball = enumerate_ball(&rep, 3, &BallOptions::default()).unwrap();
        // Free reduction alone: 1, 8, 56, 392. The relator has length 8, so no
        // coincidences occur before word length 4.
        assert_eq!(ball.sphere_sizes, vec![1, 8, 56, 392]);
        for e in &ball.elements {
            assert!(rep.evaluate(&e.word).distance_to(&e.map) < 1e-9);
        }
    }

    #[test]
    fn half_relator_coincidences_appear_at_length_four() {
        let rep = build_octagon_group().unwrap();
        let ball = enumerate_ball(&rep, 4, &BallOptions::default()).unwrap();
        // Each cyclic rotation of the relator and of its inverse identifies
        // one pair of length-4 words: 392·7 − 16/2.
        assert_eq!(ball.sphere_sizes[4], 392 * 7 - 8);
    }

    #[test]
    fn budget_is_enforced() {
        let rep = build_octagon_group().unwrap();
        let opts = BallOptions {
            max_elements: 100,
            prune_radius: None,
        };
        match enumerate_ball(&rep, 3, &opts) {
            Err(Error::Resource { attempted, achieved, .. }) => {
                assert_eq!((attempted, achieved), (3, 2));
            }
            other => panic!("{other:?}"),
        }
    }
}
