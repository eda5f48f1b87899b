//! Witness pairs `(u, v, x*, r)`: a subsequence `u` staying within `r` of a
//! cluster point `x*` and a subsequence `v` staying at least `2r` away.
//!
//! At finite scale "hit infinitely often" means *recurrent*: hit in each of the
//! three last dyadic blocks `[N/8, N/4)`, `[N/4, N/2)`, `[N/2, N]`. The cluster
//! point is located by covering the value range with cells whose side halves
//! from the range diameter `D` down to `D/2^8`, descending at each level into
//! the recurrent cell with the most hits.

use std::cmp::Ordering;

use crate::convergence::{i_converges, EpsGrid};
use crate::ideal::IdealSpec;
use crate::scalar::Scalar;
use crate::selection::{Selection, SubseqPrefix};
use crate::sequence::{MetricKind, PointSeq};

pub const MIN_HORIZON: usize = 64;
const LEVELS: u32 = 8;
const ALL_BLOCKS: u8 = 0b111;

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessPair<F> {
    pub u: SubseqPrefix,
    pub v: SubseqPrefix,
    pub center: Vec<F>,
    pub radius: F,
}

impl<F: Scalar> WitnessPair<F> {
    /// Replays `ρ(x_{u(n)}, x*) ≤ r` and `ρ(x_{v(n)}, x*) ≥ 2r` for every enumerated `n`.
    pub fn holds_on(&self, x: &PointSeq<F>) -> bool {
        let two_r = self.radius + self.radius;
        let in_range = |s: &SubseqPrefix| s.entries().iter().all(|&e| e <= x.len());
        in_range(&self.u)
            && in_range(&self.v)
            && self.radius > F::zero()
            && self.u.entries().iter().all(|&i| x.distance_to(i, &self.center) <= self.radius)
            && self.v.entries().iter().all(|&i| x.distance_to(i, &self.center) >= two_r)
    }
}

/// Recurrence block of index `i` (bit 0: `[N/8, N/4)`, bit 1: `[N/4, N/2)`, bit 2: `[N/2, N]`).
fn block_bit(i: usize, n: usize) -> u8 {
    let (b0, b1, b2) = (n.div_ceil(8), n.div_ceil(4), n.div_ceil(2));
    if i >= b2 {
        0b100
    } else if i >= b1 {
        0b010
    } else if i >= b0 {
        0b001
    } else {
        0
    }
}

#[derive(Debug, Clone)]
struct Cell {
    key: Vec<u16>,
    hits: usize,
    mask: u8,
    last: usize,
    members: Vec<usize>,
}

fn better(a: &Cell, b: &Cell) -> Ordering {
    a.hits.cmp(&b.hits).then(a.last.cmp(&b.last))
}

/// Finest-level cells keyed by per-coordinate grid index.
fn finest_cells<F: Scalar>(x: &PointSeq<F>, lo: &[F], side: F) -> Vec<Cell> {
    let n = x.len();
    let dim = x.dim();
    let top = (1u32 << LEVELS) - 1;
    let key_of = |p: &[F]| -> Vec<u16> {
        (0..dim)
            .map(|c| {
                let k = ((p[c] - lo[c]) / side).floor().to_f64_lossy();
                (k.max(0.0) as u32).min(top) as u16
            })
            .collect()
    };
    let keys: Vec<Vec<u16>> = x.points().map(key_of).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]).then(a.cmp(&b)));
    let mut cells: Vec<Cell> = Vec::new();
    for i in order {
        let idx = i + 1;
        match cells.last_mut() {
            Some(c) if c.key == keys[i] => {
                c.hits += 1;
                c.mask |= block_bit(idx, n);
                c.last = c.last.max(idx);
                c.members.push(idx);
            }
            _ => cells.push(Cell {
                key: keys[i].clone(),
                hits: 1,
                mask: block_bit(idx, n),
                last: idx,
                members: vec![idx],
            }),
        }
    }
    cells
}

/// Descends from side `D/2` to `D/2^8`, keeping the best recurrent cell at each level.
fn zoom(cells: &[Cell]) -> Option<&Cell> {
    let mut chosen_prefix: Option<Vec<u16>> = None;
    for level in 1..=LEVELS {
        let shift = LEVELS - level;
        let mut agg: Vec<(Vec<u16>, Cell)> = Vec::new();
        for c in cells {
            let parent: Vec<u16> = c.key.iter().map(|&k| k >> shift).collect();
            if let Some(prev) = &chosen_prefix {
                let up: Vec<u16> = parent.iter().map(|&k| k >> 1).collect();
                if &up != prev {
                    continue;
                }
            }
            match agg.iter_mut().find(|(k, _)| *k == parent) {
                Some((_, a)) => {
                    a.hits += c.hits;
                    a.mask |= c.mask;
                    a.last = a.last.max(c.last);
                }
                None => agg.push((
                    parent,
                    Cell { key: Vec::new(), hits: c.hits, mask: c.mask, last: c.last, members: Vec::new() },
                )),
            }
        }
        let (key, _) = agg
            .into_iter()
            .filter(|(_, a)| a.mask == ALL_BLOCKS)
            .max_by(|(_, a), (_, b)| better(a, b))?;
        chosen_prefix = Some(key);
    }
    let key = chosen_prefix?;
    cells.iter().find(|c| c.key == key)
}

fn lower_median<F: Scalar>(x: &PointSeq<F>, members: &[usize]) -> Vec<F> {
    (0..x.dim())
        .map(|c| {
            let mut col: Vec<F> = members.iter().map(|&i| x.point(i)[c]).collect();
            let mid = (col.len() - 1) / 2;
            *col.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap()).1
        })
        .collect()
}

/// Cluster point of the most-hit recurrent cell and the finest cell side.
fn cluster_point<F: Scalar>(x: &PointSeq<F>) -> Option<(Vec<F>, F)> {
    let dim = x.dim();
    if x.metric() == MetricKind::Discrete {
        let mut order: Vec<usize> = (1..=x.len()).collect();
        order.sort_by(|&a, &b| x.value(a).partial_cmp(&x.value(b)).unwrap().then(a.cmp(&b)));
        let mut best: Option<(F, Cell)> = None;
        let mut i = 0;
        while i < order.len() {
            let v = x.value(order[i]);
            let mut cell = Cell { key: Vec::new(), hits: 0, mask: 0, last: 0, members: Vec::new() };
            while i < order.len() && x.value(order[i]) == v {
                cell.hits += 1;
                cell.mask |= block_bit(order[i], x.len());
                cell.last = cell.last.max(order[i]);
                i += 1;
            }
            if cell.mask == ALL_BLOCKS && best.as_ref().map_or(true, |(_, b)| better(&cell, b) == Ordering::Greater) {
                best = Some((v, cell));
            }
        }
        return best.map(|(v, _)| (vec![v], F::one()));
    }
    let mut lo = x.point(1).to_vec();
    let mut hi = lo.clone();
    for p in x.points() {
        for c in 0..dim {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    let diameter = lo.iter().zip(&hi).fold(F::zero(), |acc, (&a, &b)| acc + (b - a) * (b - a)).sqrt();
    if diameter <= F::zero() {
        return None;
    }
    let side = diameter / F::of(f64::from(1u32 << LEVELS));
    let cells = finest_cells(x, &lo, side);
    let cell = zoom(&cells)?;
    Some((lower_median(x, &cell.members), side))
}

/// Finds `(u, v, x*, r)` on the horizon of `x`, or `None` when `x` is judged
/// convergent, has no recurrent cluster point, or has no recurrent far values.
///
/// The radius is `t/2` where `t` is the `⌈N/8⌉`-th largest distance to `x*`
/// when that leaves both sides recurrent and the near side with at least
/// `N/8` indices; otherwise `t` is the smallest per-block maximal distance,
/// so the far side is recurrent but may be sparse.
pub fn witness_pair<F: Scalar>(x: &PointSeq<F>) -> Option<WitnessPair<F>> {
    let n = x.len();
    if n < MIN_HORIZON {
        return None;
    }
    if i_converges(x, &IdealSpec::fin(), &EpsGrid::default()).is_convergent() {
        return None;
    }
    let (center, resolution) = cluster_point(x)?;
    let dist: Vec<F> = (1..=n).map(|i| x.distance_to(i, &center)).collect();

    let recurrent = |keep: &dyn Fn(F) -> bool| {
        dist.iter().enumerate().filter(|(_, &d)| keep(d)).fold(0u8, |m, (i, _)| m | block_bit(i + 1, n))
            == ALL_BLOCKS
    };
    let two = F::of(2.0);
    let floor_count = n / 8;

    let dense_t = {
        let mut sorted = dist.clone();
        let k = n.div_ceil(8).max(1) - 1;
        *sorted.select_nth_unstable_by(k, |a, b| b.partial_cmp(a).unwrap()).1
    };
    let dense_ok = dense_t > F::zero() && {
        let r = dense_t / two;
        recurrent(&|d| d >= dense_t)
            && recurrent(&|d| d <= r)
            && dist.iter().filter(|&&d| d <= r).count() >= floor_count
    };
    let t = if dense_ok {
        dense_t
    } else {
        let mut per_block_max = [F::zero(); 3];
        for (i, &d) in dist.iter().enumerate() {
            let b = block_bit(i + 1, n);
            if b != 0 {
                let slot = b.trailing_zeros() as usize;
                per_block_max[slot] = per_block_max[slot].max(d);
            }
        }
        per_block_max.iter().copied().fold(F::infinity(), F::min)
    };
    let radius = t / two;
    if !(radius > F::zero()) || t < resolution || !recurrent(&|d| d <= radius) {
        return None;
    }
    let u: Vec<usize> = (1..=n).filter(|&i| dist[i - 1] <= radius).collect();
    let v: Vec<usize> = (1..=n).filter(|&i| dist[i - 1] >= t).collect();
    Some(WitnessPair {
        u: SubseqPrefix::from_vec_unchecked(u, n),
        v: SubseqPrefix::from_vec_unchecked(v, n),
        center,
        radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ideal::Horizon;

    fn seq(n: usize, f: impl Fn(usize) -> f64) -> PointSeq<f64> {
        PointSeq::from_fn(MetricKind::RealAbs, Horizon::new(n).unwrap(), f).unwrap()
    }

    #[test]
    fn alternating_pair() {
        let n = 1 << 12;
        let x = seq(n, |k| if k % 2 == 0 { 1.0 } else { -1.0 });
        let p = witness_pair(&x).expect("pair");
        assert_eq!(p.center, vec![1.0]);
        assert_eq!(p.radius, 1.0);
        assert!(p.u.entries().iter().all(|e| e % 2 == 0) && p.u.len() == n / 2);
        assert!(p.v.entries().iter().all(|e| e % 2 == 1) && p.v.len() == n / 2);
        assert!(p.holds_on(&x));
    }

    #[test]
    fn harmonic_has_no_pair() {
        assert!(witness_pair(&seq(1 << 12, |k| 1.0 / k as f64)).is_none());
    }

    #[test]
    fn identity_values_have_no_pair() {
        assert!(witness_pair(&seq(1 << 12, |k| k as f64)).is_none());
    }

    #[test]
    fn short_sequences_have_no_pair() {
        assert!(witness_pair(&seq(63, |k| (k % 2) as f64)).is_none());
    }

    #[test]
    fn sparse_far_values_still_pair() {
        // one far value per dyadic block: recurrent but far below N/8
        let x = seq(1 << 12, |k| if k.is_power_of_two() { 1.0 } else { 0.0 });
        let p = witness_pair(&x).expect("pair");
        assert_eq!(p.center, vec![0.0]);
        assert_eq!(p.v.entries(), &[1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096]);
        assert!(p.holds_on(&x));
    }

    #[test]
    fn discrete_and_euclid() {
        let x = PointSeq::from_fn(MetricKind::Discrete, Horizon::new(999).unwrap(), |k| (k % 3) as f64).unwrap();
        let p = witness_pair(&x).expect("pair");
        assert!(p.holds_on(&x));
        let y = PointSeq::from_points(MetricKind::Euclid(2), Horizon::new(1 << 10).unwrap(), |k, out| {
            out[0] = (k % 2) as f64;
            out[1] = ((k / 2) % 2) as f64;
        })
        .unwrap();
        let p = witness_pair(&y).expect("pair");
        assert!(p.holds_on(&y));
    }
}
