//! `I`-convergence and `I`-Cauchy detectors for finite point sequences.
//!
//! `(x_n)` is `I`-convergent to `z` when every exceptional set
//! `{n : ρ(x_n, z) ≥ ε}` lies in `I`. At finite scale the quantifier over
//! limits is replaced by a bounded candidate search (sequence values at
//! geometric tail indices plus coordinatewise medians, at most
//! [`MAX_CANDIDATES`]) and the quantifier over `ε` by an [`EpsGrid`]. Any
//! undecided membership call makes the verdict `Undecided`; the detectors
//! never guess.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ideal::{DensityPoint, IdealSpec, IndexSet, Membership, MembershipVerdict};
use crate::scalar::{dyadic, Scalar};
use crate::selection::{CoinVector, Selection, SubseqPrefix};
use crate::sequence::PointSeq;

pub const MAX_CANDIDATES: usize = 16;
const TAIL_SAMPLES: usize = MAX_CANDIDATES - 2;

/// Strictly decreasing positive tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsGrid<F>(Vec<F>);

impl<F: Scalar> EpsGrid<F> {
    pub fn new(eps: Vec<F>) -> Result<Self> {
        if eps.is_empty() {
            return Err(Error::Config("epsilon grid must not be empty".into()));
        }
        if eps.iter().any(|e| !(e.is_finite() && *e > F::zero())) {
            return Err(Error::Config("epsilon grid values must be positive and finite".into()));
        }
        if eps.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Config("epsilon grid must be strictly decreasing".into()));
        }
        Ok(EpsGrid(eps))
    }

    /// `1/2, 1/4, …, 2^-levels`.
    pub fn dyadic(levels: u32) -> Result<Self> {
        EpsGrid::new((1..=levels as i32).map(dyadic).collect())
    }

    /// Dyadic grid from `1/2` down to the largest power of two `≥ eps_min`.
    pub fn dyadic_down_to(eps_min: f64) -> Result<Self> {
        if !(eps_min > 0.0 && eps_min <= 0.5) {
            return Err(Error::Config(format!("eps-min {eps_min} must lie in (0, 1/2]")));
        }
        let levels = (-eps_min.log2()).floor().max(1.0) as u32;
        EpsGrid::dyadic(levels)
    }

    pub fn values(&self) -> &[F] {
        &self.0
    }

    pub fn finest(&self) -> F {
        *self.0.last().unwrap()
    }
}

impl<F: Scalar> Default for EpsGrid<F> {
    /// `1/2, …, 2^-7`.
    fn default() -> Self {
        EpsGrid::dyadic(7).unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsEvidence {
    pub eps: f64,
    pub membership: Membership,
    pub densities: Vec<DensityPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateReport<F> {
    pub point: Vec<F>,
    pub per_eps: Vec<EpsEvidence>,
}

impl<F> CandidateReport<F> {
    fn qualifies(&self) -> bool {
        self.per_eps.iter().all(|e| e.membership == Membership::Member)
    }

    fn refuted(&self) -> bool {
        self.per_eps.iter().any(|e| e.membership == Membership::NonMember)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConvergenceVerdict<F> {
    Convergent { limit: Vec<F>, evidence: Vec<EpsEvidence> },
    Divergent { candidates: Vec<CandidateReport<F>> },
    Undecided { candidates: Vec<CandidateReport<F>> },
}

impl<F> ConvergenceVerdict<F> {
    pub fn tag(&self) -> VerdictTag {
        match self {
            ConvergenceVerdict::Convergent { .. } => VerdictTag::Convergent,
            ConvergenceVerdict::Divergent { .. } => VerdictTag::Divergent,
            ConvergenceVerdict::Undecided { .. } => VerdictTag::Undecided,
        }
    }

    pub fn limit(&self) -> Option<&[F]> {
        match self {
            ConvergenceVerdict::Convergent { limit, .. } => Some(limit),
            _ => None,
        }
    }

    pub fn is_convergent(&self) -> bool {
        self.tag() == VerdictTag::Convergent
    }

    pub fn is_divergent(&self) -> bool {
        self.tag() == VerdictTag::Divergent
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VerdictTag {
    Convergent,
    Divergent,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CauchyVerdict {
    /// One anchor index per grid tolerance.
    Cauchy { anchors: Vec<usize> },
    /// The first tolerance at which every anchor was refuted.
    NotCauchy { eps: f64 },
    Undecided,
}

impl CauchyVerdict {
    pub fn tag(&self) -> VerdictTag {
        match self {
            CauchyVerdict::Cauchy { .. } => VerdictTag::Convergent,
            CauchyVerdict::NotCauchy { .. } => VerdictTag::Divergent,
            CauchyVerdict::Undecided => VerdictTag::Undecided,
        }
    }
}

/// Geometric sample of indices in the tail window `[⌈wN⌉, N]`, largest first.
pub fn tail_indices(ideal: &IdealSpec, n: usize) -> Vec<usize> {
    let start = ((ideal.params().window * n as f64).ceil() as usize).clamp(1, n);
    let ratio = n as f64 / start as f64;
    let mut out: Vec<usize> = (0..TAIL_SAMPLES)
        .map(|j| {
            let t = (n as f64 / ratio.powf(j as f64 / (TAIL_SAMPLES - 1) as f64)).round() as usize;
            t.clamp(start, n)
        })
        .collect();
    out.dedup();
    out
}

/// Memberships of the exceptional sets `{n : dist(n) ≥ ε}` (or `> ε` when `strict`) for every grid `ε`.
fn exceptional_memberships<F: Scalar>(
    ideal: &IdealSpec,
    n: usize,
    grid: &EpsGrid<F>,
    strict: bool,
    dist: impl Fn(usize) -> F,
) -> Vec<MembershipVerdict> {
    let eps = grid.values();
    // index i lies in the exceptional set of eps[e] iff first_cleared(dist(i)) <= e
    let first_cleared = |d: F| {
        if strict {
            eps.partition_point(|&e| e >= d)
        } else {
            eps.partition_point(|&e| e > d)
        }
    };
    if ideal.is_custom() {
        let mut sets: Vec<Vec<usize>> = vec![Vec::new(); eps.len()];
        for i in 1..=n {
            let from = first_cleared(dist(i));
            for set in &mut sets[from..] {
                set.push(i);
            }
        }
        let h = crate::ideal::Horizon::new(n).expect("sequence horizons are at least 2");
        return sets
            .into_iter()
            .map(|els| ideal.membership(&IndexSet::from_sorted_unchecked(els, h)))
            .collect();
    }
    let probes = ideal.params().probe_positions(n);
    let k = eps.len();
    // hist[segment * k + first_cleared]
    let mut hist = vec![0usize; probes.len() * k];
    let mut seg = 0;
    for i in 1..=n {
        while probes[seg] < i {
            seg += 1;
        }
        let from = first_cleared(dist(i));
        if from < k {
            hist[seg * k + from] += 1;
        }
    }
    // cum[j * k + e] = |{i ≤ probes[j] : i in exceptional set of eps[e]}|
    let mut cum = vec![0usize; probes.len() * k];
    let mut running = vec![0usize; k];
    for j in 0..probes.len() {
        let mut acc = 0;
        for e in 0..k {
            acc += hist[j * k + e];
            running[e] += acc;
            cum[j * k + e] = running[e];
        }
    }
    (0..k)
        .map(|e| {
            ideal
                .decide_counts(n, |pos| {
                    let j = probes.binary_search(&pos).expect("decide_counts reads probe positions only");
                    cum[j * k + e]
                })
                .expect("built-in ideal")
        })
        .collect()
}

fn evidence<F: Scalar>(grid: &EpsGrid<F>, verdicts: Vec<MembershipVerdict>) -> Vec<EpsEvidence> {
    grid.values()
        .iter()
        .zip(verdicts)
        .map(|(e, v)| EpsEvidence { eps: e.to_f64_lossy(), membership: v.membership, densities: v.evidence })
        .collect()
}

/// Lower median (an actual sample value) of each coordinate.
fn coordinatewise_median<F: Scalar>(points: &[&[F]], dim: usize) -> Vec<F> {
    (0..dim)
        .map(|c| {
            let mut col: Vec<F> = points.iter().map(|p| p[c]).collect();
            let mid = (col.len() - 1) / 2;
            let (_, m, _) = col.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap());
            *m
        })
        .collect()
}

fn candidates<F: Scalar>(x: &PointSeq<F>, ideal: &IdealSpec) -> Vec<Vec<F>> {
    let n = x.len();
    let dim = x.dim();
    let tail = tail_indices(ideal, n);
    let start = *tail.last().unwrap();
    let window: Vec<&[F]> = (start..=n).map(|i| x.point(i)).collect();
    let sampled: Vec<&[F]> = tail.iter().map(|&i| x.point(i)).collect();
    let mut out: Vec<Vec<F>> = Vec::with_capacity(MAX_CANDIDATES);
    let mut push = |p: Vec<F>| {
        if !out.contains(&p) {
            out.push(p);
        }
    };
    push(coordinatewise_median(&window, dim));
    push(coordinatewise_median(&sampled, dim));
    for p in sampled {
        push(p.to_vec());
    }
    out
}

/// Decides `I-lim x_n` over a bounded candidate set.
pub fn i_converges<F: Scalar>(
    x: &PointSeq<F>,
    ideal: &IdealSpec,
    grid: &EpsGrid<F>,
) -> ConvergenceVerdict<F> {
    let n = x.len();
    let reports: Vec<CandidateReport<F>> = candidates(x, ideal)
        .into_iter()
        .map(|z| {
            let verdicts = exceptional_memberships(ideal, n, grid, false, |i| x.distance_to(i, &z));
            CandidateReport { per_eps: evidence(grid, verdicts), point: z }
        })
        .collect();

    let mut qualifying = reports.iter().filter(|r| r.qualifies());
    if let Some(first) = qualifying.next() {
        // an I-limit is unique: rival qualifiers must coincide at the finest resolution
        let unique = qualifying.all(|r| x.distance(&r.point, &first.point) <= grid.finest());
        if unique {
            return ConvergenceVerdict::Convergent {
                limit: first.point.clone(),
                evidence: first.per_eps.clone(),
            };
        }
        return ConvergenceVerdict::Undecided { candidates: reports };
    }
    if reports.iter().all(|r| r.refuted()) {
        ConvergenceVerdict::Divergent { candidates: reports }
    } else {
        ConvergenceVerdict::Undecided { candidates: reports }
    }
}

/// Limit-free `I`-Cauchy test with anchors at the geometric tail indices.
pub fn i_cauchy<F: Scalar>(x: &PointSeq<F>, ideal: &IdealSpec, grid: &EpsGrid<F>) -> CauchyVerdict {
    let n = x.len();
    let anchors = tail_indices(ideal, n);
    let per_anchor: Vec<Vec<Membership>> = anchors
        .iter()
        .map(|&a| {
            let za = x.point(a).to_vec();
            exceptional_memberships(ideal, n, grid, true, |i| x.distance_to(i, &za))
                .into_iter()
                .map(|v| v.membership)
                .collect()
        })
        .collect();

    let mut chosen = Vec::with_capacity(grid.values().len());
    let mut undecided = false;
    for (e, eps) in grid.values().iter().enumerate() {
        let col = per_anchor.iter().map(|m| m[e]);
        if let Some(j) = col.clone().position(|m| m == Membership::Member) {
            chosen.push(anchors[j]);
        } else if col.clone().all(|m| m == Membership::NonMember) {
            return CauchyVerdict::NotCauchy { eps: eps.to_f64_lossy() };
        } else {
            undecided = true;
        }
    }
    if undecided {
        CauchyVerdict::Undecided
    } else {
        CauchyVerdict::Cauchy { anchors: chosen }
    }
}

/// Bit `j` is set iff `ρ(z_{s(j)}, z_{s(anchor)}) > 1/k`, for `j = 1..=len(s)`.
pub fn indicator_sequence<F: Scalar>(
    z: &PointSeq<F>,
    s: &SubseqPrefix,
    anchor: usize,
    k: usize,
) -> Result<CoinVector> {
    if k == 0 {
        return domain("k must be at least 1");
    }
    let Some(anchor_idx) = s.entry(anchor) else {
        return domain(format!("anchor {anchor} outside the selection's {} entries", s.len()));
    };
    if let Some(&bad) = s.entries().iter().find(|&&e| e > z.len()) {
        return domain(format!("selection entry {bad} beyond sequence horizon {}", z.len()));
    }
    let threshold = F::one() / F::of(k as f64);
    let za = z.point(anchor_idx);
    let mut bits = CoinVector::zeros(s.len());
    for (j, &e) in s.entries().iter().enumerate() {
        if z.distance_to(e, za) > threshold {
            bits.set(j + 1, true);
        }
    }
    Ok(bits)
}
