//! Block-extension construction of `I`-divergent selections.
//!
//! Given a witness pair `(u, v, x*, r)` and interval witness cutpoints
//! `n_1 < n_2 < …`, a selection `s` lies in `A_m` when for some `k` with
//! `n_k > m` the whole block `[n_k, n_{k+1})` of `s` maps near `x*` (within
//! `r`) and the block `[n_{k+1}, n_{k+2})` maps far (at least `2r`).
//! [`extend_prefix`] extends any finite prefix into `A_m`:
//!
//! 1. pad with consecutive integers up to position `n_k - 1`, `k` least with `n_k > d`;
//! 2. copy the `u`-block from the least `p_k` with `u(p_k) > s(n_k - 1)`;
//! 3. copy the `v`-block from the least `q_k` with `v(q_k) > s(n_{k+1} - 1)`.
//!
//! Iterating over `m = 1, 2, …` yields a selection in every visited `A_m`;
//! both of its near and far index sets then contain one full witness
//! interval per round, which no member of the ideal can do infinitely often.

use std::fmt::{self, Write as _};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ideal::{interval_witness, IdealKind, IdealSpec, IntervalWitness};
use crate::pair::{witness_pair, WitnessPair};
use crate::rng::{purpose, stream};
use crate::scalar::Scalar;
use crate::selection::{PermPrefix, Selection, SubseqPrefix};
use crate::sequence::PointSeq;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockPlan<F> {
    pub witness: IntervalWitness,
    pub pair: WitnessPair<F>,
    /// Index `m` of the target set `A_m`.
    pub m: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AmVerdict {
    /// Least qualifying block index `k`.
    Yes(usize),
    No,
}

/// One round of the extension, with 1-based half-open position ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub m: usize,
    pub k: usize,
    pub pad: (usize, usize),
    pub u_block: (usize, usize),
    pub p_k: usize,
    pub v_block: (usize, usize),
    pub q_k: usize,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "m={} k={} pad=[{},{}) u_block=[{},{}) p_k={} v_block=[{},{}) q_k={}",
            self.m,
            self.k,
            self.pad.0,
            self.pad.1,
            self.u_block.0,
            self.u_block.1,
            self.p_k,
            self.v_block.0,
            self.v_block.1,
            self.q_k
        )
    }
}

/// Output of an iterated construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Construction<S, F> {
    pub selection: S,
    pub trace: Vec<TraceStep>,
    pub pair: WitnessPair<F>,
    pub witness: IntervalWitness,
    /// Largest `m` whose round was completed.
    pub visited_m: usize,
}

impl<S, F> Construction<S, F> {
    pub fn plan(&self, m: usize) -> BlockPlan<F>
    where
        F: Clone,
    {
        BlockPlan { witness: self.witness.clone(), pair: self.pair.clone(), m }
    }

    /// One line per round.
    pub fn trace_text(&self) -> String {
        let mut out = String::new();
        for step in &self.trace {
            writeln!(out, "{step}").unwrap();
        }
        out
    }
}

/// Is `s ∈ A_m`? Errors when no block `k` with `n_k > m` fits inside `s`.
pub fn in_am<F: Scalar>(s: &impl Selection, plan: &BlockPlan<F>, x: &PointSeq<F>) -> Result<AmVerdict> {
    if let Some(&bad) = s.entries().iter().find(|&&e| e > x.len()) {
        return domain(format!("selection entry {bad} beyond sequence horizon {}", x.len()));
    }
    let w = &plan.witness;
    let center = &plan.pair.center;
    let r = plan.pair.radius;
    let two_r = r + r;
    let Some(first) = w.first_above(plan.m) else {
        return domain(format!("witness has no cutpoint above m = {}", plan.m));
    };
    let mut tested = false;
    let mut k = first;
    while let (Some(a), Some(b), Some(c)) = (w.cut(k), w.cut(k + 1), w.cut(k + 2)) {
        if c - 1 > s.len() {
            break;
        }
        tested = true;
        let at = |j: usize| x.distance_to(s.entries()[j - 1], center);
        if (a..b).all(|j| at(j) <= r) && (b..c).all(|j| at(j) >= two_r) {
            return Ok(AmVerdict::Yes(k));
        }
        k += 1;
    }
    if !tested {
        return domain(format!(
            "selection of length {} too short to test any block with n_k > {}",
            s.len(),
            plan.m
        ));
    }
    Ok(AmVerdict::No)
}

struct Blocks {
    k: usize,
    nk: usize,
    nk1: usize,
    nk2: usize,
}

fn blocks_after(w: &IntervalWitness, d: usize) -> Result<Blocks> {
    let k = w
        .first_above(d)
        .ok_or_else(|| Error::Domain(format!("witness has no cutpoint above {d}")))?;
    match (w.cut(k), w.cut(k + 1), w.cut(k + 2)) {
        (Some(nk), Some(nk1), Some(nk2)) => Ok(Blocks { k, nk, nk1, nk2 }),
        _ => domain(format!("witness too short for block k = {k}")),
    }
}

/// Appends `len` consecutive entries of `source`, starting at the first one above the current last entry.
fn copy_block(out: &mut Vec<usize>, source: &[usize], len: usize, name: &str) -> Result<usize> {
    let after = out.last().copied().unwrap_or(0);
    let start = source.partition_point(|&e| e <= after);
    if start + len > source.len() {
        return Err(Error::WitnessExhausted(format!(
            "{name} has {} entries; block needs {len} entries above {after}",
            source.len()
        )));
    }
    out.extend_from_slice(&source[start..start + len]);
    Ok(start + 1)
}

fn extend_traced<F: Scalar>(
    prefix: &SubseqPrefix,
    plan: &BlockPlan<F>,
    x: &PointSeq<F>,
) -> Result<(SubseqPrefix, TraceStep)> {
    let mut s = prefix.entries().to_vec();
    // the proof assumes d >= m; shorter prefixes are padded consecutively first
    let last = s.last().copied().unwrap_or(0);
    let short = plan.m.saturating_sub(s.len());
    s.extend((1..=short).map(|i| last + i));
    let d = s.len();
    let b = blocks_after(&plan.witness, d)?;

    let s_d = s.last().copied().unwrap_or(0);
    s.extend((d + 1..b.nk).map(|i| s_d + i - d));
    if let Some(&over) = s.last().filter(|&&e| e > x.len()) {
        return domain(format!("padding reaches {over}, beyond sequence horizon {}", x.len()));
    }
    let p_k = copy_block(&mut s, plan.pair.u.entries(), b.nk1 - b.nk, "u")?;
    let q_k = copy_block(&mut s, plan.pair.v.entries(), b.nk2 - b.nk1, "v")?;

    let step = TraceStep {
        m: plan.m,
        k: b.k,
        pad: (d + 1, b.nk),
        u_block: (b.nk, b.nk1),
        p_k,
        v_block: (b.nk1, b.nk2),
        q_k,
    };
    Ok((SubseqPrefix::new(s, x.len())?, step))
}

/// One three-step extension into `A_m`.
pub fn extend_prefix<F: Scalar>(
    prefix: &SubseqPrefix,
    plan: &BlockPlan<F>,
    x: &PointSeq<F>,
) -> Result<SubseqPrefix> {
    extend_traced(prefix, plan, x).map(|(s, _)| s)
}

fn witness_for(ideal: &IdealSpec, target_len: usize) -> Result<IntervalWitness> {
    let bits = (usize::BITS - target_len.leading_zeros()) as usize;
    let count = match ideal.kind() {
        IdealKind::Density => (bits + 4).min(usize::BITS as usize - 2),
        _ => target_len + 4,
    };
    interval_witness(ideal, count)
}

fn pair_for<F: Scalar>(x: &PointSeq<F>) -> Result<WitnessPair<F>> {
    witness_pair(x).ok_or_else(|| {
        Error::NotConstructible(
            "no witness pair: the sequence converges, or has no convergent subsequence at this \
             scale (then no subsequence converges and every selection already diverges)"
                .into(),
        )
    })
}

/// Seeded prefix length; short enough that the dyadic rounds start at `k ≤ 2`.
fn seed_len(rng: &mut impl Rng) -> usize {
    rng.random_range(1..=3)
}

/// Iterates [`extend_prefix`] for `m = 1, 2, …` from a seeded random prefix
/// until at least `target_len` entries exist.
pub fn build_divergent_subseq<F: Scalar>(
    x: &PointSeq<F>,
    ideal: &IdealSpec,
    target_len: usize,
    seed: u64,
) -> Result<Construction<SubseqPrefix, F>> {
    let witness = witness_for(ideal, target_len)?;
    let pair = pair_for(x)?;
    let mut rng = stream(seed, purpose::PREFIX, 0);
    let d = seed_len(&mut rng);
    let mut start: Vec<usize> = sample(&mut rng, 8.min(x.len()), d).into_iter().map(|i| i + 1).collect();
    start.sort_unstable();
    let mut s = SubseqPrefix::new(start, x.len())?;

    let mut plan = BlockPlan { witness, pair, m: 0 };
    let mut trace = Vec::new();
    while s.len() < target_len || trace.is_empty() {
        plan.m += 1;
        let (next, step) = extend_traced(&s, &plan, x)?;
        s = next;
        trace.push(step);
    }
    Ok(Construction {
        selection: s,
        trace,
        visited_m: plan.m,
        pair: plan.pair,
        witness: plan.witness,
    })
}

/// Smallest-unused bookkeeping for injective selections.
struct Unused {
    used: Vec<bool>,
    next: usize,
}

impl Unused {
    fn new(horizon: usize) -> Self {
        Unused { used: vec![false; horizon + 1], next: 1 }
    }

    fn take(&mut self, e: usize) {
        self.used[e] = true;
    }

    fn smallest(&mut self) -> Option<usize> {
        while self.next < self.used.len() && self.used[self.next] {
            self.next += 1;
        }
        (self.next < self.used.len()).then(|| {
            self.used[self.next] = true;
            self.next
        })
    }
}

/// Next `len` unused entries of `source` from `cursor` on; returns the 1-based index of the first pick.
fn pick_unused(
    out: &mut Vec<usize>,
    source: &[usize],
    cursor: &mut usize,
    unused: &mut Unused,
    len: usize,
    name: &str,
) -> Result<usize> {
    let mut first = None;
    for _ in 0..len {
        while *cursor < source.len() && unused.used[source[*cursor]] {
            *cursor += 1;
        }
        let Some(&e) = source.get(*cursor) else {
            return Err(Error::WitnessExhausted(format!("{name} ran out of unused indices")));
        };
        first.get_or_insert(*cursor + 1);
        unused.take(e);
        out.push(e);
        *cursor += 1;
    }
    Ok(first.unwrap_or(*cursor + 1))
}

/// Injective variant: pads take the smallest unused integers and block picks skip used indices.
pub fn build_divergent_perm<F: Scalar>(
    x: &PointSeq<F>,
    ideal: &IdealSpec,
    target_len: usize,
    seed: u64,
) -> Result<Construction<PermPrefix, F>> {
    let n = x.len();
    if target_len > n {
        return domain(format!("cannot choose {target_len} distinct indices from a horizon of {n}"));
    }
    let witness = witness_for(ideal, target_len)?;
    let pair = pair_for(x)?;
    let mut rng = stream(seed, purpose::PREFIX, 1);
    let d = seed_len(&mut rng);
    let mut s: Vec<usize> = sample(&mut rng, 8.min(n), d).into_iter().map(|i| i + 1).collect();
    let mut unused = Unused::new(n);
    for &e in &s {
        unused.take(e);
    }
    let (mut u_cur, mut v_cur) = (0, 0);
    let mut trace = Vec::new();
    let mut m = 0;
    while s.len() < target_len || trace.is_empty() {
        m += 1;
        let exhausted = || Error::WitnessExhausted("no unused integers left for padding".into());
        while s.len() < m {
            s.push(unused.smallest().ok_or_else(exhausted)?);
        }
        let d = s.len();
        let b = blocks_after(&witness, d)?;
        for _ in d + 1..b.nk {
            s.push(unused.smallest().ok_or_else(exhausted)?);
        }
        let p_k = pick_unused(&mut s, pair.u.entries(), &mut u_cur, &mut unused, b.nk1 - b.nk, "u")?;
        let q_k = pick_unused(&mut s, pair.v.entries(), &mut v_cur, &mut unused, b.nk2 - b.nk1, "v")?;
        trace.push(TraceStep {
            m,
            k: b.k,
            pad: (d + 1, b.nk),
            u_block: (b.nk, b.nk1),
            p_k,
            v_block: (b.nk1, b.nk2),
            q_k,
        });
    }
    Ok(Construction {
        selection: PermPrefix::new(s, n)?,
        trace,
        visited_m: m,
        pair,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ideal::Horizon;
    use crate::sequence::MetricKind;

    fn alt(n: usize) -> PointSeq<f64> {
        PointSeq::from_fn(MetricKind::RealAbs, Horizon::new(n).unwrap(), |k| {
            if k % 2 == 0 { 1.0 } else { -1.0 }
        })
        .unwrap()
    }

    fn alt_plan(n: usize, m: usize) -> BlockPlan<f64> {
        BlockPlan {
            witness: interval_witness(&IdealSpec::density(), 10).unwrap(),
            pair: WitnessPair {
                u: SubseqPrefix::new((1..=n / 2).map(|k| 2 * k).collect(), n).unwrap(),
                v: SubseqPrefix::new((1..=n / 2).map(|k| 2 * k - 1).collect(), n).unwrap(),
                center: vec![1.0],
                radius: 1.0,
            },
            m,
        }
    }

    #[test]
    fn worked_extension() {
        let x = alt(256);
        let plan = alt_plan(256, 1);
        let prefix = SubseqPrefix::new(vec![3, 7], 256).unwrap();
        let (s, step) = extend_traced(&prefix, &plan, &x).unwrap();
        assert_eq!(s.entries(), &[3, 7, 8, 10, 12, 14, 16, 17, 19, 21, 23, 25, 27, 29, 31]);
        assert_eq!(step.k, 2);
        assert_eq!(step.p_k, 5);
        assert_eq!(step.q_k, 9);
        assert_eq!(in_am(&s, &plan, &x).unwrap(), AmVerdict::Yes(2));
    }

    #[test]
    fn empty_pad_when_prefix_reaches_block() {
        let x = alt(256);
        let plan = alt_plan(256, 1);
        let prefix = SubseqPrefix::new(vec![1, 2, 5], 256).unwrap();
        let (s, step) = extend_traced(&prefix, &plan, &x).unwrap();
        assert_eq!(step.pad, (4, 4));
        assert_eq!(&s.entries()[..4], &[1, 2, 5, 6]);
    }

    #[test]
    fn identity_is_not_in_am() {
        let x = alt(256);
        let plan = alt_plan(256, 1);
        let id = SubseqPrefix::identity(64);
        assert_eq!(in_am(&id, &plan, &x).unwrap(), AmVerdict::No);
    }

    #[test]
    fn short_selection_is_a_domain_error() {
        let x = alt(256);
        let plan = alt_plan(256, 1);
        let s = SubseqPrefix::new(vec![2, 4], 256).unwrap();
        assert!(matches!(in_am(&s, &plan, &x), Err(Error::Domain(_))));
    }

    #[test]
    fn exhausted_witness() {
        let x = alt(24);
        let plan = alt_plan(24, 1);
        let prefix = SubseqPrefix::new(vec![3, 7], 24).unwrap();
        assert!(matches!(extend_prefix(&prefix, &plan, &x), Err(Error::WitnessExhausted(_))));
    }

    #[test]
    fn short_prefix_is_padded_to_m() {
        let x = alt(1024);
        let plan = alt_plan(1024, 3);
        let prefix = SubseqPrefix::new(vec![5], 1024).unwrap();
        let s = extend_prefix(&prefix, &plan, &x).unwrap();
        assert_eq!(&s.entries()[..3], &[5, 6, 7]);
        assert!(matches!(in_am(&s, &plan, &x).unwrap(), AmVerdict::Yes(k) if plan.witness.cut(k).unwrap() > 3));
    }

    #[test]
    fn harmonic_is_not_constructible() {
        let x = PointSeq::from_fn(MetricKind::RealAbs, Horizon::new(4096).unwrap(), |k| 1.0 / k as f64).unwrap();
        assert!(matches!(
            build_divergent_subseq(&x, &IdealSpec::density(), 64, 1),
            Err(Error::NotConstructible(_))
        ));
    }

    #[test]
    fn perm_target_beyond_horizon() {
        assert!(matches!(
            build_divergent_perm(&alt(100), &IdealSpec::density(), 101, 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn constructions_are_seeded() {
        let x = alt(1 << 12);
        let a = build_divergent_subseq(&x, &IdealSpec::density(), 500, 9).unwrap();
        let b = build_divergent_subseq(&x, &IdealSpec::density(), 500, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.selection.len() >= 500);
        let p = build_divergent_perm(&x, &IdealSpec::density(), 500, 9).unwrap();
        assert!(PermPrefix::new(p.selection.entries().to_vec(), x.len()).is_ok());
        assert!(!p.trace_text().is_empty());
    }

    #[test]
    fn fin_construction_uses_unit_blocks() {
        let x = alt(1 << 10);
        let c = build_divergent_subseq(&x, &IdealSpec::fin(), 40, 3).unwrap();
        for m in 1..=c.visited_m {
            assert!(matches!(in_am(&c.selection, &c.plan(m), &x).unwrap(), AmVerdict::Yes(_)));
        }
    }
}
