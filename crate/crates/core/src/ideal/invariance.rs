//! Images of index sets under selections and sampled `I`-invariance.
//!
//! `f : ℕ → ℕ` is `I`-invariant when `A ∈ I ⇔ f[A] ∈ I` for every `A`. At
//! finite scale only a fixed battery of test sets can be checked; the battery
//! returned by [`standard_battery`] is part of the public contract and its
//! random members are drawn from the fixed [`BATTERY_SEED`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Horizon, IdealSpec, IndexSet, Membership};
use crate::error::{Error, Result};
use crate::rng::{purpose, stream};
use crate::selection::{Selection, SubseqPrefix};

pub const BATTERY_SEED: u64 = 0x6261_7474_6572_7931;

/// `{map(n) : n ∈ A}` on the map's source horizon.
pub fn image_set(map: &impl Selection, a: &IndexSet) -> Result<IndexSet> {
    let mut image = Vec::with_capacity(a.len());
    for &n in a.elements() {
        let m = map.entry(n).ok_or_else(|| {
            Error::Domain(format!("element {n} outside the map's defined prefix of length {}", map.len()))
        })?;
        image.push(m);
    }
    image.sort_unstable();
    image.dedup();
    let h = Horizon::new(map.source_horizon().max(2))?;
    IndexSet::new(image, h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InvarianceVerdict {
    Invariant,
    NotInvariant,
    Undecided,
}

/// Compares `membership(A)` with `membership(map[A])` over `families`.
///
/// `NotInvariant` as soon as a decided pair disagrees; `Invariant` when every
/// family yields a decided, agreeing pair or is skipped because one side is
/// undecided, provided at least one pair was decided; `Undecided` otherwise.
pub fn is_invariant_sample(
    map: &SubseqPrefix,
    ideal: &IdealSpec,
    families: &[IndexSet],
) -> Result<InvarianceVerdict> {
    if families.is_empty() {
        return Err(Error::Config("invariance check needs at least one test family".into()));
    }
    let mut decided = 0;
    for a in families {
        let before = ideal.membership(a).membership;
        let after = ideal.membership(&image_set(map, a)?).membership;
        match (before, after) {
            (Membership::Undecided, _) | (_, Membership::Undecided) => {}
            (x, y) if x == y => decided += 1,
            _ => return Ok(InvarianceVerdict::NotInvariant),
        }
    }
    Ok(if decided > 0 { InvarianceVerdict::Invariant } else { InvarianceVerdict::Undecided })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedSet {
    pub name: &'static str,
    pub set: IndexSet,
}

/// Evens, odds, squares, `⌊k ln k⌋`, `⋃[4^k, 2·4^k)`, and Bernoulli(0.01), Bernoulli(0.5).
pub fn standard_battery(horizon: Horizon) -> Vec<NamedSet> {
    let n = horizon.get();
    let squares = {
        let els = (1..).map(|k: usize| k * k).take_while(|&q| q <= n).collect();
        IndexSet::from_sorted_unchecked(els, horizon)
    };
    let klogk = {
        let els = (2..)
            .map(|k: usize| (k as f64 * (k as f64).ln()).floor() as usize)
            .take_while(|&v| v <= n)
            .collect();
        IndexSet::from_sorted_unchecked(els, horizon)
    };
    let blocks = IndexSet::from_predicate(horizon, |m| {
        // m ∈ [4^k, 2·4^k) iff floor(log2 m) is even
        (usize::BITS - 1 - m.leading_zeros()) % 2 == 0
    });
    let bernoulli = |p: f64, trial: u64| {
        let mut rng = stream(BATTERY_SEED, purpose::BATTERY, trial);
        IndexSet::from_predicate(horizon, |_| rng.random::<f64>() < p)
    };
    vec![
        NamedSet { name: "evens", set: IndexSet::from_predicate(horizon, |m| m % 2 == 0) },
        NamedSet { name: "odds", set: IndexSet::from_predicate(horizon, |m| m % 2 == 1) },
        NamedSet { name: "squares", set: squares },
        NamedSet { name: "k-log-k", set: klogk },
        NamedSet { name: "geometric-blocks", set: blocks },
        NamedSet { name: "bernoulli-0.01", set: bernoulli(0.01, 0) },
        NamedSet { name: "bernoulli-0.5", set: bernoulli(0.5, 1) },
    ]
}
