//! Ideals on ℕ at finite truncation.
//!
//! A subset `A ⊂ ℕ` is represented by an [`IndexSet`]: its elements up to a
//! [`Horizon`] `N`. Membership `A ∈ I` is an infinitary property, so
//! [`IdealSpec::membership`] answers with a trilean [`Membership`]:
//!
//! * **Density** (`I_d`, sets of asymptotic density zero): densities
//!   `|A ∩ [1,n]| / n` are evaluated at geometric checkpoints inside the tail
//!   window `[⌈wN⌉, N]` (the window start, every power of two strictly inside,
//!   and `N`). `Member` when every density is `≤ τ_in` and the profile is
//!   non-increasing, `NonMember` when every density is `≥ τ_out`, `Undecided`
//!   otherwise.
//! * **Fin** (finite sets): `Member` when the guard tail `[⌈gN⌉, N]` is empty
//!   and the set is small (`|A| ≤ τ_in·⌈wN⌉`), `NonMember` when the guard tail
//!   holds at least two elements, `Undecided` otherwise. The size bound keeps
//!   `Fin ⊆ I_d` visible at finite scale: a Fin member is always a density
//!   member under the same parameters (for `g ≤ w`).
//! * **Custom**: a caller-supplied decision rule.
//!
//! Both built-in ideals are admissible by construction.

mod invariance;
mod io;
mod witness;

use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub use invariance::{
    image_set, is_invariant_sample, standard_battery, InvarianceVerdict, NamedSet, BATTERY_SEED,
};
pub use io::{parse_index_set, write_index_set_blocks, write_index_set_lines};
pub use witness::{check_witness, interval_witness, IntervalWitness};

/// Truncation bound `N` standing in for ℕ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Horizon(usize);

impl Horizon {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::Config(format!("horizon must be at least 2, got {n_max}")));
        }
        Ok(Horizon(n_max))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for Horizon {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        Horizon::new(n)
    }
}

impl From<Horizon> for usize {
    fn from(h: Horizon) -> usize {
        h.0
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A finite set of naturals in `[1, horizon]`, stored strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexSet {
    elements: Vec<usize>,
    horizon: Horizon,
}

impl IndexSet {
    pub fn new(elements: Vec<usize>, horizon: Horizon) -> Result<Self> {
        if let Some(w) = elements.windows(2).find(|w| w[0] >= w[1]) {
            return domain(format!("elements not strictly increasing at {} >= {}", w[0], w[1]));
        }
        if let Some(&first) = elements.first() {
            if first == 0 {
                return domain("0 is not a natural number here; indices start at 1");
            }
        }
        if let Some(&last) = elements.last() {
            if last > horizon.get() {
                return domain(format!("element {last} exceeds horizon {horizon}"));
            }
        }
        Ok(IndexSet { elements, horizon })
    }

    /// Sorts and deduplicates before validating.
    pub fn from_unsorted(mut elements: Vec<usize>, horizon: Horizon) -> Result<Self> {
        elements.sort_unstable();
        elements.dedup();
        IndexSet::new(elements, horizon)
    }

    pub fn empty(horizon: Horizon) -> Self {
        IndexSet { elements: Vec::new(), horizon }
    }

    /// `{n ∈ [1, N] : keep(n)}`.
    pub fn from_predicate(horizon: Horizon, mut keep: impl FnMut(usize) -> bool) -> Self {
        let elements = (1..=horizon.get()).filter(|&n| keep(n)).collect();
        IndexSet { elements, horizon }
    }

    /// The interval `[start, end)` clipped to the horizon.
    pub fn interval(start: usize, end: usize, horizon: Horizon) -> Self {
        let end = end.min(horizon.get() + 1);
        let start = start.max(1);
        IndexSet { elements: (start..end.max(start)).collect(), horizon }
    }

    pub(crate) fn from_sorted_unchecked(elements: Vec<usize>, horizon: Horizon) -> Self {
        debug_assert!(elements.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(elements.last().map_or(true, |&l| l <= horizon.get()));
        IndexSet { elements, horizon }
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, n: usize) -> bool {
        self.elements.binary_search(&n).is_ok()
    }

    /// `|A ∩ [1, n]|`.
    pub fn count_upto(&self, n: usize) -> usize {
        self.elements.partition_point(|&e| e <= n)
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.elements.iter().all(|&e| other.contains(e))
    }

    /// Union on the larger of the two horizons.
    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.elements, &other.elements);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    x
                }
                (Some(_), Some(&y)) => {
                    j += 1;
                    y
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (None, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        IndexSet { elements: out, horizon: self.horizon.max(other.horizon) }
    }

    /// Same elements restricted to a smaller (or re-declared) horizon.
    pub fn truncate(&self, horizon: Horizon) -> IndexSet {
        let keep = self.count_upto(horizon.get());
        IndexSet { elements: self.elements[..keep].to_vec(), horizon }
    }
}

/// Count of `A ∩ [1, n]` at a checkpoint `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub n: usize,
    pub count: usize,
}

impl DensityPoint {
    /// Exact density `count / n`.
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.count as u64, self.n as u64)
    }

    pub fn value(&self) -> f64 {
        self.count as f64 / self.n as f64
    }
}

/// Exact densities `|A ∩ [1,n]| / n` at each checkpoint.
pub fn density_profile(a: &IndexSet, checkpoints: &[usize]) -> Result<Vec<DensityPoint>> {
    let horizon = a.horizon().get();
    let mut prev = 0;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &n in checkpoints {
        if n == 0 || n > horizon {
            return domain(format!("checkpoint {n} outside [1, {horizon}]"));
        }
        if n <= prev {
            return domain("checkpoints must be strictly increasing");
        }
        prev = n;
        out.push(DensityPoint { n, count: a.count_upto(n) });
    }
    Ok(out)
}

/// Trilean answer to `A ∈ I` at finite scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Membership {
    Member,
    NonMember,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub membership: Membership,
    /// Counts at the checkpoints the decision looked at.
    pub evidence: Vec<DensityPoint>,
}

impl MembershipVerdict {
    pub fn is_member(&self) -> bool {
        self.membership == Membership::Member
    }
}

/// Thresholds of the finite membership rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionParams {
    /// Tail window fraction `w`: densities are read on `[⌈wN⌉, N]`.
    pub window: f64,
    /// Member threshold `τ_in`.
    pub tau_in: f64,
    /// Non-member threshold `τ_out`.
    pub tau_out: f64,
    /// Fin guard fraction `g`: the tail `[⌈gN⌉, N]` must be empty for a Fin member.
    pub guard: f64,
}

impl Default for DecisionParams {
    fn default() -> Self {
        DecisionParams { window: 0.5, tau_in: 0.05, tau_out: 0.2, guard: 0.25 }
    }
}

impl DecisionParams {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !(open_unit(self.tau_in) && open_unit(self.tau_out) && self.tau_in < self.tau_out) {
            return Err(Error::Config(format!(
                "need 0 < tau_in < tau_out < 1, got tau_in={} tau_out={}",
                self.tau_in, self.tau_out
            )));
        }
        if !open_unit(self.window) {
            return Err(Error::Config(format!("window fraction {} not in (0,1)", self.window)));
        }
        if !open_unit(self.guard) {
            return Err(Error::Config(format!("guard fraction {} not in (0,1)", self.guard)));
        }
        Ok(())
    }

    fn window_start(&self, n: usize) -> usize {
        ((self.window * n as f64).ceil() as usize).clamp(1, n)
    }

    fn guard_start(&self, n: usize) -> usize {
        ((self.guard * n as f64).ceil() as usize).clamp(1, n)
    }

    /// Window start, the powers of two strictly inside the window, and `n`.
    ///
    /// A power of two within 10% of either end is skipped: two nearly equal
    /// checkpoints would let a single element decide the monotonicity test.
    pub fn density_checkpoints(&self, n: usize) -> Vec<usize> {
        let start = self.window_start(n);
        let mut out = vec![start];
        let mut p = start.next_power_of_two();
        if p == start {
            p *= 2;
        }
        while p < n {
            if 10 * p >= 11 * start && 10 * n >= 11 * p {
                out.push(p);
            }
            p *= 2;
        }
        if *out.last().unwrap() != n {
            out.push(n);
        }
        out
    }

    /// Every position at which the Fin or Density rules read a count.
    pub(crate) fn probe_positions(&self, n: usize) -> Vec<usize> {
        let mut out = self.density_checkpoints(n);
        let g = self.guard_start(n);
        if g > 1 {
            out.push(g - 1);
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Caller-supplied decision rule for a custom ideal.
pub type OracleRule = dyn Fn(&IndexSet) -> Membership + Send + Sync;

#[derive(Clone)]
pub struct CustomOracle {
    pub name: String,
    pub rule: Arc<OracleRule>,
}

impl fmt::Debug for CustomOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomOracle").field("name", &self.name).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum IdealKind {
    Fin,
    Density,
    Custom(CustomOracle),
}

/// An ideal on ℕ together with the parameters of its finite membership rule.
#[derive(Debug, Clone)]
pub struct IdealSpec {
    kind: IdealKind,
    params: DecisionParams,
}

impl IdealSpec {
    pub fn fin() -> Self {
        IdealSpec { kind: IdealKind::Fin, params: DecisionParams::default() }
    }

    pub fn density() -> Self {
        IdealSpec { kind: IdealKind::Density, params: DecisionParams::default() }
    }

    pub fn custom(
        name: impl Into<String>,
        rule: impl Fn(&IndexSet) -> Membership + Send + Sync + 'static,
    ) -> Self {
        IdealSpec {
            kind: IdealKind::Custom(CustomOracle { name: name.into(), rule: Arc::new(rule) }),
            params: DecisionParams::default(),
        }
    }

    pub fn with_params(mut self, params: DecisionParams) -> Result<Self> {
        params.validate()?;
        self.params = params;
        Ok(self)
    }

    /// `fin`, `density` (alias `statistical`).
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "fin" => Ok(IdealSpec::fin()),
            "density" | "statistical" | "i_d" => Ok(IdealSpec::density()),
            other => Err(Error::Config(format!("unknown ideal '{other}' (expected fin or density)"))),
        }
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            IdealKind::Fin => "fin",
            IdealKind::Density => "density",
            IdealKind::Custom(c) => &c.name,
        }
    }

    pub fn kind(&self) -> &IdealKind {
        &self.kind
    }

    pub fn params(&self) -> &DecisionParams {
        &self.params
    }

    pub fn is_custom(&self) -> bool {
        matches!(self.kind, IdealKind::Custom(_))
    }

    /// Finite-scale decision of `a ∈ I`.
    pub fn membership(&self, a: &IndexSet) -> MembershipVerdict {
        match &self.kind {
            IdealKind::Custom(oracle) => {
                let n = a.horizon().get();
                MembershipVerdict {
                    membership: (oracle.rule)(a),
                    evidence: vec![DensityPoint { n, count: a.len() }],
                }
            }
            _ => self
                .decide_counts(a.horizon().get(), |n| a.count_upto(n))
                .expect("built-in ideals decide from counts"),
        }
    }

    /// Decision from a counting function `n ↦ |A ∩ [1,n]|`; `None` for custom ideals.
    ///
    /// `count_at` is only queried at [`DecisionParams::probe_positions`].
    pub fn decide_counts(
        &self,
        horizon: usize,
        count_at: impl Fn(usize) -> usize,
    ) -> Option<MembershipVerdict> {
        let p = &self.params;
        match self.kind {
            IdealKind::Density => {
                let evidence: Vec<DensityPoint> = p
                    .density_checkpoints(horizon)
                    .into_iter()
                    .map(|n| DensityPoint { n, count: count_at(n) })
                    .collect();
                let all_small = evidence.iter().all(|d| d.count as f64 <= p.tau_in * d.n as f64);
                let non_increasing = evidence
                    .windows(2)
                    .all(|w| (w[1].count as u128) * (w[0].n as u128) <= (w[0].count as u128) * (w[1].n as u128));
                let all_large = evidence.iter().all(|d| d.count as f64 >= p.tau_out * d.n as f64);
                let membership = if all_small && non_increasing {
                    Membership::Member
                } else if all_large {
                    Membership::NonMember
                } else {
                    Membership::Undecided
                };
                Some(MembershipVerdict { membership, evidence })
            }
            IdealKind::Fin => {
                let g = p.guard_start(horizon);
                let before = if g > 1 { count_at(g - 1) } else { 0 };
                let total = count_at(horizon);
                let tail = total - before;
                let size_bound = p.tau_in * p.window_start(horizon) as f64;
                let membership = if tail == 0 && total as f64 <= size_bound {
                    Membership::Member
                } else if tail >= 2 {
                    Membership::NonMember
                } else {
                    Membership::Undecided
                };
                let mut evidence = Vec::with_capacity(2);
                if g > 1 {
                    evidence.push(DensityPoint { n: g - 1, count: before });
                }
                evidence.push(DensityPoint { n: horizon, count: total });
                Some(MembershipVerdict { membership, evidence })
            }
            IdealKind::Custom(_) => None,
        }
    }
}
