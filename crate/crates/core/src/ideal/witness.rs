//! Talagrand interval witnesses.
//!
//! An ideal with the Baire property admits cutpoints `n_1 < n_2 < …` such
//! that no member contains infinitely many intervals `[n_i, n_{i+1})`.
//!
//! * Density ideal: `n_i = 2^i`. A set containing `[2^i, 2^{i+1})` has
//!   density at least `1/2` at `2^{i+1} - 1`, so containing infinitely many
//!   forces upper density `≥ 1/2`.
//! * Fin: `n_i = i + 1`. Every interval is nonempty, so containing infinitely
//!   many of them forces an infinite set.

use serde::{Deserialize, Serialize};

use super::{IdealKind, IdealSpec, IndexSet};
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalWitness {
    cutpoints: Vec<usize>,
    rule: String,
}

impl IntervalWitness {
    pub fn new(cutpoints: Vec<usize>, rule: impl Into<String>) -> Result<Self> {
        if cutpoints.windows(2).any(|w| w[0] >= w[1]) {
            return domain("witness cutpoints must be strictly increasing");
        }
        if cutpoints.first().is_some_and(|&c| c < 2) {
            return domain("first witness cutpoint must be at least 2");
        }
        Ok(IntervalWitness { cutpoints, rule: rule.into() })
    }

    pub fn cutpoints(&self) -> &[usize] {
        &self.cutpoints
    }

    pub fn rule(&self) -> &str {
        &self.rule
    }

    /// `n_k` with 1-based `k`.
    pub fn cut(&self, k: usize) -> Option<usize> {
        k.checked_sub(1).and_then(|i| self.cutpoints.get(i).copied())
    }

    /// Number of intervals `[n_i, n_{i+1})` the witness describes.
    pub fn interval_count(&self) -> usize {
        self.cutpoints.len().saturating_sub(1)
    }

    /// Least 1-based `k` with `n_k > bound`.
    pub fn first_above(&self, bound: usize) -> Option<usize> {
        let i = self.cutpoints.partition_point(|&c| c <= bound);
        (i < self.cutpoints.len()).then_some(i + 1)
    }
}

/// The first `count` cutpoints of the witness rule for `ideal`.
pub fn interval_witness(ideal: &IdealSpec, count: usize) -> Result<IntervalWitness> {
    match ideal.kind() {
        IdealKind::Density => {
            if count >= usize::BITS as usize - 1 {
                return domain(format!("{count} dyadic cutpoints overflow usize"));
            }
            let cuts = (1..=count).map(|i| 1usize << i).collect();
            IntervalWitness::new(cuts, "n_i = 2^i")
        }
        IdealKind::Fin => IntervalWitness::new((1..=count).map(|i| i + 1).collect(), "n_i = i + 1"),
        IdealKind::Custom(c) => Err(Error::Unsupported(format!(
            "no interval witness construction for custom ideal '{}'",
            c.name
        ))),
    }
}

/// Number of witness intervals `[n_i, n_{i+1})` wholly contained in `a`.
///
/// Intervals reaching past the horizon of `a` are never contained.
pub fn check_witness(witness: &IntervalWitness, a: &IndexSet) -> usize {
    witness
        .cutpoints
        .windows(2)
        .filter(|w| {
            let (lo, hi) = (w[0], w[1]);
            hi - 1 <= a.horizon().get() && a.count_upto(hi - 1) - a.count_upto(lo - 1) == hi - lo
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ideal::Horizon;

    #[test]
    fn dyadic_and_fin_rules() {
        let w = interval_witness(&IdealSpec::density(), 5).unwrap();
        assert_eq!(w.cutpoints(), &[2, 4, 8, 16, 32]);
        let w = interval_witness(&IdealSpec::fin(), 3).unwrap();
        assert_eq!(w.cutpoints(), &[2, 3, 4]);
    }

    #[test]
    fn custom_is_unsupported() {
        let ideal = IdealSpec::custom("c", |_| crate::ideal::Membership::Undecided);
        assert!(matches!(interval_witness(&ideal, 4), Err(Error::Unsupported(_))));
    }

    #[test]
    fn containment_counts() {
        let h = Horizon::new(16).unwrap();
        let w = IntervalWitness::new(vec![2, 4, 8, 16], "dyadic").unwrap();
        let a = IndexSet::interval(2, 4, h).union(&IndexSet::interval(8, 16, h));
        assert_eq!(check_witness(&w, &a), 2);
        let squares = IndexSet::new(vec![1, 4, 9, 16], h).unwrap();
        assert_eq!(check_witness(&w, &squares), 0);
        let all = IndexSet::interval(1, 17, h);
        assert_eq!(check_witness(&w, &all), 3);
    }

    #[test]
    fn first_above() {
        let w = IntervalWitness::new(vec![2, 4, 8, 16], "dyadic").unwrap();
        assert_eq!(w.first_above(1), Some(1));
        assert_eq!(w.first_above(2), Some(2));
        assert_eq!(w.first_above(7), Some(3));
        assert_eq!(w.first_above(16), None);
        assert_eq!(w.cut(2), Some(4));
        assert_eq!(w.cut(0), None);
    }

    #[test]
    fn invalid_cutpoints() {
        assert!(IntervalWitness::new(vec![1, 4], "x").is_err());
        assert!(IntervalWitness::new(vec![4, 4], "x").is_err());
    }

    #[test]
    fn density_witness_defeats_small_sets() {
        // a density-small set never swallows a whole dyadic block past the first few
        let h = Horizon::new(1 << 12).unwrap();
        let w = interval_witness(&IdealSpec::density(), 12).unwrap();
        let sparse = IndexSet::from_predicate(h, |n| n % 5 == 0 || (n > 2 && n.is_power_of_two()));
        assert_eq!(check_witness(&w, &sparse), 0);
    }
}
