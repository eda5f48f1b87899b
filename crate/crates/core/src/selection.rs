//! Truncated selection spaces.
//!
//! * [`SubseqPrefix`]: the first entries `s(1) < s(2) < …` of an increasing
//!   selection `s ∈ S`.
//! * [`CoinVector`]: the first `N` coordinates of a 0-1 sequence `t ∈ T`.
//! * [`PermPrefix`]: the first entries of a rearrangement `p ∈ P`.
//!
//! [`subseq_to_coins`] and [`coins_to_subseq`] are the natural bijection
//! `h : S → T` and its inverse, restricted to `[1, N]`. [`sample_lambda`]
//! draws from the fair-coin product measure transported to `S`;
//! [`sample_perm`] draws a uniform permutation of `[1, N]` (there is no
//! canonical measure on `P`, so this is a modelling choice that reports flag).

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::RngCore;

use crate::error::{domain, Error, Result};
use crate::rng::{purpose, stream};

/// Common view of a finite selection: a 1-based map `i ↦ entry(i)` into `[1, source_horizon]`.
pub trait Selection {
    fn entries(&self) -> &[usize];

    fn source_horizon(&self) -> usize;

    fn len(&self) -> usize {
        self.entries().len()
    }

    fn is_empty(&self) -> bool {
        self.entries().is_empty()
    }

    /// `s(i)` for 1-based `i`.
    fn entry(&self, i: usize) -> Option<usize> {
        i.checked_sub(1).and_then(|i| self.entries().get(i).copied())
    }
}

/// Prefix of a strictly increasing selection.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubseqPrefix {
    entries: Vec<usize>,
    source_horizon: usize,
}

impl SubseqPrefix {
    pub fn new(entries: Vec<usize>, source_horizon: usize) -> Result<Self> {
        if entries.first() == Some(&0) {
            return domain("selection entries start at 1");
        }
        if let Some(w) = entries.windows(2).find(|w| w[0] >= w[1]) {
            return domain(format!("selection not strictly increasing: {} then {}", w[0], w[1]));
        }
        if let Some(&last) = entries.last() {
            if last > source_horizon {
                return domain(format!("entry {last} exceeds source horizon {source_horizon}"));
            }
        }
        Ok(SubseqPrefix { entries, source_horizon })
    }

    pub(crate) fn from_vec_unchecked(entries: Vec<usize>, source_horizon: usize) -> Self {
        debug_assert!(SubseqPrefix::new(entries.clone(), source_horizon).is_ok());
        SubseqPrefix { entries, source_horizon }
    }

    /// `s(n) = n` for `n ≤ len`.
    pub fn identity(len: usize) -> Self {
        SubseqPrefix { entries: (1..=len).collect(), source_horizon: len }
    }

    /// `(s ∘ t)(n) = s(t(n))`.
    pub fn compose(&self, inner: &SubseqPrefix) -> Result<SubseqPrefix> {
        let entries = compose_entries(self, inner)?;
        Ok(SubseqPrefix { entries, source_horizon: self.source_horizon })
    }

    pub fn into_entries(self) -> Vec<usize> {
        self.entries
    }
}

impl Selection for SubseqPrefix {
    fn entries(&self) -> &[usize] {
        &self.entries
    }
    fn source_horizon(&self) -> usize {
        self.source_horizon
    }
}

/// Prefix of a rearrangement: injective, not necessarily increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PermPrefix {
    entries: Vec<usize>,
    source_horizon: usize,
}

impl PermPrefix {
    pub fn new(entries: Vec<usize>, source_horizon: usize) -> Result<Self> {
        let mut seen = vec![false; source_horizon + 1];
        for &e in &entries {
            if e == 0 || e > source_horizon {
                return domain(format!("entry {e} outside [1, {source_horizon}]"));
            }
            if std::mem::replace(&mut seen[e], true) {
                return domain(format!("entry {e} repeated; rearrangements are injective"));
            }
        }
        Ok(PermPrefix { entries, source_horizon })
    }

    /// True when the entries are exactly `{1, …, source_horizon}`.
    pub fn is_complete(&self) -> bool {
        self.entries.len() == self.source_horizon
    }

    pub fn compose(&self, inner: &SubseqPrefix) -> Result<PermPrefix> {
        let entries = compose_entries(self, inner)?;
        Ok(PermPrefix { entries, source_horizon: self.source_horizon })
    }
}

impl Selection for PermPrefix {
    fn entries(&self) -> &[usize] {
        &self.entries
    }
    fn source_horizon(&self) -> usize {
        self.source_horizon
    }
}

fn compose_entries(outer: &impl Selection, inner: &SubseqPrefix) -> Result<Vec<usize>> {
    inner
        .entries()
        .iter()
        .map(|&i| {
            outer.entry(i).ok_or_else(|| {
                Error::Domain(format!("inner index {i} beyond outer selection length {}", outer.len()))
            })
        })
        .collect()
}

/// First `N` coordinates of a 0-1 sequence, bit-packed (bit `j` is bit `(j-1) % 64` of word `(j-1) / 64`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoinVector {
    words: Vec<u64>,
    len: usize,
}

impl CoinVector {
    pub fn zeros(len: usize) -> Self {
        CoinVector { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = CoinVector::zeros(bits.len());
        for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
            v.words[i / 64] |= 1 << (i % 64);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit `j`, 1-based.
    pub fn bit(&self, j: usize) -> bool {
        assert!(j >= 1 && j <= self.len, "bit {j} outside [1, {}]", self.len);
        self.words[(j - 1) / 64] >> ((j - 1) % 64) & 1 == 1
    }

    pub fn set(&mut self, j: usize, value: bool) {
        assert!(j >= 1 && j <= self.len, "bit {j} outside [1, {}]", self.len);
        let (w, b) = ((j - 1) / 64, (j - 1) % 64);
        if value {
            self.words[w] |= 1 << b;
        } else {
            self.words[w] &= !(1 << b);
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn to_bits(&self) -> Vec<bool> {
        (1..=self.len).map(|j| self.bit(j)).collect()
    }

    /// 1-based positions of the one bits, increasing.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                (w != 0).then(|| {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    wi * 64 + b + 1
                })
            })
        })
    }

    /// `"<len>:<hex>"`; bit 1 is the most significant bit of the first hex digit.
    pub fn to_hex(&self) -> String {
        let mut out = format!("{}:", self.len);
        for chunk in 0..self.len.div_ceil(4) {
            let mut nibble = 0u8;
            for k in 0..4 {
                let j = chunk * 4 + k + 1;
                if j <= self.len && self.bit(j) {
                    nibble |= 8 >> k;
                }
            }
            write!(out, "{nibble:x}").unwrap();
        }
        out
    }

    pub fn from_hex(text: &str) -> Result<Self> {
        let (len, hex) = text
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Parse("coin vector must look like <len>:<hex>".into()))?;
        let len: usize = len.parse().map_err(|e| Error::Parse(format!("length '{len}': {e}")))?;
        if hex.len() != len.div_ceil(4) {
            return Err(Error::Parse(format!(
                "declared length {len} needs {} hex digits, found {}",
                len.div_ceil(4),
                hex.len()
            )));
        }
        let mut v = CoinVector::zeros(len);
        for (chunk, c) in hex.chars().enumerate() {
            let nibble = c.to_digit(16).ok_or_else(|| Error::Parse(format!("bad hex digit '{c}'")))?;
            for k in 0..4 {
                if nibble & (8 >> k) != 0 {
                    let j = chunk * 4 + k + 1;
                    if j > len {
                        return Err(Error::Parse("nonzero padding bits".into()));
                    }
                    v.set(j, true);
                }
            }
        }
        Ok(v)
    }
}

/// `h`: bit `j` set iff `j` is an entry of `s`.
pub fn subseq_to_coins(s: &SubseqPrefix, n: usize) -> Result<CoinVector> {
    if let Some(&last) = s.entries().last() {
        if last > n {
            return domain(format!("entry {last} exceeds coin vector length {n}"));
        }
    }
    let mut t = CoinVector::zeros(n);
    for &e in s.entries() {
        t.words[(e - 1) / 64] |= 1 << ((e - 1) % 64);
    }
    Ok(t)
}

/// `h⁻¹`: positions of the one bits.
pub fn coins_to_subseq(t: &CoinVector) -> Result<SubseqPrefix> {
    if t.count_ones() == 0 {
        return domain("all-zero coin vector is not in T");
    }
    Ok(SubseqPrefix { entries: t.ones().collect(), source_horizon: t.len() })
}

/// Fair coins for `[1, n]` from the `(seed, trial)` stream; the all-zero draw is redrawn.
pub fn sample_coins(seed: u64, trial: u64, n: usize) -> CoinVector {
    assert!(n >= 1, "cannot sample an empty coin vector");
    let mut rng = stream(seed, purpose::LAMBDA, trial);
    let mut v = CoinVector::zeros(n);
    let tail_mask = match n % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    };
    loop {
        for w in v.words.iter_mut() {
            *w = rng.next_u64();
        }
        *v.words.last_mut().unwrap() &= tail_mask;
        if v.words.iter().any(|&w| w != 0) {
            return v;
        }
    }
}

/// A λ-random selection truncated to `[1, n]`.
pub fn sample_lambda(seed: u64, trial: u64, n: usize) -> SubseqPrefix {
    coins_to_subseq(&sample_coins(seed, trial, n)).expect("sample_coins never returns all zeros")
}

/// Uniform permutation of `[1, n]` (Fisher-Yates on the `(seed, trial)` stream).
pub fn sample_perm(seed: u64, trial: u64, n: usize) -> PermPrefix {
    let mut rng = stream(seed, purpose::PERM, trial);
    let mut entries: Vec<usize> = (1..=n).collect();
    entries.shuffle(&mut rng);
    PermPrefix { entries, source_horizon: n }
}

/// Header `# horizon: N` plus one decimal entry per line.
pub fn write_selection(s: &impl Selection) -> String {
    let mut out = format!("# horizon: {}\n", s.source_horizon());
    for e in s.entries() {
        writeln!(out, "{e}").unwrap();
    }
    out
}

fn parse_entries(text: &str) -> Result<(Vec<usize>, Option<usize>)> {
    let mut horizon = None;
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            if let Some(h) = c.trim().strip_prefix("horizon:") {
                horizon = Some(h.trim().parse().map_err(|e| Error::Parse(format!("horizon: {e}")))?);
            }
            continue;
        }
        entries.push(
            line.parse()
                .map_err(|e| Error::Parse(format!("line {}: '{line}': {e}", lineno + 1)))?,
        );
    }
    Ok((entries, horizon))
}

pub fn parse_subseq(text: &str) -> Result<SubseqPrefix> {
    let (entries, horizon) = parse_entries(text)?;
    let h = horizon.unwrap_or_else(|| entries.last().copied().unwrap_or(0));
    SubseqPrefix::new(entries, h)
}

pub fn parse_perm(text: &str) -> Result<PermPrefix> {
    let (entries, horizon) = parse_entries(text)?;
    let h = horizon.unwrap_or_else(|| entries.iter().copied().max().unwrap_or(0));
    PermPrefix::new(entries, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn h_examples() {
        let s = SubseqPrefix::new(vec![2, 3], 4).unwrap();
        assert_eq!(subseq_to_coins(&s, 4).unwrap().to_bits(), vec![false, true, true, false]);
        let s = SubseqPrefix::new(vec![1, 3, 5], 5).unwrap();
        assert_eq!(subseq_to_coins(&s, 5).unwrap().to_bits(), vec![true, false, true, false, true]);
        let id = SubseqPrefix::identity(9);
        assert_eq!(subseq_to_coins(&id, 9).unwrap().count_ones(), 9);
        assert!(subseq_to_coins(&id, 8).is_err());
    }

    #[test]
    fn h_inverse_examples() {
        let t = CoinVector::from_bits(&[true, false, true, false, true]);
        assert_eq!(coins_to_subseq(&t).unwrap().entries(), &[1, 3, 5]);
        let t = CoinVector::from_bits(&[true; 4]);
        assert_eq!(coins_to_subseq(&t).unwrap().entries(), &[1, 2, 3, 4]);
        assert!(coins_to_subseq(&CoinVector::zeros(4)).is_err());
    }

    #[test]
    fn selection_validation() {
        assert!(SubseqPrefix::new(vec![2, 2], 5).is_err());
        assert!(SubseqPrefix::new(vec![0, 2], 5).is_err());
        assert!(SubseqPrefix::new(vec![2, 6], 5).is_err());
        assert!(PermPrefix::new(vec![3, 1, 3], 5).is_err());
        assert!(PermPrefix::new(vec![3, 1, 2], 3).unwrap().is_complete());
    }

    #[test]
    fn lambda_is_deterministic_and_balanced() {
        let n = 100_000;
        let a = sample_lambda(11, 5, n);
        assert_eq!(a, sample_lambda(11, 5, n));
        assert_ne!(a, sample_lambda(11, 6, n));
        let frac = a.len() as f64 / n as f64;
        assert!((0.495..=0.505).contains(&frac), "fraction {frac}");
    }

    #[test]
    fn tiny_lambda_never_empty() {
        for trial in 0..200 {
            assert!(!sample_lambda(3, trial, 1).is_empty());
        }
    }

    #[test]
    fn perm_small_cases() {
        assert_eq!(sample_perm(1, 1, 1).entries(), &[1]);
        let p = sample_perm(9, 2, 1000);
        assert!(PermPrefix::new(p.entries().to_vec(), 1000).is_ok());
    }

    #[test]
    fn perm_of_three_is_uniform() {
        let mut counts = std::collections::HashMap::new();
        for trial in 0..6000 {
            *counts.entry(sample_perm(2024, trial, 3).entries().to_vec()).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 6);
        for (p, c) in counts {
            assert!((880..=1120).contains(&c), "{p:?} appeared {c} times");
        }
    }

    #[test]
    fn lambda_marginals() {
        let m = 10_000u64;
        let n = 100;
        let mut freq = vec![0usize; n];
        for trial in 0..m {
            for j in sample_lambda(77, trial, n).entries() {
                freq[j - 1] += 1;
            }
        }
        // four standard errors: a family-wise bound over 100 simultaneous checks
        let half_width = 4.0 / (2.0 * (m as f64).sqrt());
        for (j, f) in freq.iter().enumerate() {
            let p = *f as f64 / m as f64;
            assert!((p - 0.5).abs() <= half_width, "bit {} frequency {p}", j + 1);
        }
    }

    #[test]
    fn hex_examples() {
        let t = CoinVector::from_bits(&[true, false, true, false, true]);
        assert_eq!(t.to_hex(), "5:a8");
        assert_eq!(CoinVector::from_hex("5:a8").unwrap(), t);
        assert!(CoinVector::from_hex("5:a9").is_err());
        assert!(CoinVector::from_hex("5:a").is_err());
        assert!(CoinVector::from_hex("a8").is_err());
    }

    #[test]
    fn selection_text_round_trip() {
        let s = SubseqPrefix::new(vec![2, 5, 9], 12).unwrap();
        assert_eq!(parse_subseq(&write_selection(&s)).unwrap(), s);
        let p = PermPrefix::new(vec![4, 1, 7], 9).unwrap();
        assert_eq!(parse_perm(&write_selection(&p)).unwrap(), p);
        assert!(parse_subseq("3\n2\n").is_err());
        assert!(parse_perm("3\n3\n").is_err());
    }

    #[test]
    fn compose() {
        let s = SubseqPrefix::new(vec![2, 4, 6, 8], 8).unwrap();
        let t = SubseqPrefix::new(vec![1, 3], 4).unwrap();
        assert_eq!(s.compose(&t).unwrap().entries(), &[2, 6]);
        let t = SubseqPrefix::new(vec![5], 5).unwrap();
        assert!(s.compose(&t).is_err());
    }

    proptest! {
        #[test]
        fn hex_round_trip(bits in proptest::collection::vec(any::<bool>(), 1..200)) {
            let t = CoinVector::from_bits(&bits);
            prop_assert_eq!(CoinVector::from_hex(&t.to_hex()).unwrap(), t);
        }

        #[test]
        fn h_round_trip_random(bits in proptest::collection::vec(any::<bool>(), 1..500)) {
            let t = CoinVector::from_bits(&bits);
            prop_assume!(t.count_ones() > 0);
            let s = coins_to_subseq(&t).unwrap();
            prop_assert_eq!(subseq_to_coins(&s, bits.len()).unwrap(), t);
        }
    }
}
