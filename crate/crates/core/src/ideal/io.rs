//! Text formats for [`IndexSet`].
//!
//! One entry per line, either a decimal natural `n` or a half-open block
//! `start..end` meaning `start, start+1, …, end-1`. Blank lines and lines
//! starting with `#` are ignored, except for an optional `# horizon: N`
//! header. Without a header the horizon is the largest element (at least 2).

use std::fmt::Write as _;

use super::{Horizon, IndexSet};
use crate::error::{Error, Result};

pub fn parse_index_set(text: &str) -> Result<IndexSet> {
    let mut horizon = None;
    let mut elements = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(h) = comment.trim().strip_prefix("horizon:") {
                horizon = Some(parse_nat(h.trim(), lineno)?);
            }
            continue;
        }
        if let Some((lo, hi)) = line.split_once("..") {
            let lo = parse_nat(lo.trim(), lineno)?;
            let hi = parse_nat(hi.trim(), lineno)?;
            if hi <= lo {
                return Err(Error::Parse(format!("line {}: empty block {line}", lineno + 1)));
            }
            elements.extend(lo..hi);
        } else {
            elements.push(parse_nat(line, lineno)?);
        }
    }
    if elements.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parse("entries must be strictly increasing".into()));
    }
    let n = match horizon {
        Some(n) => n,
        None => elements.last().copied().unwrap_or(2).max(2),
    };
    IndexSet::new(elements, Horizon::new(n)?)
}

fn parse_nat(s: &str, lineno: usize) -> Result<usize> {
    s.parse::<usize>()
        .map_err(|e| Error::Parse(format!("line {}: '{s}': {e}", lineno + 1)))
}

/// Header plus one decimal per line.
pub fn write_index_set_lines(a: &IndexSet) -> String {
    let mut out = format!("# horizon: {}\n", a.horizon());
    for e in a.elements() {
        writeln!(out, "{e}").unwrap();
    }
    out
}

/// Header plus maximal runs; singletons are written as plain decimals.
pub fn write_index_set_blocks(a: &IndexSet) -> String {
    let mut out = format!("# horizon: {}\n", a.horizon());
    let els = a.elements();
    let mut i = 0;
    while i < els.len() {
        let start = els[i];
        let mut j = i;
        while j + 1 < els.len() && els[j + 1] == els[j] + 1 {
            j += 1;
        }
        if j == i {
            writeln!(out, "{start}").unwrap();
        } else {
            writeln!(out, "{start}..{}", els[j] + 1).unwrap();
        }
        i = j + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_mixed_lines() {
        let a = parse_index_set("# horizon: 20\n1\n3..6\n\n# note\n10\n").unwrap();
        assert_eq!(a.elements(), &[1, 3, 4, 5, 10]);
        assert_eq!(a.horizon().get(), 20);
    }

    #[test]
    fn default_horizon_is_max_element() {
        let a = parse_index_set("4\n7\n").unwrap();
        assert_eq!(a.horizon().get(), 7);
        assert_eq!(parse_index_set("").unwrap().horizon().get(), 2);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_index_set("x\n").is_err());
        assert!(parse_index_set("5..5\n").is_err());
        assert!(parse_index_set("5\n3\n").is_err());
        assert!(parse_index_set("# horizon: 3\n5\n").is_err());
    }

    #[test]
    fn block_writer_compresses_runs() {
        let h = Horizon::new(30).unwrap();
        let a = IndexSet::new(vec![1, 2, 3, 7, 9, 10], h).unwrap();
        assert_eq!(write_index_set_blocks(&a), "# horizon: 30\n1..4\n7\n9..11\n");
    }

    proptest! {
        #[test]
        fn both_formats_round_trip(bits in proptest::collection::vec(any::<bool>(), 2..300)) {
            let h = Horizon::new(bits.len()).unwrap();
            let a = IndexSet::from_predicate(h, |n| bits[n - 1]);
            prop_assert_eq!(parse_index_set(&write_index_set_lines(&a)).unwrap(), a.clone());
            prop_assert_eq!(parse_index_set(&write_index_set_blocks(&a)).unwrap(), a);
        }
    }
}
