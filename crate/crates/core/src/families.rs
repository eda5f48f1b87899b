//! Built-in sequences, function families on `[0,1]`, domain samplers and a
//! generated test corpus.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ideal::Horizon;
use crate::rng::{purpose, stream};
use crate::scalar::Scalar;
use crate::sequence::{MetricKind, PointSeq};

/// `1/n`.
pub fn harmonic<F: Scalar>(horizon: Horizon) -> PointSeq<F> {
    PointSeq::from_fn(MetricKind::RealAbs, horizon, |n| F::one() / F::of(n as f64)).unwrap()
}

/// `(-1)^n`.
pub fn alternating<F: Scalar>(horizon: Horizon) -> PointSeq<F> {
    PointSeq::from_fn(MetricKind::RealAbs, horizon, |n| if n % 2 == 0 { F::one() } else { -F::one() }).unwrap()
}

/// `1` at perfect squares, `0` elsewhere.
pub fn square_indicator<F: Scalar>(horizon: Horizon) -> PointSeq<F> {
    PointSeq::from_fn(MetricKind::RealAbs, horizon, |n| if is_square(n) { F::one() } else { F::zero() }).unwrap()
}

fn is_square(n: usize) -> bool {
    let r = (n as f64).sqrt() as usize;
    (r.saturating_sub(1)..=r + 1).any(|q| q * q == n)
}

/// Built-in names: `harmonic`, `alternating`, `square-indicator`, or a
/// family evaluated at a point, written `family@x` (for example `sin-pi@0.3`).
pub fn named_sequence<F: Scalar>(name: &str, horizon: Horizon) -> Result<PointSeq<F>> {
    match name {
        "harmonic" => Ok(harmonic(horizon)),
        "alternating" => Ok(alternating(horizon)),
        "square-indicator" => Ok(square_indicator(horizon)),
        other => {
            let Some((family, x)) = other.split_once('@') else {
                return Err(Error::Config(format!(
                    "unknown sequence '{other}'; expected harmonic, alternating, square-indicator or family@x"
                )));
            };
            let x: f64 = x
                .parse()
                .map_err(|e| Error::Config(format!("point '{x}' in '{other}': {e}")))?;
            FunctionFamily::from_name(family)?.sequence_at(x, horizon)
        }
    }
}

/// Values of `f_n(x_j)` on a fixed set of abscissae, read from CSV.
///
/// The header row is `n,x_1,x_2,…`; row `n` holds `f_n` at each `x_j`.
/// Between abscissae the table is piecewise constant from the left.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionTable {
    source: String,
    xs: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl FunctionTable {
    pub fn new(source: impl Into<String>, xs: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if xs.is_empty() || rows.is_empty() {
            return domain("function table needs at least one abscissa and one row");
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) || xs.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return domain("table abscissae must be strictly increasing within [0,1]");
        }
        if let Some(n) = rows.iter().position(|r| r.len() != xs.len() || r.iter().any(|v| !v.is_finite())) {
            return domain(format!("table row {} has the wrong width or a non-finite value", n + 1));
        }
        Ok(FunctionTable { source: source.into(), xs, rows })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("'{s}': {e}")));
        let header = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        let xs = header.iter().skip(1).map(parse).collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let n: usize = rec.get(0).unwrap_or("").parse().map_err(|_| Error::Parse(format!("row {}: bad index", i + 1)))?;
            if n != i + 1 {
                return Err(Error::Parse(format!("row {}: expected index {}, found {n}", i + 1, i + 1)));
            }
            rows.push(rec.iter().skip(1).map(parse).collect::<Result<Vec<_>>>()?);
        }
        FunctionTable::new(path.display().to_string(), xs, rows)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn column(&self, x: f64) -> usize {
        self.xs.partition_point(|&a| a <= x).saturating_sub(1)
    }
}

/// Sequences of functions `f_n : [0,1] → ℝ`.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionFamily {
    /// `(-1)^n`, constant in `x`.
    Alternating,
    /// `x^n`.
    PowerX,
    /// `sin(nπx)`.
    SinPi,
    /// Indicator of `[j·2^-k, (j+1)·2^-k]` for `n = 2^k + j`, `0 ≤ j < 2^k`.
    Typewriter,
    /// `1` iff `n` is a perfect square, constant in `x`.
    SquareIndicator,
    TableBacked(Arc<FunctionTable>),
}

impl FunctionFamily {
    /// `alternating`, `power-x`, `sin-pi`, `typewriter`, `square-indicator` or `table:<csv path>`.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "alternating" => FunctionFamily::Alternating,
            "power-x" => FunctionFamily::PowerX,
            "sin-pi" => FunctionFamily::SinPi,
            "typewriter" => FunctionFamily::Typewriter,
            "square-indicator" => FunctionFamily::SquareIndicator,
            other => match other.strip_prefix("table:") {
                Some(path) => FunctionFamily::TableBacked(Arc::new(FunctionTable::read_csv(Path::new(path))?)),
                None => return Err(Error::Config(format!("unknown function family '{other}'"))),
            },
        })
    }

    pub fn name(&self) -> String {
        match self {
            FunctionFamily::Alternating => "alternating".into(),
            FunctionFamily::PowerX => "power-x".into(),
            FunctionFamily::SinPi => "sin-pi".into(),
            FunctionFamily::Typewriter => "typewriter".into(),
            FunctionFamily::SquareIndicator => "square-indicator".into(),
            FunctionFamily::TableBacked(t) => format!("table:{}", t.source()),
        }
    }

    /// `f_n(x)` for `n ≥ 1`.
    pub fn value(&self, x: f64, n: usize) -> f64 {
        match self {
            FunctionFamily::Alternating => {
                if n % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            FunctionFamily::PowerX => x.powf(n as f64),
            FunctionFamily::SinPi => {
                // reduce nx modulo 2 before scaling by π to keep large n accurate
                let t = (n as f64 * x).rem_euclid(2.0);
                (PI * t).sin()
            }
            FunctionFamily::Typewriter => {
                let (k, j) = typewriter_stage(n);
                let scaled = x * (1u64 << k) as f64;
                if (j as f64) <= scaled && scaled <= (j + 1) as f64 {
                    1.0
                } else {
                    0.0
                }
            }
            FunctionFamily::SquareIndicator => {
                if is_square(n) {
                    1.0
                } else {
                    0.0
                }
            }
            FunctionFamily::TableBacked(t) => t.rows[n - 1][t.column(x)],
        }
    }

    /// Longest horizon the family can be evaluated to.
    pub fn max_horizon(&self) -> usize {
        match self {
            FunctionFamily::TableBacked(t) => t.len(),
            _ => usize::MAX,
        }
    }

    /// `(f_n(x))_{n ≤ N}`.
    pub fn sequence_at<F: Scalar>(&self, x: f64, horizon: Horizon) -> Result<PointSeq<F>> {
        if !(0.0..=1.0).contains(&x) {
            return domain(format!("point {x} outside the domain [0,1]"));
        }
        if horizon.get() > self.max_horizon() {
            return domain(format!("{} is tabulated only up to n = {}", self.name(), self.max_horizon()));
        }
        PointSeq::from_fn(MetricKind::RealAbs, horizon, |n| F::of(self.value(x, n)))
    }

    /// Whether `x` must be avoided when sampling this family.
    pub fn rejects(&self, x: f64) -> bool {
        matches!(self, FunctionFamily::SinPi) && near_small_rational(x)
    }
}

impl fmt::Display for FunctionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl Serialize for FunctionFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for FunctionFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        FunctionFamily::from_name(&name).map_err(serde::de::Error::custom)
    }
}

/// `(k, j)` with `n = 2^k + j` and `0 ≤ j < 2^k`.
pub fn typewriter_stage(n: usize) -> (u32, usize) {
    assert!(n >= 1, "typewriter indices start at 1");
    let k = usize::BITS - 1 - n.leading_zeros();
    (k, n - (1 << k))
}

/// Within `1e-6` of some `p/q` with `q ≤ 8`.
pub fn near_small_rational(x: f64) -> bool {
    (1..=8u32).any(|q| {
        let q = q as f64;
        ((x * q).round() / q - x).abs() < 1e-6
    })
}

/// How the points of `[0,1]` standing in for `μ` are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainSampler {
    /// Midpoints `(i + 1/2)/count`; points a family rejects are dropped.
    UniformGrid { count: usize },
    /// Independent uniform draws; rejected draws are redrawn.
    SeededUniform { count: usize, seed: u64 },
}

impl DomainSampler {
    pub fn count(&self) -> usize {
        match *self {
            DomainSampler::UniformGrid { count } | DomainSampler::SeededUniform { count, .. } => count,
        }
    }

    pub fn points(&self, family: &FunctionFamily) -> Result<Vec<f64>> {
        if self.count() == 0 {
            return Err(Error::Config("sampler needs at least one point".into()));
        }
        Ok(match *self {
            DomainSampler::UniformGrid { count } => (0..count)
                .map(|i| (i as f64 + 0.5) / count as f64)
                .filter(|&x| !family.rejects(x))
                .collect(),
            DomainSampler::SeededUniform { count, seed } => {
                let mut rng = stream(seed, purpose::POINTS, 0);
                (0..count)
                    .map(|_| loop {
                        let x: f64 = rng.random();
                        if !family.rejects(x) {
                            break x;
                        }
                    })
                    .collect()
            }
        })
    }
}

/// One generated corpus member with its intended behaviour.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub name: String,
    pub convergent: bool,
    pub seq: PointSeq<f64>,
}

/// Mixed corpus of clearly convergent and clearly divergent sequences,
/// drawn from the `(seed, CORPUS)` streams, one stream per entry.
pub fn generated_corpus(seed: u64, count: usize, horizon: Horizon) -> Vec<CorpusEntry> {
    (0..count).map(|i| corpus_entry(seed, i as u64, horizon)).collect()
}

fn corpus_entry(seed: u64, index: u64, horizon: Horizon) -> CorpusEntry {
    let mut rng = stream(seed, purpose::CORPUS, index);
    let c: f64 = rng.random_range(-2.0..2.0);
    let seq = |f: &dyn Fn(usize) -> f64| PointSeq::from_fn(MetricKind::RealAbs, horizon, f).unwrap();
    let (name, convergent, values) = match index % 8 {
        0 => {
            let p: f64 = rng.random_range(0.5..2.0);
            ("power-decay", true, seq(&|n| c + 1.0 / (n as f64).powf(p)))
        }
        1 => {
            let noise: Vec<f64> = (0..horizon.get()).map(|_| rng.random_range(-1.0..1.0)).collect();
            ("damped-noise", true, seq(&|n| c + noise[n - 1] / (n as f64).sqrt()))
        }
        2 => {
            let h: f64 = rng.random_range(1.0..5.0);
            ("sparse-spikes", true, seq(&|n| if is_square(n) { c + h } else { c }))
        }
        3 => {
            let h: f64 = rng.random_range(1.0..3.0);
            let u: Vec<f64> = (0..horizon.get()).map(|_| rng.random()).collect();
            // random spikes with frequency 2/sqrt(n)
            ("thinning-spikes", true, seq(&|n| if u[n - 1] < 2.0 / (n as f64).sqrt() { c + h } else { c }))
        }
        4 => {
            let a: f64 = rng.random_range(0.5..3.0);
            ("alternating", false, seq(&|n| if n % 2 == 0 { c + a } else { c - a }))
        }
        5 => {
            let x: f64 = loop {
                let x: f64 = rng.random();
                if !near_small_rational(x) {
                    break x;
                }
            };
            ("sin-pi", false, seq(&|n| c + FunctionFamily::SinPi.value(x, n)))
        }
        6 => {
            let p: f64 = rng.random_range(0.3..0.7);
            let bits: Vec<bool> = (0..horizon.get()).map(|_| rng.random::<f64>() < p).collect();
            ("bernoulli", false, seq(&|n| if bits[n - 1] { c + 1.0 } else { c }))
        }
        _ => {
            let period = rng.random_range(3..12usize);
            ("periodic", false, seq(&|n| c + (n % period) as f64))
        }
    };
    CorpusEntry { name: format!("{name}-{index}"), convergent, seq: values }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typewriter_stages() {
        assert_eq!(typewriter_stage(1), (0, 0));
        assert_eq!(typewriter_stage(2), (1, 0));
        assert_eq!(typewriter_stage(3), (1, 1));
        assert_eq!(typewriter_stage(13), (3, 5));
        let tw = FunctionFamily::Typewriter;
        // n = 13 covers [5/8, 6/8], endpoints included
        assert_eq!(tw.value(0.625, 13), 1.0);
        assert_eq!(tw.value(0.75, 13), 1.0);
        assert_eq!(tw.value(0.76, 13), 0.0);
    }

    #[test]
    fn every_point_hit_once_per_stage() {
        let tw = FunctionFamily::Typewriter;
        for x in [0.0, 0.1, 0.3333, 0.999] {
            for k in 1..10u32 {
                let hits = (1usize << k..1 << (k + 1)).filter(|&n| tw.value(x, n) == 1.0).count();
                assert_eq!(hits, 1, "x = {x}, stage {k}");
            }
        }
        // dyadic endpoints are shared by two neighbouring intervals
        assert_eq!((8..16).filter(|&n| tw.value(0.5, n) == 1.0).count(), 2);
    }

    #[test]
    fn family_values() {
        assert_eq!(FunctionFamily::PowerX.value(0.5, 3), 0.125);
        assert!((FunctionFamily::SinPi.value(0.25, 2) - 1.0).abs() < 1e-12);
        assert!(FunctionFamily::SinPi.value(0.3, 1_000_001).abs() <= 1.0);
        assert_eq!(FunctionFamily::SquareIndicator.value(0.0, 49), 1.0);
        assert_eq!(FunctionFamily::SquareIndicator.value(0.0, 50), 0.0);
        assert_eq!(FunctionFamily::Alternating.value(0.7, 4), 1.0);
    }

    #[test]
    fn names_round_trip() {
        for name in ["alternating", "power-x", "sin-pi", "typewriter", "square-indicator"] {
            assert_eq!(FunctionFamily::from_name(name).unwrap().name(), name);
        }
        assert!(FunctionFamily::from_name("cosine").is_err());
    }

    #[test]
    fn named_sequences() {
        let h = Horizon::new(16).unwrap();
        assert_eq!(named_sequence::<f64>("harmonic", h).unwrap().value(4), 0.25);
        assert_eq!(named_sequence::<f32>("alternating", h).unwrap().value(3), -1.0);
        assert_eq!(named_sequence::<f64>("square-indicator", h).unwrap().value(9), 1.0);
        assert_eq!(named_sequence::<f64>("power-x@0.5", h).unwrap().value(2), 0.25);
        assert!(named_sequence::<f64>("bogus", h).is_err());
        assert!(named_sequence::<f64>("sin-pi@2.0", h).is_err());
    }

    #[test]
    fn sin_pi_rejection() {
        assert!(near_small_rational(0.5));
        assert!(near_small_rational(3.0 / 7.0 + 5e-7));
        assert!(!near_small_rational(0.3141));
        let pts = DomainSampler::UniformGrid { count: 8 }.points(&FunctionFamily::SinPi).unwrap();
        assert!(pts.iter().all(|&x| !near_small_rational(x)));
        let pts = DomainSampler::SeededUniform { count: 50, seed: 4 }.points(&FunctionFamily::SinPi).unwrap();
        assert_eq!(pts.len(), 50);
        assert!(pts.iter().all(|&x| (0.0..=1.0).contains(&x) && !near_small_rational(x)));
    }

    #[test]
    fn table_backed_family() {
        let dir = std::env::temp_dir().join(format!("ideal-lab-table-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        std::fs::write(&path, "n,0.0,0.5\n1,1,2\n2,3,4\n3,5,6\n").unwrap();
        let fam = FunctionFamily::from_name(&format!("table:{}", path.display())).unwrap();
        assert_eq!(fam.value(0.2, 2), 3.0);
        assert_eq!(fam.value(0.9, 3), 6.0);
        assert!(fam.sequence_at::<f64>(0.5, Horizon::new(4).unwrap()).is_err());
        assert_eq!(fam.sequence_at::<f64>(0.5, Horizon::new(3).unwrap()).unwrap().value(1), 2.0);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn corpus_is_seeded() {
        let h = Horizon::new(1000).unwrap();
        let a = generated_corpus(7, 16, h);
        assert_eq!(a, generated_corpus(7, 16, h));
        assert_eq!(a.iter().filter(|e| e.convergent).count(), 8);
    }
}
