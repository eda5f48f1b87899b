//! Finite sequences in a metric space.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ideal::Horizon;
use crate::scalar::Scalar;
use crate::selection::Selection;

/// The metric `ρ` of the target space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    /// Reals with `|a - b|`.
    RealAbs,
    /// `R^dim` with the Euclidean norm.
    Euclid(usize),
    /// Reals with the 0/1 metric.
    Discrete,
}

impl MetricKind {
    pub fn dim(self) -> usize {
        match self {
            MetricKind::Euclid(d) => d,
            MetricKind::RealAbs | MetricKind::Discrete => 1,
        }
    }

    pub fn validate(self) -> Result<()> {
        match self {
            MetricKind::Euclid(0) => Err(Error::Config("Euclidean dimension must be at least 1".into())),
            _ => Ok(()),
        }
    }

    pub fn distance<F: Scalar>(self, a: &[F], b: &[F]) -> F {
        debug_assert_eq!(a.len(), b.len());
        match self {
            MetricKind::RealAbs => (a[0] - b[0]).abs(),
            MetricKind::Euclid(_) => a
                .iter()
                .zip(b)
                .fold(F::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
                .sqrt(),
            MetricKind::Discrete => {
                if a[0] == b[0] {
                    F::zero()
                } else {
                    F::one()
                }
            }
        }
    }
}

/// `x_1, …, x_N` stored row-major, `dim` scalars per point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSeq<F> {
    metric: MetricKind,
    horizon: Horizon,
    values: Vec<F>,
}

impl<F: Scalar> PointSeq<F> {
    /// Takes `horizon · dim` finite values.
    pub fn from_values(metric: MetricKind, values: Vec<F>) -> Result<Self> {
        metric.validate()?;
        let dim = metric.dim();
        if values.len() % dim != 0 {
            return domain(format!("{} values do not split into points of dimension {dim}", values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("non-finite value at point {}", i / dim + 1));
        }
        let horizon = Horizon::new(values.len() / dim)?;
        Ok(PointSeq { metric, horizon, values })
    }

    /// Scalar sequence `n ↦ rule(n)`.
    pub fn from_fn(metric: MetricKind, horizon: Horizon, rule: impl Fn(usize) -> F) -> Result<Self> {
        if metric.dim() != 1 {
            return Err(Error::Config("from_fn builds scalar sequences; use from_points".into()));
        }
        Self::from_values(metric, (1..=horizon.get()).map(rule).collect())
    }

    /// Vector sequence; `rule(n, out)` fills the `dim` coordinates of `x_n`.
    pub fn from_points(
        metric: MetricKind,
        horizon: Horizon,
        rule: impl Fn(usize, &mut [F]),
    ) -> Result<Self> {
        metric.validate()?;
        let dim = metric.dim();
        let mut values = vec![F::zero(); horizon.get() * dim];
        for (i, chunk) in values.chunks_mut(dim).enumerate() {
            rule(i + 1, chunk);
        }
        Self::from_values(metric, values)
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.horizon.get()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `x_n`, 1-based.
    pub fn point(&self, n: usize) -> &[F] {
        let d = self.dim();
        &self.values[(n - 1) * d..n * d]
    }

    /// Scalar value of a one-dimensional sequence.
    pub fn value(&self, n: usize) -> F {
        self.point(n)[0]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, F> {
        self.values.chunks_exact(self.dim())
    }

    pub fn raw_values(&self) -> &[F] {
        &self.values
    }

    pub fn distance(&self, a: &[F], b: &[F]) -> F {
        self.metric.distance(a, b)
    }

    /// `ρ(x_n, z)`.
    pub fn distance_to(&self, n: usize, z: &[F]) -> F {
        self.metric.distance(self.point(n), z)
    }

    /// `(x_{s(n)})`; the new horizon is the length of `s`.
    pub fn apply_selection(&self, s: &impl Selection) -> Result<PointSeq<F>> {
        if let Some(&bad) = s.entries().iter().find(|&&e| e == 0 || e > self.len()) {
            return domain(format!("selection entry {bad} beyond sequence horizon {}", self.len()));
        }
        let horizon = Horizon::new(s.len())?;
        let d = self.dim();
        let mut values = Vec::with_capacity(s.len() * d);
        for &e in s.entries() {
            values.extend_from_slice(self.point(e));
        }
        Ok(PointSeq { metric: self.metric, horizon, values })
    }

    /// First `n` terms.
    pub fn truncate(&self, n: usize) -> Result<PointSeq<F>> {
        if n > self.len() {
            return domain(format!("cannot truncate horizon {} to {n}", self.len()));
        }
        let horizon = Horizon::new(n)?;
        Ok(PointSeq { metric: self.metric, horizon, values: self.values[..n * self.dim()].to_vec() })
    }

    /// Adds `c` to every coordinate.
    pub fn translate(&self, c: F) -> PointSeq<F> {
        PointSeq {
            metric: self.metric,
            horizon: self.horizon,
            values: self.values.iter().map(|&v| v + c).collect(),
        }
    }
}

/// Reads `index,value[,value…]` rows; indices must run `1, 2, …, N`.
///
/// A first row whose index field is not a natural number is treated as a header.
pub fn read_csv_sequence<F: Scalar>(reader: impl Read, metric: MetricKind) -> Result<PointSeq<F>> {
    metric.validate()?;
    let dim = metric.dim();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut expected = 1usize;
    for (row_no, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let Some(first) = rec.get(0) else { continue };
        let index: usize = match first.parse() {
            Ok(i) => i,
            Err(_) if row_no == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("row {}: index '{first}': {e}", row_no + 1))),
        };
        if index != expected {
            return Err(Error::Parse(format!("row {}: expected index {expected}, found {index}", row_no + 1)));
        }
        if rec.len() != dim + 1 {
            return Err(Error::Parse(format!(
                "row {}: expected {dim} value(s), found {}",
                row_no + 1,
                rec.len() - 1
            )));
        }
        for field in rec.iter().skip(1) {
            let v: f64 = field
                .parse()
                .map_err(|e| Error::Parse(format!("row {}: value '{field}': {e}", row_no + 1)))?;
            values.push(F::of(v));
        }
        expected += 1;
    }
    PointSeq::from_values(metric, values)
}
