use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::convergence::VerdictTag;
use crate::error::{Error, Result};

const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: u64, n: u64) -> [f64; 2] {
    if n == 0 {
        return [0.0, 1.0];
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes as f64 == n { 1.0 } else { (center + half).min(1.0) };
    [lo, hi]
}

/// Standard error with two pseudo-successes and two pseudo-failures added,
/// so that proportions at 0 or 1 still get a nonzero spread.
pub fn adjusted_standard_error(successes: u64, n: u64) -> f64 {
    let n = n as f64 + 4.0;
    let p = (successes as f64 + 2.0) / n;
    (p * (1.0 - p) / n).sqrt()
}

/// Successes over decided trials; undecided trials are counted separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub name: String,
    pub successes: u64,
    pub decided: u64,
    pub undecided: u64,
    pub value: f64,
    pub ci95: [f64; 2],
}

impl Proportion {
    pub fn new(name: impl Into<String>, successes: u64, decided: u64, undecided: u64) -> Self {
        assert!(successes <= decided);
        let value = if decided == 0 { 0.0 } else { successes as f64 / decided as f64 };
        Proportion { name: name.into(), successes, decided, undecided, value, ci95: wilson_interval(successes, decided) }
    }

    pub fn undecided_rate(&self) -> f64 {
        let total = self.decided + self.undecided;
        if total == 0 {
            0.0
        } else {
            self.undecided as f64 / total as f64
        }
    }

    pub fn standard_error(&self) -> f64 {
        adjusted_standard_error(self.successes, self.decided)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub name: String,
    pub convergent: u64,
    pub divergent: u64,
    pub undecided: u64,
}

impl Tally {
    pub fn from_tags(name: impl Into<String>, tags: impl IntoIterator<Item = VerdictTag>) -> Self {
        let mut t = Tally { name: name.into(), ..Default::default() };
        for tag in tags {
            t.add(tag);
        }
        t
    }

    pub fn add(&mut self, tag: VerdictTag) {
        match tag {
            VerdictTag::Convergent => self.convergent += 1,
            VerdictTag::Divergent => self.divergent += 1,
            VerdictTag::Undecided => self.undecided += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.convergent + self.divergent + self.undecided
    }

    pub fn decided(&self) -> u64 {
        self.convergent + self.divergent
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructedOutcome {
    pub target: usize,
    pub len: usize,
    pub visited_m: usize,
    pub replay: VerdictTag,
    /// `in_Am` answered `Yes` for every visited `m`.
    pub in_am_all: bool,
}

/// Per-point record of a construction demonstration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointOutcome {
    pub x: f64,
    pub classical: VerdictTag,
    pub random: Tally,
    pub subseq: Option<ConstructedOutcome>,
    pub perm: Option<ConstructedOutcome>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    /// `ESTIMATE` for Monte Carlo estimators, `DEMONSTRATION` for construction showcases.
    pub label: String,
    /// Set when the JSON below carries no timing or scheduling data.
    pub canonical: bool,
    pub rng: String,
    pub subject: String,
    pub ideal: String,
    pub config: ExperimentConfig,
    pub warnings: Vec<String>,
    pub verdict: Option<VerdictTag>,
    pub proportions: Vec<Proportion>,
    pub tallies: Vec<Tally>,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<PointOutcome>,
}

impl ExperimentReport {
    pub fn proportion(&self, name: &str) -> Option<&Proportion> {
        self.proportions.iter().find(|p| p.name == name)
    }

    pub fn tally(&self, name: &str) -> Option<&Tally> {
        self.tallies.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Pretty JSON with fields in declaration order and a trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// `name,convergent,divergent,undecided,total` rows.
    pub fn tallies_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["name", "convergent", "divergent", "undecided", "total"]).map_err(err)?;
        for t in &self.tallies {
            w.write_record([
                t.name.clone(),
                t.convergent.to_string(),
                t.divergent.to_string(),
                t.undecided.to_string(),
                t.total().to_string(),
            ])
            .map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
