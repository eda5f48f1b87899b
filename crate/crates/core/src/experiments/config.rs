use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::convergence::EpsGrid;
use crate::error::{Error, Result};
use crate::families::{DomainSampler, FunctionFamily};
use crate::ideal::{Horizon, IdealSpec};
use crate::scalar::Scalar;

/// Smallest horizon an experiment accepts.
pub const MIN_EXPERIMENT_HORIZON: usize = 1 << 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Grid,
    SeededUniform,
}

/// Parameters shared by every experiment; unspecified fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Function family for the point-sampling experiments.
    pub family: Option<FunctionFamily>,
    /// Sequence name for the single-sequence experiments.
    pub sequence: Option<String>,
    pub ideal: String,
    pub horizon: usize,
    /// Number of random selections `M_s`.
    pub trials: usize,
    /// Number of domain points `M_x`.
    pub points: usize,
    pub seed: u64,
    /// Finest tolerance of the dyadic grid `1/2, 1/4, …`.
    pub eps_min: f64,
    /// Worker threads. Results do not depend on it, so it is left out of reports.
    #[serde(skip_serializing)]
    pub workers: usize,
    pub sampler: SamplerKind,
    /// Requested length of constructed selections; halved down on exhaustion.
    pub construction_target: usize,
    /// Horizon on which constructions search for their witness pair.
    pub construction_horizon: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            family: None,
            sequence: None,
            ideal: "density".into(),
            horizon: 1 << 12,
            trials: 100,
            points: 50,
            seed: 1,
            eps_min: 1.0 / 128.0,
            workers: 1,
            sampler: SamplerKind::Grid,
            construction_target: 1024,
            construction_horizon: 1 << 16,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.horizon < MIN_EXPERIMENT_HORIZON {
            return fail(format!("horizon {} below the minimum {MIN_EXPERIMENT_HORIZON}", self.horizon));
        }
        if self.trials == 0 || self.points == 0 {
            return fail("trials and points must be at least 1".into());
        }
        if self.workers == 0 {
            return fail("workers must be at least 1".into());
        }
        if self.construction_target == 0 || self.construction_horizon < 64 {
            return fail("construction target must be positive and its horizon at least 64".into());
        }
        IdealSpec::from_name(&self.ideal)?;
        self.grid::<f64>()?;
        Ok(())
    }

    pub fn ideal_spec(&self) -> Result<IdealSpec> {
        IdealSpec::from_name(&self.ideal)
    }

    pub fn grid<F: Scalar>(&self) -> Result<EpsGrid<F>> {
        EpsGrid::dyadic_down_to(self.eps_min)
    }

    pub fn horizon(&self) -> Result<Horizon> {
        Horizon::new(self.horizon)
    }

    pub fn sampler(&self) -> DomainSampler {
        match self.sampler {
            SamplerKind::Grid => DomainSampler::UniformGrid { count: self.points },
            SamplerKind::SeededUniform => DomainSampler::SeededUniform { count: self.points, seed: self.seed },
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// JSON for `.json` files, TOML otherwise.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }
}
