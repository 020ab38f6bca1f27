//! Scenario configuration.
//!
//! A scenario is one JSON document. Unknown keys are rejected everywhere and
//! parse errors name the path into the document. All randomness derives from
//! `seed` through fixed per-purpose tags, see [`SeedTag`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use simest_core::em::EmConfig;
use simest_core::inference::{AbcConfig, BootstrapConfig};
use simest_core::network::{build_network, HyperParams, Loss, NetworkModel};
use simest_core::rng::derive_seed;
use simest_core::simulate::SimulatorSpec;
use simest_core::train::TrainingConfig;
use simest_core::{Estimator, Matrix2, SampleMean, Tensor3};

use crate::error::{HarnessError, Result};

/// Environment variable that replaces `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "SIMEST_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum SeedTag {
    NetworkInit = 1,
    Training = 2,
    Coverage = 3,
    Bootstrap = 4,
    Abc = 5,
    AbcRefine = 6,
    Simulate = 7,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorSpec {
    /// Trained network with the given architecture.
    Network { hyperparams: HyperParams },
    /// Column means, the closed-form estimator of a location model.
    SampleMean { columns: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSettings {
    pub epochs: usize,
    pub batches_per_epoch: usize,
    pub datasets_per_batch: usize,
    pub sample_size_range: (usize, usize),
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default)]
    pub loss: Loss,
}

fn default_lr() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbcSettings {
    pub n_draws: usize,
    #[serde(default = "default_accept")]
    pub accept_quantile: f64,
    #[serde(default = "default_scale")]
    pub refine_scale: f64,
    /// Proposal draws of the refinement stage; 0 skips refinement.
    #[serde(default)]
    pub refine_draws: usize,
}

fn default_accept() -> f64 {
    0.05
}
fn default_scale() -> f64 {
    1.0
}

impl Default for AbcSettings {
    fn default() -> Self {
        Self {
            n_draws: 10_000,
            accept_quantile: default_accept(),
            refine_scale: default_scale(),
            refine_draws: 0,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub simulator: SimulatorSpec,
    pub estimator: EstimatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingSettings>,
    pub eval_sample_sizes: Vec<usize>,
    pub replications: usize,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    #[serde(default)]
    pub abc: AbcSettings,
    #[serde(default)]
    pub em: EmConfig,
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn invalid(e: simest_core::Error) -> HarnessError {
    HarnessError::Config(e.to_string())
}

impl ScenarioConfig {
    pub fn derived_seed(&self, tag: SeedTag) -> u64 {
        derive_seed(self.seed, tag as u64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenario.is_empty() {
            return Err(HarnessError::Config("scenario: must not be empty".into()));
        }
        self.simulator.validate().map_err(invalid)?;
        if self.replications == 0 {
            return Err(HarnessError::Config("replications: must be at least 1".into()));
        }
        if self.eval_sample_sizes.is_empty() {
            return Err(HarnessError::Config("eval_sample_sizes: must not be empty".into()));
        }
        if let Some(&n) = self.eval_sample_sizes.iter().find(|&&n| n < 2) {
            return Err(HarnessError::Config(format!(
                "eval_sample_sizes: sample size {n} is below 2"
            )));
        }
        self.bootstrap.validate().map_err(invalid)?;
        self.em.validate().map_err(invalid)?;
        AbcConfig { n_draws: self.abc.n_draws, accept_quantile: self.abc.accept_quantile }
            .accepted_count()
            .map_err(invalid)?;
        if !(self.abc.refine_scale > 0.0) {
            return Err(HarnessError::Config("abc.refine_scale: must be positive".into()));
        }
        match &self.estimator {
            EstimatorSpec::Network { hyperparams } => {
                hyperparams.validate().map_err(|e| HarnessError::Config(format!("estimator.hyperparams: {e}")))?;
                if let Some(t) = &self.training {
                    self.training_config(t).validate().map_err(|e| HarnessError::Config(format!("training: {e}")))?;
                }
            }
            EstimatorSpec::SampleMean { columns } => {
                if columns.len() != self.simulator.param_dim() {
                    return Err(HarnessError::Config(format!(
                        "estimator.columns: needs one column per parameter ({})",
                        self.simulator.param_dim()
                    )));
                }
                if let Some(&c) = columns.iter().find(|&&c| c >= self.simulator.input_cols()) {
                    return Err(HarnessError::Config(format!(
                        "estimator.columns: column {c} out of range"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn training_config(&self, t: &TrainingSettings) -> TrainingConfig {
        TrainingConfig {
            epochs: t.epochs,
            batches_per_epoch: t.batches_per_epoch,
            datasets_per_batch: t.datasets_per_batch,
            sample_size_range: t.sample_size_range,
            learning_rate: t.learning_rate,
            seed: self.derived_seed(SeedTag::Training),
            loss: t.loss,
        }
    }

    /// Untrained network for a network scenario.
    pub fn initial_network(&self) -> Result<NetworkModel> {
        match &self.estimator {
            EstimatorSpec::Network { hyperparams } => Ok(build_network(
                hyperparams,
                self.simulator.input_cols(),
                self.simulator.param_dim(),
                self.derived_seed(SeedTag::NetworkInit),
            )?),
            EstimatorSpec::SampleMean { .. } => Err(HarnessError::Config(
                "estimator: scenario does not use a network".into(),
            )),
        }
    }

    pub fn bootstrap_config(&self) -> BootstrapConfig {
        self.bootstrap
    }

    pub fn abc_config(&self) -> AbcConfig {
        AbcConfig { n_draws: self.abc.n_draws, accept_quantile: self.abc.accept_quantile }
    }

    /// Serialise in the normalised form (all defaults spelled out).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises") + "\n"
    }
}

/// Parse a scenario from JSON text and validate it.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        HarnessError::Config(format!("{path}: {}", e.into_inner()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Read a scenario file and apply the output-directory override.
pub fn read_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(&text).map_err(|e| match e {
        HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
        cfg.output_dir = PathBuf::from(dir);
    }
    Ok(cfg)
}

pub fn write_config(cfg: &ScenarioConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, cfg.to_json()).map_err(|e| HarnessError::io(path, e))
}

/// A network loaded from a model file or the closed-form stand-in.
#[derive(Debug, Clone)]
pub enum LoadedEstimator {
    Network(NetworkModel),
    SampleMean(SampleMean),
}

impl LoadedEstimator {
    pub fn sample_mean(spec: &SimulatorSpec, columns: &[usize]) -> Self {
        LoadedEstimator::SampleMean(SampleMean { input_cols: spec.input_cols(), columns: columns.to_vec() })
    }
}

impl Estimator for LoadedEstimator {
    fn input_cols(&self) -> usize {
        match self {
            LoadedEstimator::Network(m) => m.input_cols(),
            LoadedEstimator::SampleMean(s) => s.input_cols(),
        }
    }

    fn output_dim(&self) -> usize {
        match self {
            LoadedEstimator::Network(m) => m.output_dim(),
            LoadedEstimator::SampleMean(s) => Estimator::output_dim(s),
        }
    }

    fn estimate(&self, batch: &Tensor3) -> simest_core::Result<Matrix2> {
        match self {
            LoadedEstimator::Network(m) => m.estimate(batch),
            LoadedEstimator::SampleMean(s) => s.estimate(batch),
        }
    }
}
