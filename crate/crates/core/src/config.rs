//! Experiment configuration: a strict JSON document mirroring the module
//! type hierarchy. Unknown keys are rejected so misspelled options fail
//! loudly before any compute.

use serde::{Deserialize, Serialize};

use crate::aggregate::{AggregationKind, AggregationSpec};
use crate::data::SynthSpec;
use crate::error::{Error, Result};
use crate::loss::{LossKind, LossSpec};
use crate::nn::{HiddenActivation, Initializer, NetworkSpec, TrainConfig};

/// Where the experiment's data comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// A CSV file: numeric features, integer label in the last column.
    Csv { path: String },
    /// Synthetic imbalanced blobs, regenerated per run seed.
    Synth(SynthSpec),
}

/// Named experiment presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Elastic averaging, adaptive focal loss, autoencoder pre-training.
    Proposed,
    /// Elastic averaging with cross-entropy.
    EasgdCe,
    /// Plain federated averaging with the fixed focal loss.
    FedavgFocal,
    /// Sample-size weighted averaging with cross-entropy.
    SsfedavgCe,
    /// Gradient-angle adaptive aggregation with cross-entropy.
    FedadpCe,
    /// Single-model comparison across every initializer, focal loss.
    SingleModelInitComparison,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::EasgdCe => "easgd_ce",
            Method::FedavgFocal => "fedavg_focal",
            Method::SsfedavgCe => "ssfedavg_ce",
            Method::FedadpCe => "fedadp_ce",
            Method::SingleModelInitComparison => "single_model_init_comparison",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub local_epochs: u32,
    pub batch_size: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams { learning_rate: 0.5, local_epochs: 3, batch_size: 32 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkParams {
    /// Hidden layer sizes; `None` selects the input-sized pyramid.
    pub hidden_sizes: Option<Vec<usize>>,
    pub hidden_activation: HiddenActivation,
    /// Overrides the preset's initializer for non-proposed methods.
    pub initializer: Option<Initializer>,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            hidden_sizes: None,
            hidden_activation: HiddenActivation::Sigmoid,
            initializer: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AggregationParams {
    pub gamma: f64,
    pub alpha: f64,
}

impl Default for AggregationParams {
    fn default() -> Self {
        AggregationParams { gamma: 0.9, alpha: 5.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossParams {
    /// Focusing exponent.
    pub xi: f64,
    /// Fixed scale for the plain focal preset.
    pub rho: f64,
    /// Adaptive sigmoid numerator.
    pub a: f64,
    /// Adaptive sigmoid steepness.
    pub b: f64,
}

impl Default for LossParams {
    fn default() -> Self {
        LossParams { xi: 2.0, rho: 1.0, a: 2.0, b: 3.0 }
    }
}

fn default_node_counts() -> Vec<usize> {
    vec![1]
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_rounds() -> u32 {
    20
}

fn default_pretrain_rounds() -> u32 {
    10
}

fn default_test_fraction() -> f64 {
    0.3
}

/// A complete experiment: data source, method preset, node-count sweep and
/// seed list, plus the nested module parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub method: Method,
    #[serde(default = "default_node_counts")]
    pub node_counts: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_rounds")]
    pub rounds: u32,
    #[serde(default = "default_pretrain_rounds")]
    pub pretrain_rounds: u32,
    #[serde(default)]
    pub train: TrainParams,
    #[serde(default)]
    pub network: NetworkParams,
    #[serde(default)]
    pub aggregation: AggregationParams,
    #[serde(default)]
    pub loss: LossParams,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        ExperimentConfig::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_counts.is_empty() {
            return Err(Error::Config("node_counts must not be empty".into()));
        }
        if self.node_counts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "node_counts must be strictly ascending".into(),
            ));
        }
        if self.node_counts[0] == 0 {
            return Err(Error::Config("node counts must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction must lie strictly between 0 and 1, got {}",
                self.test_fraction
            )));
        }
        if self.method == Method::SingleModelInitComparison && self.node_counts != [1] {
            return Err(Error::Config(
                "single_model_init_comparison runs with node_counts = [1]".into(),
            ));
        }
        self.resolve_loss().validate()?;
        self.resolve_aggregation().validate()?;
        Ok(())
    }

    /// Aggregation rule implied by the method preset.
    pub fn resolve_aggregation(&self) -> AggregationSpec {
        let kind = match self.method {
            Method::Proposed | Method::EasgdCe => AggregationKind::Easgd,
            Method::FedavgFocal | Method::SingleModelInitComparison => AggregationKind::FedAvg,
            Method::SsfedavgCe => AggregationKind::SsFedAvg,
            Method::FedadpCe => AggregationKind::FedAdp,
        };
        AggregationSpec {
            kind,
            gamma: self.aggregation.gamma,
            alpha: self.aggregation.alpha,
        }
    }

    /// Loss implied by the method preset.
    pub fn resolve_loss(&self) -> LossSpec {
        let kind = match self.method {
            Method::Proposed => LossKind::AdaptiveFocal,
            Method::EasgdCe | Method::SsfedavgCe | Method::FedadpCe => LossKind::CrossEntropy,
            Method::FedavgFocal | Method::SingleModelInitComparison => LossKind::Focal,
        };
        LossSpec {
            kind,
            xi: self.loss.xi,
            rho: self.loss.rho,
            a: self.loss.a,
            b: self.loss.b,
        }
    }

    /// Initializer implied by the preset, honoring the config override for
    /// non-proposed methods.
    pub fn resolve_initializer(&self) -> Initializer {
        match self.method {
            Method::Proposed => Initializer::AePretrained,
            Method::SingleModelInitComparison => {
                // The comparison loop supplies each initializer itself.
                self.network.initializer.unwrap_or(Initializer::GlorotUniform)
            }
            _ => self.network.initializer.unwrap_or(Initializer::GlorotUniform),
        }
    }

    /// Classifier spec for a dataset with the given input dimension, seeded
    /// for one run.
    pub fn network_spec(&self, input_dim: usize, initializer: Initializer, seed: u64) -> NetworkSpec {
        NetworkSpec::classifier(
            input_dim,
            2,
            self.network.hidden_sizes.as_deref(),
            self.network.hidden_activation,
            initializer,
            seed,
        )
    }

    /// Train config template; the federation derives per-worker seeds.
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.train.learning_rate,
            local_epochs: self.train.local_epochs,
            batch_size: self.train.batch_size,
            seed,
        }
    }
}
