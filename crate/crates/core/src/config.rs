//! JSON experiment configuration.
//!
//! Every field has a default, so `{"format_version": 1, "env": "planar2"}`
//! is a complete config. Defaults that depend on the environment (dataset
//! size, network depth, epochs, weight decay, neighbourhood sizes) are left
//! unset in the file and resolved against the environment kind.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::collection::{CollectConfig, CollectPolicy, OuConfig};
use crate::control::ControllerConfig;
use crate::env::{EnvKind, SimConfig};
use crate::error::{Error, Result};
use crate::estimators::BroydenConfig;
use crate::metrics::{BucketSpec, ThresholdSpec};
use crate::neural::{Activation, JointEmbedding, MlpSpec, TrainConfig};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub format_version: u32,
    pub env: EnvKind,
    /// Evaluation seeds; each draws its own set of targets.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub collection: CollectionConfig,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorConfig>,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_estimators() -> Vec<EstimatorConfig> {
    let nn = NetworkConfig::default;
    vec![
        EstimatorConfig::True,
        EstimatorConfig::Broyden(BroydenConfig::default()),
        EstimatorConfig::LlKnn { k: None },
        EstimatorConfig::NeuralJacobian {
            name: "nj".into(),
            beta: 0.0,
            k: 10,
            network: nn(),
        },
        EstimatorConfig::NeuralJacobian {
            name: "bi_nj".into(),
            beta: 1.0,
            k: 10,
            network: nn(),
        },
        EstimatorConfig::NeuralKinematics {
            name: "nk_relu".into(),
            network: NetworkConfig {
                activation: Some(Activation::Relu),
                ..nn()
            },
        },
        EstimatorConfig::NeuralKinematics {
            name: "nk_tanh".into(),
            network: NetworkConfig {
                activation: Some(Activation::Tanh),
                ..nn()
            },
        },
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollectionConfig {
    /// Defaults to 1000 single point, 2000 multi point, 100 planar.
    pub n_traj: Option<usize>,
    pub traj_len: usize,
    pub ou: OuConfig,
    pub policy: CollectPolicy,
    pub seed: u64,
}

impl Default for CollectionConfig {
    fn default() -> Self {
        Self {
            n_traj: None,
            traj_len: 100,
            ou: OuConfig::default(),
            policy: CollectPolicy::Ou,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorConfig {
    True,
    Broyden(BroydenConfig),
    #[serde(rename = "llknn")]
    LlKnn {
        /// Defaults to 128, or 50 on the planar arm.
        #[serde(default)]
        k: Option<usize>,
    },
    NeuralJacobian {
        name: String,
        #[serde(default)]
        beta: f64,
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default)]
        network: NetworkConfig,
    },
    NeuralKinematics {
        name: String,
        #[serde(default)]
        network: NetworkConfig,
    },
}

fn default_k() -> usize {
    10
}

impl EstimatorConfig {
    pub fn name(&self) -> String {
        match self {
            EstimatorConfig::True => "true".into(),
            EstimatorConfig::Broyden(_) => "broyden".into(),
            EstimatorConfig::LlKnn { .. } => "llknn".into(),
            EstimatorConfig::NeuralJacobian { name, .. }
            | EstimatorConfig::NeuralKinematics { name, .. } => name.clone(),
        }
    }

    pub fn is_neural(&self) -> bool {
        matches!(
            self,
            EstimatorConfig::NeuralJacobian { .. } | EstimatorConfig::NeuralKinematics { .. }
        )
    }
}

/// Network and optimiser settings; unset fields take the environment's
/// defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    /// 2 single point, 4 multi point, 1 planar.
    pub hidden_layers: Option<usize>,
    pub hidden_width: usize,
    /// ReLU unless set.
    pub activation: Option<Activation>,
    pub embedding: JointEmbedding,
    /// 30 single point, 40 multi point, 45 planar.
    pub epochs: Option<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Zero for Jacobian networks; for kinematics networks 1e-4 (ReLU) and
    /// 0 (tanh) on single point and planar, 1e-5 and 1e-6 on multi point.
    pub weight_decay: Option<f64>,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            hidden_layers: None,
            hidden_width: 100,
            activation: None,
            embedding: JointEmbedding::Trig,
            epochs: None,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            weight_decay: None,
            validation_fraction: t.validation_fraction,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    pub targets_per_seed: usize,
    pub controller: ControllerConfig,
    pub thresholds: Option<ThresholdSpec>,
    pub buckets: Option<BucketSpec>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            targets_per_seed: 110,
            controller: ControllerConfig::default(),
            thresholds: None,
            buckets: None,
        }
    }
}

/// Fully resolved training settings for one neural estimator.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedNetwork {
    pub spec: MlpSpec,
    pub train: TrainConfig,
    pub embedding: JointEmbedding,
}

impl ExperimentConfig {
    /// Paper defaults for `env`.
    pub fn defaults(env: EnvKind) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            env,
            seeds: default_seeds(),
            sim: SimConfig::default(),
            collection: CollectionConfig::default(),
            estimators: default_estimators(),
            evaluation: EvaluationConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.format_version != FORMAT_VERSION {
            return bad(format!(
                "format_version {} is not supported (expected {FORMAT_VERSION})",
                self.format_version
            ));
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if !(self.sim.dt > 0.0) {
            return bad(format!("sim.dt must be positive, got {}", self.sim.dt));
        }
        if let Some(q) = &self.sim.initial_q {
            if q.len() != self.env.joint_dim() {
                return bad(format!(
                    "sim.initial_q has {} entries, {} needs {}",
                    q.len(),
                    self.env.name(),
                    self.env.joint_dim()
                ));
            }
        }
        let c = &self.collection;
        if c.n_traj == Some(0) || c.traj_len == 0 {
            return bad("collection.n_traj and collection.traj_len must be at least 1".into());
        }
        c.ou.validate()
            .map_err(|e| Error::Config(format!("collection.ou: {e}")))?;
        let mut names = std::collections::BTreeSet::new();
        for e in &self.estimators {
            let name = e.name();
            if name.is_empty()
                || !name
                    .chars()
                    .all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-')
            {
                return bad(format!(
                    "estimator name {name:?} must be nonempty [A-Za-z0-9_-]"
                ));
            }
            if !names.insert(name.clone()) {
                return bad(format!("estimator name {name:?} is used twice"));
            }
            match e {
                EstimatorConfig::Broyden(b) => b
                    .validate()
                    .map_err(|e| Error::Config(format!("{name}: {e}")))?,
                EstimatorConfig::LlKnn { k: Some(k) } if *k < 2 => {
                    return bad(format!("llknn k must be at least 2, got {k}"))
                }
                EstimatorConfig::NeuralJacobian { beta, k, .. } => {
                    if !(*beta >= 0.0) || !beta.is_finite() {
                        return bad(format!("{name}: beta must be non-negative"));
                    }
                    if *k < 2 {
                        return bad(format!("{name}: k must be at least 2"));
                    }
                }
                _ => {}
            }
            if let Some(r) = self.network(e) {
                r.spec
                    .validate()
                    .map_err(|err| Error::Config(format!("{name}: {err}")))?;
                r.train
                    .validate()
                    .map_err(|err| Error::Config(format!("{name}: {err}")))?;
            }
        }
        let ev = &self.evaluation;
        if ev.targets_per_seed == 0 {
            return bad("evaluation.targets_per_seed must be at least 1".into());
        }
        ev.controller
            .validate()
            .map_err(|e| Error::Config(format!("evaluation.controller: {e}")))?;
        if let Some(y) = &ev.controller.y {
            if y.len() != self.env.joint_dim() {
                return bad(format!(
                    "evaluation.controller.y must have {} entries",
                    self.env.joint_dim()
                ));
            }
        }
        self.thresholds()
            .validate()
            .map_err(|e| Error::Config(format!("evaluation.thresholds: {e}")))?;
        self.buckets()
            .validate()
            .map_err(|e| Error::Config(format!("evaluation.buckets: {e}")))?;
        Ok(())
    }

    pub fn collect_config(&self) -> CollectConfig {
        let c = &self.collection;
        CollectConfig {
            n_traj: c.n_traj.unwrap_or(match self.env {
                EnvKind::SinglePoint7 => 1000,
                EnvKind::MultiPoint7 => 2000,
                EnvKind::Planar2 => 100,
            }),
            traj_len: c.traj_len,
            ou: c.ou,
            policy: c.policy,
            seed: c.seed,
        }
    }

    pub fn llknn_k(&self, k: Option<usize>) -> usize {
        k.unwrap_or(if self.env == EnvKind::Planar2 {
            50
        } else {
            128
        })
    }

    /// Network settings with environment defaults filled in; `None` for
    /// non-neural estimators.
    pub fn network(&self, e: &EstimatorConfig) -> Option<ResolvedNetwork> {
        let (net, jacobian) = match e {
            EstimatorConfig::NeuralJacobian { network, .. } => (network, true),
            EstimatorConfig::NeuralKinematics { network, .. } => (network, false),
            _ => return None,
        };
        let (m, n) = (self.env.feature_dim(), self.env.joint_dim());
        let (layers, epochs) = match self.env {
            EnvKind::SinglePoint7 => (2, 30),
            EnvKind::MultiPoint7 => (4, 40),
            EnvKind::Planar2 => (1, 45),
        };
        let activation = net.activation.unwrap_or(Activation::Relu);
        let weight_decay = net
            .weight_decay
            .unwrap_or(match (jacobian, self.env, activation) {
                (true, _, _) => 0.0,
                (false, EnvKind::MultiPoint7, Activation::Relu) => 1e-5,
                (false, EnvKind::MultiPoint7, Activation::Tanh) => 1e-6,
                (false, _, Activation::Relu) => 1e-4,
                (false, _, Activation::Tanh) => 0.0,
            });
        Some(ResolvedNetwork {
            spec: MlpSpec {
                input_dim: net.embedding.input_dim(n),
                hidden_layers: net.hidden_layers.unwrap_or(layers),
                hidden_width: net.hidden_width,
                output_dim: if jacobian { m * n } else { m },
                activation,
                seed: net.seed,
            },
            train: TrainConfig {
                learning_rate: net.learning_rate,
                batch_size: net.batch_size,
                epochs: net.epochs.unwrap_or(epochs),
                weight_decay,
                validation_fraction: net.validation_fraction,
                seed: net.seed,
                ..TrainConfig::default()
            },
            embedding: net.embedding,
        })
    }

    pub fn thresholds(&self) -> ThresholdSpec {
        self.evaluation
            .thresholds
            .unwrap_or(ThresholdSpec::for_kind(self.env))
    }

    pub fn buckets(&self) -> BucketSpec {
        self.evaluation
            .buckets
            .clone()
            .unwrap_or_else(|| BucketSpec::for_kind(self.env))
    }

    pub fn estimator(&self, name: &str) -> Option<&EstimatorConfig> {
        self.estimators.iter().find(|e| e.name() == name)
    }

    /// Replaces the seeds with `[seed]` and reseeds collection and training.
    pub fn override_seed(&mut self, seed: u64) {
        self.seeds = vec![seed];
        self.collection.seed = seed;
        for e in &mut self.estimators {
            if let EstimatorConfig::NeuralJacobian { network, .. }
            | EstimatorConfig::NeuralKinematics { network, .. } = e
            {
                network.seed = seed;
            }
        }
    }
}
