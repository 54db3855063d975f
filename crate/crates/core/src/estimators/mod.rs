//! Jacobian estimators behind one interface.
//!
//! An [`Estimator`] is immutable and shareable between threads. Each
//! trajectory calls [`Estimator::start`] to obtain a [`Session`] holding any
//! per-trajectory state (only Broyden has some).

mod broyden;
mod llknn;

use std::sync::Arc;

pub use broyden::{broyden_init, broyden_update, BroydenConfig, BroydenState};
pub use llknn::{llknn_estimate, LlKnnMemory};

use crate::collection::Dataset;
use crate::env::{Env, EnvKind, EnvState, Kinematics};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::neural::{ModelKind, NeuralModel};

/// Everything an estimator may read at a control step.
#[derive(Clone, Copy, Debug)]
pub struct EstimatorContext<'a> {
    pub q: &'a [f64],
    pub x: &'a [f64],
    pub x_star: &'a [f64],
    pub q_dot: &'a [f64],
}

impl<'a> EstimatorContext<'a> {
    pub fn from_state(s: &'a EnvState) -> Self {
        Self {
            q: &s.q,
            x: &s.x,
            x_star: &s.x_star,
            q_dot: &s.q_dot,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Estimator {
    /// The exact kinematic Jacobian.
    True(Kinematics),
    Broyden(BroydenConfig),
    LlKnn {
        memory: Arc<LlKnnMemory>,
        k: usize,
    },
    NeuralJacobian(Arc<NeuralModel>),
    NeuralKinematics(Arc<NeuralModel>),
}

impl Estimator {
    pub fn true_for(kind: EnvKind) -> Self {
        Estimator::True(Kinematics::for_kind(kind))
    }

    pub fn llknn(dataset: &Dataset, k: usize) -> Result<Self> {
        let memory = LlKnnMemory::new(dataset);
        if k < 2 || memory.len() <= k {
            return Err(Error::DatasetTooSmall {
                size: memory.len(),
                k,
            });
        }
        Ok(Estimator::LlKnn {
            memory: Arc::new(memory),
            k,
        })
    }

    /// Wraps a trained model in the estimator matching its output.
    pub fn neural(model: Arc<NeuralModel>) -> Self {
        match model.kind {
            ModelKind::Jacobian => Estimator::NeuralJacobian(model),
            ModelKind::Kinematics => Estimator::NeuralKinematics(model),
        }
    }

    /// Short identifier used in result files.
    pub fn id(&self) -> String {
        match self {
            Estimator::True(_) => "true".into(),
            Estimator::Broyden(_) => "broyden".into(),
            Estimator::LlKnn { k, .. } => format!("llknn_k{k}"),
            Estimator::NeuralJacobian(m) if m.beta > 0.0 => "bi_nj".into(),
            Estimator::NeuralJacobian(_) => "nj".into(),
            Estimator::NeuralKinematics(m) => format!("nk_{}", activation_name(m)),
        }
    }

    /// Environment the estimator is tied to, if any.
    pub fn env_kind(&self) -> Option<EnvKind> {
        match self {
            Estimator::True(_) | Estimator::Broyden(_) => None,
            Estimator::LlKnn { memory, .. } => Some(memory.kind()),
            Estimator::NeuralJacobian(m) | Estimator::NeuralKinematics(m) => Some(m.env),
        }
    }

    /// Begins a trajectory. `env` must already be reset; Broyden probes it
    /// and restores the pose.
    pub fn start(&self, env: &mut Env) -> Result<Session<'_>> {
        if let Some(kind) = self.env_kind() {
            if kind != env.kind() {
                return Err(Error::InvalidArgument(format!(
                    "estimator {} was built for {}, environment is {}",
                    self.id(),
                    kind.name(),
                    env.kind().name()
                )));
            }
        }
        if let Estimator::True(k) = self {
            if k.dims() != (env.feature_dim(), env.joint_dim()) {
                return Err(Error::InvalidArgument(
                    "true estimator kinematics do not match the environment".into(),
                ));
            }
        }
        let broyden = match self {
            Estimator::Broyden(cfg) => {
                cfg.validate()?;
                Some(BroydenState::new(broyden_init(env, cfg.probe_angle)?, cfg))
            }
            _ => None,
        };
        Ok(Session {
            estimator: self,
            broyden,
        })
    }
}

fn activation_name(m: &NeuralModel) -> &'static str {
    match m.mlp.spec().activation {
        crate::neural::Activation::Relu => "relu",
        crate::neural::Activation::Tanh => "tanh",
    }
}

/// Per-trajectory view of an estimator.
#[derive(Clone, Debug)]
pub struct Session<'a> {
    estimator: &'a Estimator,
    broyden: Option<BroydenState>,
}

impl Session<'_> {
    /// The estimator's Jacobian at `ctx`. Broyden first folds in the change
    /// since its previous call.
    pub fn estimate(&mut self, ctx: &EstimatorContext) -> Result<Mat> {
        match self.estimator {
            Estimator::True(k) => Ok(k.jacobian(ctx.q)),
            Estimator::Broyden(_) => {
                let s = self.broyden.as_mut().expect("broyden session has state");
                s.observe(ctx.q, ctx.x);
                Ok(s.j_hat.clone())
            }
            Estimator::LlKnn { memory, k } => memory.estimate(ctx.q, *k),
            Estimator::NeuralJacobian(m) => neural_jacobian_estimate(m, ctx),
            Estimator::NeuralKinematics(m) => neural_kinematics_estimate(m, ctx),
        }
    }

    pub fn broyden_state(&self) -> Option<&BroydenState> {
        self.broyden.as_ref()
    }
}

/// Network output at the joint embedding, read row-major as `m × n`.
pub fn neural_jacobian_estimate(model: &NeuralModel, ctx: &EstimatorContext) -> Result<Mat> {
    if model.kind != ModelKind::Jacobian {
        return Err(Error::InvalidArgument("expected a Jacobian model".into()));
    }
    model.jacobian(ctx.q)
}

/// Input derivative of the forward model, mapped back to joint space.
pub fn neural_kinematics_estimate(model: &NeuralModel, ctx: &EstimatorContext) -> Result<Mat> {
    if model.kind != ModelKind::Kinematics {
        return Err(Error::InvalidArgument("expected a kinematics model".into()));
    }
    model.jacobian(ctx.q)
}
