//! Inverse-Jacobian Cartesian control and closed-loop evaluation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::Env;
use crate::error::{Error, Result};
use crate::estimators::{Estimator, EstimatorContext};
use crate::linalg::{pinv, Mat};
use crate::rng::{derive_seed, seeded};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub lambda: f64,
    pub max_steps: usize,
    pub null_space_enabled: bool,
    /// Secondary objective projected into the null space; zeros when absent.
    pub y: Option<Vec<f64>>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            max_steps: 200,
            null_space_enabled: false,
            y: None,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument(
                "max_steps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// `λ [J† (x* − x) + (I − J† J) y]`, the null-space term only when enabled.
pub fn control_step(
    j: &Mat,
    x: &[f64],
    x_star: &[f64],
    cfg: &ControllerConfig,
) -> Result<Vec<f64>> {
    let (m, n) = j.shape();
    if x.len() != m || x_star.len() != m {
        return Err(Error::DimensionMismatch {
            context: "controller features",
            expected: m,
            got: x.len().max(x_star.len()),
        });
    }
    let jp = pinv(j)?;
    let err: Vec<f64> = x_star.iter().zip(x).map(|(t, v)| t - v).collect();
    let mut dq = jp.mul_vec(&err);
    if cfg.null_space_enabled {
        if let Some(y) = &cfg.y {
            if y.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "null-space vector",
                    expected: n,
                    got: y.len(),
                });
            }
            let proj = jp.mul_vec(&j.mul_vec(y));
            for ((d, yi), pi) in dq.iter_mut().zip(y).zip(&proj) {
                *d += yi - pi;
            }
        }
    }
    dq.iter_mut().for_each(|v| *v *= cfg.lambda);
    Ok(dq)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    /// Joints and features before the command.
    pub q: Vec<f64>,
    pub x: Vec<f64>,
    pub j_hat: Mat,
    /// Exact Jacobian at `q`, kept for analysis.
    pub j_true: Mat,
    /// Distance to the target after the command.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalTrace {
    pub estimator: String,
    pub seed: u64,
    pub target_id: usize,
    pub target: Vec<f64>,
    pub initial_distance: f64,
    pub steps: Vec<StepRecord>,
    /// Set when an estimator or controller error ended the run early.
    pub failure: Option<String>,
}

impl EvalTrace {
    pub fn final_distance(&self) -> f64 {
        self.steps
            .last()
            .map_or(self.initial_distance, |s| s.distance)
    }
}

/// Resets `env` to `target` and runs the closed loop for `cfg.max_steps`
/// steps without stopping early.
pub fn run_trajectory(
    env: &mut Env,
    estimator: &Estimator,
    target: &[f64],
    cfg: &ControllerConfig,
) -> Result<EvalTrace> {
    cfg.validate()?;
    env.reset(target)?;
    let mut trace = EvalTrace {
        estimator: estimator.id(),
        seed: 0,
        target_id: 0,
        target: target.to_vec(),
        initial_distance: env.distance_to_target(),
        steps: Vec::with_capacity(cfg.max_steps),
        failure: None,
    };
    let mut session = match estimator.start(env) {
        Ok(s) => s,
        Err(e) => {
            trace.failure = Some(e.to_string());
            return Ok(trace);
        }
    };
    for _ in 0..cfg.max_steps {
        let state = env.state().clone();
        let outcome = session
            .estimate(&EstimatorContext::from_state(&state))
            .and_then(|j_hat| Ok((control_step(&j_hat, &state.x, &state.x_star, cfg)?, j_hat)))
            .and_then(|(dq, j_hat)| {
                env.step(&dq)?;
                Ok(j_hat)
            });
        match outcome {
            Ok(j_hat) => trace.steps.push(StepRecord {
                j_true: env.jacobian_at(&state.q),
                q: state.q,
                x: state.x,
                j_hat,
                distance: env.distance_to_target(),
            }),
            Err(e) => {
                trace.failure = Some(e.to_string());
                break;
            }
        }
    }
    Ok(trace)
}

/// `count` targets from joints drawn uniformly within the environment's
/// bounds, reproducible from `seed`.
pub fn sample_targets(env: &Env, seed: u64, count: usize) -> Vec<Vec<f64>> {
    let mut rng = seeded(derive_seed(seed, 0x7a26));
    (0..count).map(|_| env.sample_target(&mut rng)).collect()
}

/// Runs one trajectory per target in parallel; output order follows
/// `targets`.
pub fn evaluate(
    env: &Env,
    estimator: &Estimator,
    targets: &[Vec<f64>],
    seed: u64,
    cfg: &ControllerConfig,
) -> Result<Vec<EvalTrace>> {
    targets
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let mut env = env.clone();
            let mut trace = run_trajectory(&mut env, estimator, t, cfg)?;
            trace.seed = seed;
            trace.target_id = i;
            Ok(trace)
        })
        .collect()
}
