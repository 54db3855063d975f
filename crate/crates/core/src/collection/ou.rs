use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ornstein-Uhlenbeck parameters. One process step per control step, so
/// `theta` and `sigma` are per-step quantities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OuConfig {
    pub sigma: f64,
    pub mu: f64,
    pub theta: f64,
}

impl Default for OuConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            mu: 0.0,
            theta: 0.15,
        }
    }
}

impl OuConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) || !(0.0..=1.0).contains(&self.theta) || !self.mu.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "OU parameters need sigma >= 0 and theta in [0, 1], got {self:?}"
            )));
        }
        Ok(())
    }
}

/// `x ← x + θ(μ − x) + σξ` with `ξ` standard normal per component.
pub fn ou_step<R: Rng + ?Sized>(state: &[f64], cfg: &OuConfig, rng: &mut R) -> Vec<f64> {
    state
        .iter()
        .map(|&x| {
            let xi: f64 = rng.sample(StandardNormal);
            x + cfg.theta * (cfg.mu - x) + cfg.sigma * xi
        })
        .collect()
}

/// Stateful wrapper over [`ou_step`], starting at zero.
#[derive(Clone, Debug)]
pub struct OuProcess {
    cfg: OuConfig,
    state: Vec<f64>,
}

impl OuProcess {
    pub fn new(cfg: OuConfig, dim: usize) -> Self {
        Self {
            cfg,
            state: vec![0.0; dim],
        }
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[f64] {
        self.state = ou_step(&self.state, &self.cfg, rng);
        &self.state
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|v| *v = 0.0);
    }
}
