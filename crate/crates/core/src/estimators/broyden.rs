use serde::{Deserialize, Serialize};

use crate::env::Env;
use crate::error::{Error, Result};
use crate::linalg::{dot, Mat};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BroydenConfig {
    pub alpha: f64,
    /// Updates are taken only when `‖Δq‖² ≥ gate`.
    pub gate: f64,
    /// Joint displacement of each initial probing motion, radians.
    pub probe_angle: f64,
}

impl Default for BroydenConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gate: 0.01,
            probe_angle: 0.1,
        }
    }
}

impl BroydenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0)
            || !(self.gate >= 0.0)
            || !self.probe_angle.is_finite()
            || self.probe_angle == 0.0
        {
            return Err(Error::InvalidArgument(format!(
                "broyden needs alpha > 0, gate >= 0 and a nonzero probe angle, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Running Broyden estimate and the last observation it saw.
#[derive(Clone, Debug, PartialEq)]
pub struct BroydenState {
    pub j_hat: Mat,
    pub alpha: f64,
    pub gate: f64,
    pub last: Option<(Vec<f64>, Vec<f64>)>,
}

impl BroydenState {
    pub fn new(j_hat: Mat, cfg: &BroydenConfig) -> Self {
        Self {
            j_hat,
            alpha: cfg.alpha,
            gate: cfg.gate,
            last: None,
        }
    }

    /// Updates from the change since the previous observation, then records
    /// `(q, x)` as the new reference.
    pub fn observe(&mut self, q: &[f64], x: &[f64]) {
        if let Some((lq, lx)) = &self.last {
            let dq: Vec<f64> = q.iter().zip(lq).map(|(a, b)| a - b).collect();
            let dx: Vec<f64> = x.iter().zip(lx).map(|(a, b)| a - b).collect();
            broyden_update(self, &dq, &dx);
        }
        self.last = Some((q.to_vec(), x.to_vec()));
    }
}

/// Finite-difference Jacobian from one probing motion per joint, each
/// starting from the current pose. The pose is restored afterwards.
pub fn broyden_init(env: &mut Env, probe_angle: f64) -> Result<Mat> {
    let q0 = env.state().q.clone();
    let x0 = env.state().x.clone();
    let (m, n) = (env.feature_dim(), env.joint_dim());
    let mut j = Mat::zeros(m, n);
    for col in 0..n {
        let mut q = q0.clone();
        q[col] += probe_angle;
        let delta = q[col] - q0[col];
        if !(delta.abs() > 1e-12) {
            env.set_joints(&q0)?;
            return Err(Error::DegenerateProbe { joint: col, delta });
        }
        let x = env.set_joints(&q)?.x.clone();
        for r in 0..m {
            j[(r, col)] = (x[r] - x0[r]) / delta;
        }
    }
    env.set_joints(&q0)?;
    Ok(j)
}

/// `Ĵ ← Ĵ + α (de − Ĵ dq) dqᵀ / ‖dq‖²`, skipped when `‖dq‖² < gate`.
pub fn broyden_update(state: &mut BroydenState, dq: &[f64], de: &[f64]) {
    let nn = dot(dq, dq);
    if !(nn >= state.gate) || nn == 0.0 {
        return;
    }
    let pred = state.j_hat.mul_vec(dq);
    let n = dq.len();
    let c = state.alpha / nn;
    let data = state.j_hat.as_mut_slice();
    for (i, (&d, &p)) in de.iter().zip(&pred).enumerate() {
        let r = c * (d - p);
        for (v, &q) in data[i * n..(i + 1) * n].iter_mut().zip(dq) {
            *v += r * q;
        }
    }
}
