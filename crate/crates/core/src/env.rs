//! Kinematic simulators.
//!
//! Commands are joint velocities integrated with an explicit Euler step; there
//! are no dynamics, joint limits or velocity clamps.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{point_features, true_jacobian, DhChain, PlanarArm2, PointSet};
use crate::linalg::Mat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    /// 7-DOF Kinova chain, end-effector position only.
    SinglePoint7,
    /// 7-DOF Kinova chain, end-effector plus three orientation points.
    MultiPoint7,
    /// Planar two-link arm.
    Planar2,
}

impl EnvKind {
    pub const ALL: [EnvKind; 3] = [
        EnvKind::SinglePoint7,
        EnvKind::MultiPoint7,
        EnvKind::Planar2,
    ];

    /// Task-space dimension `m`.
    pub fn feature_dim(self) -> usize {
        match self {
            EnvKind::SinglePoint7 => 3,
            EnvKind::MultiPoint7 => 12,
            EnvKind::Planar2 => 2,
        }
    }

    /// Joint-space dimension `n`.
    pub fn joint_dim(self) -> usize {
        match self {
            EnvKind::SinglePoint7 | EnvKind::MultiPoint7 => 7,
            EnvKind::Planar2 => 2,
        }
    }

    /// Length of the packed observation `(x, cos q, sin q, q̇, x*)`.
    pub fn state_dim(self) -> usize {
        2 * self.feature_dim() + 3 * self.joint_dim()
    }

    /// Coordinates per tracked point.
    pub fn point_dim(self) -> usize {
        match self {
            EnvKind::Planar2 => 2,
            _ => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::SinglePoint7 => "single_point7",
            EnvKind::MultiPoint7 => "multi_point7",
            EnvKind::Planar2 => "planar2",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            EnvKind::SinglePoint7 => 1,
            EnvKind::MultiPoint7 => 2,
            EnvKind::Planar2 => 3,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(EnvKind::SinglePoint7),
            2 => Some(EnvKind::MultiPoint7),
            3 => Some(EnvKind::Planar2),
            _ => None,
        }
    }

    /// Per-joint bounds for uniform target sampling.
    pub fn target_joint_bounds(self) -> Vec<(f64, f64)> {
        match self {
            EnvKind::Planar2 => vec![(-2.0, 2.0), (-1.5, 1.5)],
            _ => vec![(-PI, PI); self.joint_dim()],
        }
    }
}

/// Sum of per-point Euclidean distances (a single distance when only one
/// point is tracked).
pub fn distance(kind: EnvKind, x: &[f64], x_star: &[f64]) -> f64 {
    x.chunks(kind.point_dim())
        .zip(x_star.chunks(kind.point_dim()))
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt()
        })
        .sum()
}

/// The forward model behind an environment.
#[derive(Clone, Debug)]
pub enum Kinematics {
    Chain { chain: DhChain, points: PointSet },
    Planar(PlanarArm2),
}

impl Kinematics {
    pub fn for_kind(kind: EnvKind) -> Self {
        match kind {
            EnvKind::SinglePoint7 => Kinematics::Chain {
                chain: DhChain::kinova_gen3(),
                points: PointSet::single(),
            },
            EnvKind::MultiPoint7 => Kinematics::Chain {
                chain: DhChain::kinova_gen3(),
                points: PointSet::multi(),
            },
            EnvKind::Planar2 => Kinematics::Planar(PlanarArm2::default()),
        }
    }

    pub fn features(&self, q: &[f64]) -> Vec<f64> {
        match self {
            Kinematics::Chain { chain, points } => {
                point_features(chain, q, points).expect("joint dimension validated by Env")
            }
            Kinematics::Planar(arm) => arm.fk([q[0], q[1]]).to_vec(),
        }
    }

    pub fn jacobian(&self, q: &[f64]) -> Mat {
        match self {
            Kinematics::Chain { chain, points } => {
                true_jacobian(chain, q, points).expect("joint dimension validated by Env")
            }
            Kinematics::Planar(arm) => arm.jacobian([q[0], q[1]]),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            Kinematics::Chain { chain, points } => (points.feature_dim(), chain.joint_count()),
            Kinematics::Planar(_) => (2, 2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Integration step in seconds.
    pub dt: f64,
    /// Pose every trajectory starts from; zeros when absent.
    pub initial_q: Option<Vec<f64>>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            initial_q: None,
        }
    }
}

/// Observation of the robot. `q` is carried unwrapped alongside its
/// trigonometric features.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvState {
    pub q: Vec<f64>,
    pub x: Vec<f64>,
    pub cos_q: Vec<f64>,
    pub sin_q: Vec<f64>,
    pub q_dot: Vec<f64>,
    pub x_star: Vec<f64>,
}

impl EnvState {
    /// `(x, cos q, sin q, q̇, x*)` concatenated.
    pub fn packed(&self) -> Vec<f64> {
        [
            &self.x[..],
            &self.cos_q,
            &self.sin_q,
            &self.q_dot,
            &self.x_star,
        ]
        .concat()
    }
}

#[derive(Clone, Debug)]
pub struct Env {
    kind: EnvKind,
    kinematics: Kinematics,
    dt: f64,
    initial_q: Vec<f64>,
    state: EnvState,
}

impl Env {
    pub fn new(kind: EnvKind, sim: &SimConfig) -> Result<Self> {
        Self::with_kinematics(kind, Kinematics::for_kind(kind), sim)
    }

    /// Environment over custom kinematics, which must match the kind's
    /// dimensions.
    pub fn with_kinematics(kind: EnvKind, kinematics: Kinematics, sim: &SimConfig) -> Result<Self> {
        let (m, n) = kinematics.dims();
        if m != kind.feature_dim() {
            return Err(Error::DimensionMismatch {
                context: "environment feature dimension",
                expected: kind.feature_dim(),
                got: m,
            });
        }
        if n != kind.joint_dim() {
            return Err(Error::DimensionMismatch {
                context: "environment joint dimension",
                expected: kind.joint_dim(),
                got: n,
            });
        }
        if !(sim.dt > 0.0 && sim.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "dt must be positive, got {}",
                sim.dt
            )));
        }
        let initial_q = sim.initial_q.clone().unwrap_or_else(|| vec![0.0; n]);
        if initial_q.len() != n {
            return Err(Error::DimensionMismatch {
                context: "initial_q",
                expected: n,
                got: initial_q.len(),
            });
        }
        if initial_q.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial_q"));
        }
        let x = kinematics.features(&initial_q);
        let state = EnvState {
            cos_q: initial_q.iter().map(|v| v.cos()).collect(),
            sin_q: initial_q.iter().map(|v| v.sin()).collect(),
            q_dot: vec![0.0; n],
            x_star: x.clone(),
            x,
            q: initial_q.clone(),
        };
        Ok(Self {
            kind,
            kinematics,
            dt: sim.dt,
            initial_q,
            state,
        })
    }

    pub fn kind(&self) -> EnvKind {
        self.kind
    }

    pub fn kinematics(&self) -> &Kinematics {
        &self.kinematics
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn initial_q(&self) -> &[f64] {
        &self.initial_q
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn feature_dim(&self) -> usize {
        self.kind.feature_dim()
    }

    pub fn joint_dim(&self) -> usize {
        self.kind.joint_dim()
    }

    pub fn reset(&mut self, target: &[f64]) -> Result<&EnvState> {
        if target.len() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                context: "target",
                expected: self.feature_dim(),
                got: target.len(),
            });
        }
        if target.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("target"));
        }
        let q0 = self.initial_q.clone();
        self.place(q0);
        self.state.q_dot.iter_mut().for_each(|v| *v = 0.0);
        self.state.x_star = target.to_vec();
        Ok(&self.state)
    }

    /// `q ← q + dt·q̇`.
    pub fn step(&mut self, q_dot: &[f64]) -> Result<&EnvState> {
        if q_dot.len() != self.joint_dim() {
            return Err(Error::DimensionMismatch {
                context: "joint velocity command",
                expected: self.joint_dim(),
                got: q_dot.len(),
            });
        }
        if q_dot.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("joint velocity command"));
        }
        let q: Vec<f64> = self
            .state
            .q
            .iter()
            .zip(q_dot)
            .map(|(q, v)| q + self.dt * v)
            .collect();
        self.place(q);
        self.state.q_dot = q_dot.to_vec();
        Ok(&self.state)
    }

    /// Moves the robot to `q` directly, keeping the target. Used for probing
    /// motions whose end pose must be restored exactly.
    pub fn set_joints(&mut self, q: &[f64]) -> Result<&EnvState> {
        if q.len() != self.joint_dim() {
            return Err(Error::DimensionMismatch {
                context: "joint positions",
                expected: self.joint_dim(),
                got: q.len(),
            });
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("joint positions"));
        }
        self.place(q.to_vec());
        Ok(&self.state)
    }

    fn place(&mut self, q: Vec<f64>) {
        self.state.x = self.kinematics.features(&q);
        self.state.cos_q = q.iter().map(|v| v.cos()).collect();
        self.state.sin_q = q.iter().map(|v| v.sin()).collect();
        self.state.q = q;
    }

    pub fn features_at(&self, q: &[f64]) -> Vec<f64> {
        self.kinematics.features(q)
    }

    /// Exact Jacobian at `q`.
    pub fn jacobian_at(&self, q: &[f64]) -> Mat {
        self.kinematics.jacobian(q)
    }

    pub fn distance_to_target(&self) -> f64 {
        distance(self.kind, &self.state.x, &self.state.x_star)
    }

    pub fn sample_target_joints<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.kind
            .target_joint_bounds()
            .into_iter()
            .map(|(lo, hi)| rng.random_range(lo..hi))
            .collect()
    }

    pub fn target_for_joints(&self, q_star: &[f64]) -> Vec<f64> {
        self.kinematics.features(q_star)
    }

    /// Target from joints drawn uniformly within the kind's bounds.
    pub fn sample_target<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let q_star = self.sample_target_joints(rng);
        self.target_for_joints(&q_star)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::forward_kinematics;
    use crate::rng::seeded;

    #[test]
    fn planar_reset() {
        let mut env = Env::new(EnvKind::Planar2, &SimConfig::default()).unwrap();
        let s = env.reset(&[0.3, 0.2]).unwrap().clone();
        assert_eq!(s.q, vec![0.0, 0.0]);
        assert!((s.x[0] - 0.4917).abs() < 1e-15 && s.x[1] == 0.0);
        assert_eq!(s.x_star, vec![0.3, 0.2]);
        assert!(env.reset(&[0.3]).is_err());
    }

    #[test]
    fn packed_state_lengths() {
        for (kind, len) in [
            (EnvKind::SinglePoint7, 27),
            (EnvKind::MultiPoint7, 45),
            (EnvKind::Planar2, 10),
        ] {
            let mut env = Env::new(kind, &SimConfig::default()).unwrap();
            let target = vec![0.0; kind.feature_dim()];
            assert_eq!(env.reset(&target).unwrap().packed().len(), len);
            assert_eq!(kind.state_dim(), len);
        }
    }

    #[test]
    fn euler_steps() {
        let mut env = Env::new(EnvKind::Planar2, &SimConfig::default()).unwrap();
        env.reset(&[0.0, 0.0]).unwrap();
        let before = env.state().clone();
        let s = env.step(&[0.0, 0.0]).unwrap();
        assert_eq!(s, &before);

        let s = env.step(&[1.0, 0.0]).unwrap();
        assert_eq!(s.q, vec![0.05, 0.0]);
        assert_eq!(s.q_dot, vec![1.0, 0.0]);

        env.reset(&[0.0, 0.0]).unwrap();
        for _ in 0..20 {
            env.step(&[1.0, 0.0]).unwrap();
        }
        assert!((env.state().q[0] - 1.0).abs() < 1e-12);
        assert!(env.step(&[f64::NAN, 0.0]).is_err());
        assert!(env.step(&[1.0]).is_err());
    }

    #[test]
    fn features_stay_consistent_with_kinematics() {
        let mut env = Env::new(EnvKind::MultiPoint7, &SimConfig::default()).unwrap();
        env.reset(&[0.0; 12]).unwrap();
        let mut rng = seeded(3);
        let chain = DhChain::kinova_gen3();
        for _ in 0..50 {
            let cmd: Vec<f64> = (0..7).map(|_| rng.random_range(-2.0..2.0)).collect();
            env.step(&cmd).unwrap();
            let s = env.state();
            let x = point_features(&chain, &s.q, &PointSet::multi()).unwrap();
            assert_eq!(x, s.x);
            for (c, sn) in s.cos_q.iter().zip(&s.sin_q) {
                assert!((c * c + sn * sn - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_rollouts() {
        let run = || {
            let mut env = Env::new(EnvKind::SinglePoint7, &SimConfig::default()).unwrap();
            env.reset(&[0.0; 3]).unwrap();
            let mut rng = seeded(99);
            for _ in 0..30 {
                let cmd: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
                env.step(&cmd).unwrap();
            }
            env.state().clone()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn targets() {
        let env = Env::new(EnvKind::SinglePoint7, &SimConfig::default()).unwrap();
        let t = env.target_for_joints(&[0.0; 7]);
        let fk = forward_kinematics(&DhChain::kinova_gen3(), &[0.0; 7]).unwrap();
        assert_eq!(t, vec![fk[(0, 3)], fk[(1, 3)], fk[(2, 3)]]);

        let planar = Env::new(EnvKind::Planar2, &SimConfig::default()).unwrap();
        assert!((planar.target_for_joints(&[0.0, 0.0])[0] - 0.4917).abs() < 1e-15);

        let draw = |seed| {
            let mut rng = seeded(seed);
            (0..5)
                .map(|_| env.sample_target(&mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(4), draw(4));
        assert_ne!(draw(4), draw(5));

        let mut rng = seeded(6);
        for _ in 0..100 {
            let q = planar.sample_target_joints(&mut rng);
            assert!((-2.0..2.0).contains(&q[0]) && (-1.5..1.5).contains(&q[1]));
        }
    }

    #[test]
    fn distances() {
        assert_eq!(
            distance(EnvKind::SinglePoint7, &[0.0; 3], &[3.0, 4.0, 0.0]),
            5.0
        );
        let x = vec![0.0; 12];
        let mut xs = x.clone();
        for p in 0..4 {
            xs[3 * p + p % 3] = 0.1;
        }
        assert!((distance(EnvKind::MultiPoint7, &x, &xs) - 0.4).abs() < 1e-15);
        assert_eq!(distance(EnvKind::Planar2, &[1.0, 1.0], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn custom_kinematics_must_match_kind() {
        let k = Kinematics::Chain {
            chain: DhChain::planar(&PlanarArm2::default()),
            points: PointSet::single(),
        };
        assert!(Env::with_kinematics(EnvKind::SinglePoint7, k, &SimConfig::default()).is_err());
        let bad_dt = SimConfig {
            dt: 0.0,
            ..SimConfig::default()
        };
        assert!(Env::new(EnvKind::Planar2, &bad_dt).is_err());
    }
}
