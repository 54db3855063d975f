use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ou::{OuConfig, OuProcess};
use crate::env::{Env, EnvKind};
use crate::error::{Error, Result};
use crate::linalg::pinv;
use crate::rng::{derive_seed, seeded};

pub const DATASET_MAGIC: &[u8; 4] = b"NJDS";
pub const DATASET_VERSION: u32 = 1;

/// How joint-velocity commands are generated during collection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CollectPolicy {
    /// Pure Ornstein-Uhlenbeck exploration.
    Ou,
    /// Exact inverse-Jacobian controller towards a random per-trajectory
    /// target; with probability `noise_prob` per step the command gets
    /// independent `N(0, noise_std²)` noise on every joint.
    PerturbedController {
        #[serde(default = "default_noise_prob")]
        noise_prob: f64,
        #[serde(default = "default_noise_std")]
        noise_std: f64,
        #[serde(default = "default_gain")]
        gain: f64,
    },
}

fn default_noise_prob() -> f64 {
    0.05
}

fn default_noise_std() -> f64 {
    0.1
}

fn default_gain() -> f64 {
    1.0
}

impl CollectPolicy {
    fn code(&self) -> u8 {
        match self {
            CollectPolicy::Ou => 1,
            CollectPolicy::PerturbedController { .. } => 2,
        }
    }

    fn params(&self) -> [f64; 3] {
        match *self {
            CollectPolicy::Ou => [0.0; 3],
            CollectPolicy::PerturbedController {
                noise_prob,
                noise_std,
                gain,
            } => [noise_prob, noise_std, gain],
        }
    }

    fn from_parts(code: u8, p: [f64; 3]) -> Option<Self> {
        match code {
            1 => Some(CollectPolicy::Ou),
            2 => Some(CollectPolicy::PerturbedController {
                noise_prob: p[0],
                noise_std: p[1],
                gain: p[2],
            }),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollectConfig {
    pub n_traj: usize,
    pub traj_len: usize,
    pub ou: OuConfig,
    pub policy: CollectPolicy,
    pub seed: u64,
}

impl Default for CollectConfig {
    fn default() -> Self {
        Self {
            n_traj: 100,
            traj_len: 100,
            ou: OuConfig::default(),
            policy: CollectPolicy::Ou,
            seed: 0,
        }
    }
}

/// Recorded `(q, x)` samples, stored flat and in trajectory order.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    kind: EnvKind,
    config: CollectConfig,
    traj: Vec<u64>,
    step: Vec<u64>,
    q: Vec<f64>,
    x: Vec<f64>,
}

impl Dataset {
    /// Assembles a dataset from parallel per-sample arrays, validating
    /// dimensions and per-trajectory step contiguity.
    pub fn from_parts(
        kind: EnvKind,
        config: CollectConfig,
        traj: Vec<u64>,
        step: Vec<u64>,
        q: Vec<f64>,
        x: Vec<f64>,
    ) -> Result<Self> {
        let (n, m) = (kind.joint_dim(), kind.feature_dim());
        let len = traj.len();
        if step.len() != len || q.len() != len * n || x.len() != len * m {
            return Err(Error::Format(format!(
                "dataset arrays disagree: {len} samples, {} steps, {} q values (n = {n}), {} x values (m = {m})",
                step.len(),
                q.len(),
                x.len()
            )));
        }
        if q.iter().chain(&x).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset"));
        }
        for i in 0..len {
            let ok = if i > 0 && traj[i] == traj[i - 1] {
                step[i] == step[i - 1] + 1
            } else {
                step[i] == 0
            };
            if !ok {
                return Err(Error::Format(format!(
                    "trajectory {} is not contiguous at sample {i} (step {})",
                    traj[i], step[i]
                )));
            }
        }
        Ok(Self {
            kind,
            config,
            traj,
            step,
            q,
            x,
        })
    }

    /// Samples `x = f(q)` for arbitrary joint vectors, each its own
    /// one-step trajectory. Useful for synthetic data.
    pub fn from_samples(
        kind: EnvKind,
        qs: &[Vec<f64>],
        f: impl Fn(&[f64]) -> Vec<f64>,
    ) -> Result<Self> {
        let q: Vec<f64> = qs.iter().flatten().copied().collect();
        let x: Vec<f64> = qs.iter().flat_map(|q| f(q)).collect();
        let len = qs.len() as u64;
        Self::from_parts(
            kind,
            CollectConfig {
                n_traj: qs.len(),
                traj_len: 1,
                ..CollectConfig::default()
            },
            (0..len).collect(),
            vec![0; qs.len()],
            q,
            x,
        )
    }

    pub fn kind(&self) -> EnvKind {
        self.kind
    }

    pub fn config(&self) -> &CollectConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.traj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traj.is_empty()
    }

    pub fn joint_dim(&self) -> usize {
        self.kind.joint_dim()
    }

    pub fn feature_dim(&self) -> usize {
        self.kind.feature_dim()
    }

    pub fn q(&self, i: usize) -> &[f64] {
        let n = self.joint_dim();
        &self.q[i * n..(i + 1) * n]
    }

    pub fn x(&self, i: usize) -> &[f64] {
        let m = self.feature_dim();
        &self.x[i * m..(i + 1) * m]
    }

    pub fn trajectory(&self, i: usize) -> u64 {
        self.traj[i]
    }

    pub fn step(&self, i: usize) -> u64 {
        self.step[i]
    }

    pub(crate) fn q_flat(&self) -> &[f64] {
        &self.q
    }

    pub(crate) fn x_flat(&self) -> &[f64] {
        &self.x
    }
}

/// Rolls out `cfg.n_traj` trajectories of `cfg.traj_len` steps from the
/// environment's initial pose, recording `(q, x)` before each command.
/// Trajectories use independent derived seeds and run in parallel.
pub fn collect(env: &Env, cfg: &CollectConfig) -> Result<Dataset> {
    if cfg.n_traj == 0 {
        return Err(Error::InvalidArgument("n_traj must be at least 1".into()));
    }
    cfg.ou.validate()?;
    let per_traj: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..cfg.n_traj)
        .into_par_iter()
        .map(|t| rollout(env.clone(), cfg, t as u64))
        .collect();
    let (n, m) = (env.joint_dim(), env.feature_dim());
    let total = cfg.n_traj * cfg.traj_len;
    let mut q = Vec::with_capacity(total * n);
    let mut x = Vec::with_capacity(total * m);
    for r in per_traj {
        let (tq, tx) = r?;
        q.extend(tq);
        x.extend(tx);
    }
    let traj = (0..cfg.n_traj as u64)
        .flat_map(|t| std::iter::repeat_n(t, cfg.traj_len))
        .collect();
    let step = (0..cfg.n_traj)
        .flat_map(|_| 0..cfg.traj_len as u64)
        .collect();
    Dataset::from_parts(env.kind(), *cfg, traj, step, q, x)
}

fn rollout(mut env: Env, cfg: &CollectConfig, traj: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rng = seeded(derive_seed(cfg.seed, traj));
    let home = env.features_at(env.initial_q());
    let target = match cfg.policy {
        CollectPolicy::Ou => home,
        CollectPolicy::PerturbedController { .. } => env.sample_target(&mut rng),
    };
    env.reset(&target)?;
    let mut ou = OuProcess::new(cfg.ou, env.joint_dim());
    let mut qs = Vec::with_capacity(cfg.traj_len * env.joint_dim());
    let mut xs = Vec::with_capacity(cfg.traj_len * env.feature_dim());
    for _ in 0..cfg.traj_len {
        let state = env.state().clone();
        qs.extend_from_slice(&state.q);
        xs.extend_from_slice(&state.x);
        let command = match cfg.policy {
            CollectPolicy::Ou => ou.sample(&mut rng).to_vec(),
            CollectPolicy::PerturbedController {
                noise_prob,
                noise_std,
                gain,
            } => {
                let jp = pinv(&env.jacobian_at(&state.q))?;
                let err: Vec<f64> = state
                    .x_star
                    .iter()
                    .zip(&state.x)
                    .map(|(t, x)| t - x)
                    .collect();
                let mut cmd: Vec<f64> = jp.mul_vec(&err).iter().map(|v| gain * v).collect();
                if rng.random::<f64>() < noise_prob {
                    for c in &mut cmd {
                        *c += noise_std * rng.sample::<f64, _>(StandardNormal);
                    }
                }
                cmd
            }
        };
        env.step(&command)?;
    }
    Ok((qs, xs))
}

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn u8(&mut self, v: u8) -> Result<()> {
        Ok(self.0.write_all(&[v])?)
    }
    fn u32(&mut self, v: u32) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8], what: &'static str) -> Self {
        Self { buf, pos: 0, what }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format(format!(
                "{} truncated at byte {} (needed {n} more)",
                self.what, self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!(
                "{} has {} trailing bytes",
                self.what,
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

/// Binary layout (little endian): magic `NJDS`, `u32` version, `u8` env
/// kind, `u8` policy, `u64` sample count, `u32` joint dim, `u32` feature
/// dim, `u64` seed, `u64` trajectory count, `u64` trajectory length, OU
/// `sigma, mu, theta` and three policy parameters as `f64`, then per sample
/// `u64` trajectory, `u64` step, `q` and `x` as `f64`.
pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = Writer(BufWriter::new(file));
    w.0.write_all(DATASET_MAGIC)?;
    w.u32(DATASET_VERSION)?;
    w.u8(ds.kind.code())?;
    w.u8(ds.config.policy.code())?;
    w.u64(ds.len() as u64)?;
    w.u32(ds.joint_dim() as u32)?;
    w.u32(ds.feature_dim() as u32)?;
    w.u64(ds.config.seed)?;
    w.u64(ds.config.n_traj as u64)?;
    w.u64(ds.config.traj_len as u64)?;
    for v in [ds.config.ou.sigma, ds.config.ou.mu, ds.config.ou.theta] {
        w.f64(v)?;
    }
    for v in ds.config.policy.params() {
        w.f64(v)?;
    }
    for i in 0..ds.len() {
        w.u64(ds.traj[i])?;
        w.u64(ds.step[i])?;
        for &v in ds.q(i).iter().chain(ds.x(i)) {
            w.f64(v)?;
        }
    }
    w.0.flush()?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let bytes = fs::read(path)?;
    let mut r = Reader::new(&bytes, "dataset file");
    if r.take(4)? != DATASET_MAGIC {
        return Err(Error::Format("not a dataset file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != DATASET_VERSION {
        return Err(Error::Format(format!(
            "dataset format version {version}, expected {DATASET_VERSION}"
        )));
    }
    let kind =
        EnvKind::from_code(r.u8()?).ok_or_else(|| Error::Format("unknown env kind".into()))?;
    let policy_code = r.u8()?;
    let len = r.u64()? as usize;
    let n = r.u32()? as usize;
    let m = r.u32()? as usize;
    if n != kind.joint_dim() || m != kind.feature_dim() {
        return Err(Error::Format(format!(
            "header dims (n = {n}, m = {m}) do not match env {} (n = {}, m = {})",
            kind.name(),
            kind.joint_dim(),
            kind.feature_dim()
        )));
    }
    let seed = r.u64()?;
    let n_traj = r.u64()? as usize;
    let traj_len = r.u64()? as usize;
    let ou = OuConfig {
        sigma: r.f64()?,
        mu: r.f64()?,
        theta: r.f64()?,
    };
    let params = [r.f64()?, r.f64()?, r.f64()?];
    let policy = CollectPolicy::from_parts(policy_code, params)
        .ok_or_else(|| Error::Format("unknown collection policy".into()))?;
    let record = 16 + 8 * (n + m);
    let remaining = bytes.len() - r.pos;
    if remaining != len * record {
        return Err(Error::Format(format!(
            "dataset body is {remaining} bytes, expected {} for {len} records",
            len * record
        )));
    }
    let mut traj = Vec::with_capacity(len);
    let mut step = Vec::with_capacity(len);
    let mut q = Vec::with_capacity(len * n);
    let mut x = Vec::with_capacity(len * m);
    for _ in 0..len {
        traj.push(r.u64()?);
        step.push(r.u64()?);
        for _ in 0..n {
            q.push(r.f64()?);
        }
        for _ in 0..m {
            x.push(r.f64()?);
        }
    }
    r.finish()?;
    let config = CollectConfig {
        n_traj,
        traj_len,
        ou,
        policy,
        seed,
    };
    Dataset::from_parts(kind, config, traj, step, q, x)
}

/// CSV with header `traj,step,q1..qn,x1..xm`.
pub fn write_dataset_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    let mut header = vec!["traj".to_string(), "step".to_string()];
    header.extend((1..=ds.joint_dim()).map(|i| format!("q{i}")));
    header.extend((1..=ds.feature_dim()).map(|i| format!("x{i}")));
    writeln!(w, "{}", header.join(","))?;
    for i in 0..ds.len() {
        let mut row = vec![ds.traj[i].to_string(), ds.step[i].to_string()];
        row.extend(ds.q(i).iter().chain(ds.x(i)).map(|v| v.to_string()));
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::SimConfig;

    fn planar_env() -> Env {
        Env::new(EnvKind::Planar2, &SimConfig::default()).unwrap()
    }

    #[test]
    fn counts_and_indices() {
        let cfg = CollectConfig {
            n_traj: 1,
            ..CollectConfig::default()
        };
        let ds = collect(&planar_env(), &cfg).unwrap();
        assert_eq!(ds.len(), 100);
        assert!((0..100).all(|i| ds.trajectory(i) == 0 && ds.step(i) == i as u64));
        assert_eq!(ds.q(0), &[0.0, 0.0]);

        let cfg = CollectConfig {
            n_traj: 100,
            ..CollectConfig::default()
        };
        assert_eq!(collect(&planar_env(), &cfg).unwrap().len(), 10_000);
    }

    #[test]
    fn silent_ou_stays_home() {
        let cfg = CollectConfig {
            n_traj: 3,
            traj_len: 20,
            ou: OuConfig {
                sigma: 0.0,
                ..OuConfig::default()
            },
            ..CollectConfig::default()
        };
        let ds = collect(&planar_env(), &cfg).unwrap();
        assert!((0..ds.len()).all(|i| ds.q(i) == [0.0, 0.0]));
    }

    #[test]
    fn reproducible() {
        let cfg = CollectConfig {
            n_traj: 5,
            seed: 42,
            ..CollectConfig::default()
        };
        let env = Env::new(EnvKind::SinglePoint7, &SimConfig::default()).unwrap();
        assert_eq!(collect(&env, &cfg).unwrap(), collect(&env, &cfg).unwrap());
        let other = CollectConfig { seed: 43, ..cfg };
        assert_ne!(collect(&env, &cfg).unwrap(), collect(&env, &other).unwrap());
    }

    #[test]
    fn perturbed_controller_policy_moves_towards_targets() {
        let cfg = CollectConfig {
            n_traj: 4,
            traj_len: 60,
            policy: CollectPolicy::PerturbedController {
                noise_prob: 0.05,
                noise_std: 0.1,
                gain: 1.0,
            },
            seed: 3,
            ..CollectConfig::default()
        };
        let env = Env::new(EnvKind::SinglePoint7, &SimConfig::default()).unwrap();
        let ds = collect(&env, &cfg).unwrap();
        assert_eq!(ds.len(), 240);
        assert_eq!(ds, collect(&env, &cfg).unwrap());
        // The arm leaves home in every trajectory.
        for t in 0..4 {
            let last = t * 60 + 59;
            assert!(ds.q(last).iter().any(|v| v.abs() > 1e-3));
        }
    }

    #[test]
    fn round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.njds");
        let cfg = CollectConfig {
            n_traj: 3,
            traj_len: 10,
            seed: 9,
            ..CollectConfig::default()
        };
        let env = Env::new(EnvKind::MultiPoint7, &SimConfig::default()).unwrap();
        let ds = collect(&env, &cfg).unwrap();
        save_dataset(&ds, &path).unwrap();
        assert_eq!(load_dataset(&path).unwrap(), ds);

        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        assert!(matches!(load_dataset(&path), Err(Error::Format(_))));

        let mut bad = bytes.clone();
        bad[4] = 99;
        fs::write(&path, &bad).unwrap();
        assert!(load_dataset(&path).is_err());
    }

    #[test]
    fn header_dims_must_match_kind() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.njds");
        let env = Env::new(EnvKind::SinglePoint7, &SimConfig::default()).unwrap();
        let ds = collect(
            &env,
            &CollectConfig {
                n_traj: 1,
                traj_len: 2,
                ..CollectConfig::default()
            },
        )
        .unwrap();
        save_dataset(&ds, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        // Relabel as planar2 while rows still carry 7 joints.
        bytes[8] = EnvKind::Planar2.code();
        fs::write(&path, &bytes).unwrap();
        let err = load_dataset(&path).unwrap_err();
        assert!(
            matches!(err, Error::Format(ref s) if s.contains("header dims")),
            "{err}"
        );
    }

    #[test]
    fn csv_export() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let ds = collect(
            &planar_env(),
            &CollectConfig {
                n_traj: 2,
                traj_len: 3,
                ..CollectConfig::default()
            },
        )
        .unwrap();
        write_dataset_csv(&ds, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "traj,step,q1,q2,x1,x2");
        assert_eq!(lines.len(), 7);
        assert!(lines[4].starts_with("1,0,"));
    }
}
