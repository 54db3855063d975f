use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::adam::{adam_step, AdamState, TrainConfig};
use super::embedding::JointEmbedding;
use super::mlp::{Gradients, Mlp, MlpSpec};
use super::objectives::{hyperplane_backprop, mse_backprop};
use crate::collection::{Dataset, PairSet};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    /// Parameters with the lowest validation loss seen, including the
    /// initialisation (epoch 0).
    pub model: Mlp,
    pub log: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

/// Seeded shuffle of `0..count` split into `(train, validation)`, the
/// validation part being the last `fraction` of the permutation.
pub fn split_indices(count: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..count).collect();
    idx.shuffle(&mut seeded(derive_seed(seed, 0)));
    let n_val = ((count as f64) * fraction).round() as usize;
    let n_val = n_val.clamp(usize::from(count > 1), count.saturating_sub(1));
    let val = idx.split_off(count - n_val);
    (idx, val)
}

/// Per-sample objective: returns the loss and accumulates the parameter
/// gradient, or `Ok(None)` when the sample has to be skipped.
trait Objective: Sync {
    fn sample(&self, mlp: &Mlp, i: usize, grads: Option<&mut Gradients>) -> Result<Option<f64>>;
}

fn batch_gradient<O: Objective>(
    obj: &O,
    mlp: &Mlp,
    batch: &[usize],
    wd: f64,
) -> Result<(f64, Gradients)> {
    let parts: Vec<Result<Option<(f64, Gradients)>>> = batch
        .par_iter()
        .map(|&i| {
            let mut g = Gradients::zeros_like(mlp);
            Ok(obj.sample(mlp, i, Some(&mut g))?.map(|l| (l, g)))
        })
        .collect();
    let mut total = Gradients::zeros_like(mlp);
    let mut loss = 0.0;
    let mut used = 0usize;
    for p in parts {
        if let Some((l, g)) = p? {
            loss += l;
            used += 1;
            for (t, s) in total.layers.iter_mut().zip(&g.layers) {
                t.weights = &t.weights + &s.weights;
                t.bias.iter_mut().zip(&s.bias).for_each(|(a, b)| *a += b);
            }
        }
    }
    if used == 0 {
        return Err(Error::RankFailure { anchor: batch[0] });
    }
    total.scale(1.0 / used as f64);
    total.add_weight_decay(mlp, wd);
    Ok((loss / used as f64, total))
}

fn mean_loss<O: Objective>(obj: &O, mlp: &Mlp, idx: &[usize]) -> Result<f64> {
    let losses: Vec<Result<Option<f64>>> =
        idx.par_iter().map(|&i| obj.sample(mlp, i, None)).collect();
    let mut sum = 0.0;
    let mut used = 0usize;
    for l in losses {
        if let Some(l) = l? {
            sum += l;
            used += 1;
        }
    }
    Ok(if used == 0 {
        f64::INFINITY
    } else {
        sum / used as f64
    })
}

fn run<O: Objective>(
    obj: &O,
    count: usize,
    spec: MlpSpec,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if count < 2 {
        return Err(Error::DatasetTooSmall { size: count, k: 2 });
    }
    let mut mlp = Mlp::new(spec)?;
    let (mut train, val) = split_indices(count, cfg.validation_fraction, cfg.seed);
    let init_val = mean_loss(obj, &mlp, &val)?;
    let mut log = vec![EpochLog {
        epoch: 0,
        train_loss: mean_loss(obj, &mlp, &train)?,
        val_loss: init_val,
    }];
    let mut best = (mlp.clone(), 0, init_val);
    let mut adam = AdamState::new(&mlp);
    for epoch in 1..=cfg.epochs {
        train.shuffle(&mut seeded(derive_seed(cfg.seed, epoch as u64)));
        let mut sum = 0.0;
        let mut batches = 0usize;
        for batch in train.chunks(cfg.batch_size) {
            let (loss, grads) = batch_gradient(obj, &mlp, batch, cfg.weight_decay)?;
            adam_step(&mut mlp, &grads, &mut adam, cfg);
            sum += loss;
            batches += 1;
        }
        if mlp.layers().iter().any(|l| !l.weights.is_finite()) {
            return Err(Error::NonFinite("network parameters after update"));
        }
        let val_loss = mean_loss(obj, &mlp, &val)?;
        log.push(EpochLog {
            epoch,
            train_loss: sum / batches as f64,
            val_loss,
        });
        if val_loss < best.2 {
            best = (mlp.clone(), epoch, val_loss);
        }
    }
    Ok(TrainReport {
        model: best.0,
        log,
        best_epoch: best.1,
        best_val_loss: best.2,
    })
}

struct Kinematics<'a> {
    inputs: Vec<Vec<f64>>,
    ds: &'a Dataset,
}

impl Objective for Kinematics<'_> {
    fn sample(&self, mlp: &Mlp, i: usize, grads: Option<&mut Gradients>) -> Result<Option<f64>> {
        let (loss, g) = mse_backprop(mlp, &[(&self.inputs[i], self.ds.x(i))], 0.0)?;
        if let Some(out) = grads {
            *out = g;
        }
        Ok(Some(loss))
    }
}

/// Fits `x ≈ f(embed(q))` by mean squared error.
pub fn train_neural_kinematics(
    ds: &Dataset,
    embedding: JointEmbedding,
    spec: MlpSpec,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    check_spec(&spec, embedding, ds.joint_dim(), ds.feature_dim())?;
    let inputs = (0..ds.len()).map(|i| embedding.embed(ds.q(i))).collect();
    run(&Kinematics { inputs, ds }, ds.len(), spec, cfg)
}

struct Hyperplane<'a> {
    pairs: &'a PairSet,
    embedding: JointEmbedding,
    beta: f64,
}

impl Objective for Hyperplane<'_> {
    fn sample(
        &self,
        mlp: &Mlp,
        anchor: usize,
        grads: Option<&mut Gradients>,
    ) -> Result<Option<f64>> {
        let input = self.embedding.embed(self.pairs.q(anchor));
        let (loss, g) = match hyperplane_backprop(mlp, &input, &self.pairs.pairs(anchor), self.beta)
        {
            Ok(v) => v,
            Err(Error::RankDeficient { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        if let Some(out) = grads {
            *out = g;
        }
        Ok(Some(loss))
    }
}

/// Fits a network whose output, read row-major as an `m × n` matrix, is the
/// Jacobian at `q`, by minimising the secant loss over each sample's
/// neighbourhood pairs. Anchors where the inverse term is undefined (rank
/// loss with `beta > 0`) are skipped.
pub fn train_neural_jacobian(
    pairs: &PairSet,
    embedding: JointEmbedding,
    spec: MlpSpec,
    cfg: &TrainConfig,
    beta: f64,
) -> Result<TrainReport> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "beta must be non-negative, got {beta}"
        )));
    }
    let (m, n) = (pairs.feature_dim(), pairs.joint_dim());
    check_spec(&spec, embedding, n, m * n)?;
    let obj = Hyperplane {
        pairs,
        embedding,
        beta,
    };
    run(&obj, pairs.anchor_count(), spec, cfg)
}

fn check_spec(
    spec: &MlpSpec,
    embedding: JointEmbedding,
    joints: usize,
    outputs: usize,
) -> Result<()> {
    if spec.input_dim != embedding.input_dim(joints) {
        return Err(Error::DimensionMismatch {
            context: "network input",
            expected: embedding.input_dim(joints),
            got: spec.input_dim,
        });
    }
    if spec.output_dim != outputs {
        return Err(Error::DimensionMismatch {
            context: "network output",
            expected: outputs,
            got: spec.output_dim,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collection::build_pairs;
    use crate::env::EnvKind;
    use crate::kinematics::PlanarArm2;
    use crate::neural::Activation;
    use rand::Rng;

    fn planar_dataset(count: usize) -> Dataset {
        let mut rng = seeded(5);
        let arm = PlanarArm2::default();
        let qs: Vec<Vec<f64>> = (0..count)
            .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-1.5..1.5)])
            .collect();
        Dataset::from_samples(EnvKind::Planar2, &qs, |q| arm.fk([q[0], q[1]]).to_vec()).unwrap()
    }

    fn spec(input: usize, output: usize) -> MlpSpec {
        MlpSpec {
            input_dim: input,
            hidden_layers: 2,
            hidden_width: 32,
            output_dim: output,
            activation: Activation::Tanh,
            seed: 1,
        }
    }

    #[test]
    fn split_is_disjoint_and_sized() {
        let (t, v) = split_indices(100, 0.15, 3);
        assert_eq!((t.len(), v.len()), (85, 15));
        let mut all: Vec<usize> = t.iter().chain(&v).copied().collect();
        all.sort();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(split_indices(100, 0.15, 3), (t, v));
    }

    #[test]
    fn zero_epochs_returns_initialisation() {
        let ds = planar_dataset(50);
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let r = train_neural_kinematics(&ds, JointEmbedding::Trig, spec(4, 2), &cfg).unwrap();
        assert_eq!(r.model, Mlp::new(spec(4, 2)).unwrap());
        assert_eq!(r.best_epoch, 0);
        assert_eq!(r.log.len(), 1);
    }

    #[test]
    fn kinematics_training_reduces_validation_loss() {
        let ds = planar_dataset(600);
        let cfg = TrainConfig {
            epochs: 15,
            learning_rate: 3e-3,
            ..TrainConfig::default()
        };
        let r = train_neural_kinematics(&ds, JointEmbedding::Trig, spec(4, 2), &cfg).unwrap();
        assert!(r.best_val_loss < 0.2 * r.log[0].val_loss, "{:?}", r.log);
        let again = train_neural_kinematics(&ds, JointEmbedding::Trig, spec(4, 2), &cfg).unwrap();
        assert_eq!(r.model, again.model);
    }

    #[test]
    fn jacobian_training_reduces_validation_loss() {
        let ds = planar_dataset(600);
        let pairs = build_pairs(&ds, 10).unwrap();
        let cfg = TrainConfig {
            epochs: 10,
            learning_rate: 3e-3,
            ..TrainConfig::default()
        };
        for beta in [0.0, 1.0] {
            let r = train_neural_jacobian(&pairs, JointEmbedding::Trig, spec(4, 4), &cfg, beta)
                .unwrap();
            assert!(
                r.best_val_loss < 0.5 * r.log[0].val_loss,
                "beta {beta}: {:?}",
                r.log
            );
        }
    }

    #[test]
    fn beta_term_changes_the_trained_network() {
        let ds = planar_dataset(300);
        let pairs = build_pairs(&ds, 10).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            ..TrainConfig::default()
        };
        let nj =
            train_neural_jacobian(&pairs, JointEmbedding::Trig, spec(4, 4), &cfg, 0.0).unwrap();
        let bi =
            train_neural_jacobian(&pairs, JointEmbedding::Trig, spec(4, 4), &cfg, 1.0).unwrap();
        assert_ne!(nj.model.parameters(), bi.model.parameters());
    }

    #[test]
    fn recovers_a_constant_jacobian() {
        let a = [[0.7, -0.2], [0.1, 0.4]];
        let mut rng = seeded(8);
        let qs: Vec<Vec<f64>> = (0..1000)
            .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let linear = |q: &[f64]| {
            vec![
                a[0][0] * q[0] + a[0][1] * q[1],
                a[1][0] * q[0] + a[1][1] * q[1],
            ]
        };
        let ds = Dataset::from_samples(EnvKind::Planar2, &qs, linear).unwrap();
        let pairs = build_pairs(&ds, 10).unwrap();
        let cfg = TrainConfig {
            epochs: 150,
            ..TrainConfig::default()
        };
        let r = train_neural_jacobian(&pairs, JointEmbedding::Raw, spec(2, 4), &cfg, 0.0).unwrap();
        for q in [[0.3, -0.5], [-0.8, 0.2], [0.05, 0.9]] {
            let out = r.model.forward(&q).unwrap();
            let err: f64 = out
                .iter()
                .zip([a[0][0], a[0][1], a[1][0], a[1][1]])
                .map(|(o, t)| (o - t).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-2, "q {q:?}: {out:?}");
        }
    }

    #[test]
    fn best_epoch_never_worse_than_last() {
        let ds = planar_dataset(200);
        let cfg = TrainConfig {
            epochs: 8,
            learning_rate: 2e-2,
            ..TrainConfig::default()
        };
        let r = train_neural_kinematics(&ds, JointEmbedding::Trig, spec(4, 2), &cfg).unwrap();
        assert!(r.best_val_loss <= r.log.last().unwrap().val_loss);
        assert_eq!(r.log[r.best_epoch].val_loss, r.best_val_loss);
    }

    #[test]
    fn rejects_mismatched_spec() {
        let ds = planar_dataset(20);
        let err = train_neural_kinematics(
            &ds,
            JointEmbedding::Raw,
            spec(4, 2),
            &TrainConfig::default(),
        );
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }
}
