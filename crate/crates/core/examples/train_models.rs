//! Trains a neural kinematics model and both neural Jacobian variants on
//! the planar arm and compares their Jacobians with the exact one.
//!
//! ```text
//! cargo run --release --example train_models
//! ```

use jacobian_lab::collection::{build_pairs, collect, CollectConfig};
use jacobian_lab::env::{Env, EnvKind, SimConfig};
use jacobian_lab::estimators::{
    neural_jacobian_estimate, neural_kinematics_estimate, EstimatorContext,
};
use jacobian_lab::metrics::frobenius_error;
use jacobian_lab::neural::{
    train_neural_jacobian, train_neural_kinematics, Activation, JointEmbedding, MlpSpec, ModelKind,
    NeuralModel, TrainConfig,
};

fn main() -> jacobian_lab::Result<()> {
    let kind = EnvKind::Planar2;
    let mut env = Env::new(kind, &SimConfig::default())?;
    let ds = collect(
        &env,
        &CollectConfig {
            n_traj: 50,
            ..CollectConfig::default()
        },
    )?;
    let (m, n) = (kind.feature_dim(), kind.joint_dim());
    let emb = JointEmbedding::Trig;
    let cfg = TrainConfig {
        epochs: 30,
        ..TrainConfig::default()
    };
    let spec = |outputs| MlpSpec {
        input_dim: emb.input_dim(n),
        hidden_layers: 1,
        hidden_width: 100,
        output_dim: outputs,
        activation: Activation::Tanh,
        seed: 0,
    };

    let nk = train_neural_kinematics(&ds, emb, spec(m), &cfg)?;
    println!(
        "kinematics: best val MSE {:.2e} at epoch {} (RMSE {:.4} m)",
        nk.best_val_loss,
        nk.best_epoch,
        nk.best_val_loss.sqrt()
    );
    let nk = NeuralModel::new(ModelKind::Kinematics, kind, emb, 0.0, nk.model)?;

    // beta = 0 is the plain secant fit; beta = 1 adds the inverse term.
    let pairs = build_pairs(&ds, 10)?;
    let mut nj = Vec::new();
    for beta in [0.0, 1.0] {
        let r = train_neural_jacobian(&pairs, emb, spec(m * n), &cfg, beta)?;
        println!(
            "jacobian, beta {beta}: best val loss {:.2e} at epoch {}",
            r.best_val_loss, r.best_epoch
        );
        nj.push(NeuralModel::new(
            ModelKind::Jacobian,
            kind,
            emb,
            beta,
            r.model,
        )?);
    }

    for q in [[0.3, 0.8], [-1.0, 1.4], [1.5, -0.6]] {
        let state = env.set_joints(&q)?.clone();
        let ctx = EstimatorContext::from_state(&state);
        let truth = env.jacobian_at(&q);
        println!(
            "q = {q:?}: |J - Ĵ|_F  nk {:.4}  nj {:.4}  bi_nj {:.4}",
            frobenius_error(&truth, &neural_kinematics_estimate(&nk, &ctx)?)?,
            frobenius_error(&truth, &neural_jacobian_estimate(&nj[0], &ctx)?)?,
            frobenius_error(&truth, &neural_jacobian_estimate(&nj[1], &ctx)?)?
        );
    }
    Ok(())
}
