//! Multilayer perceptrons and the two ways of learning a Jacobian with them:
//! directly from finite-difference pairs, or as the input derivative of a
//! learned forward model.

mod adam;
mod embedding;
mod io;
mod mlp;
mod objectives;
mod train;

pub use adam::{adam_step, AdamState, TrainConfig};
pub use embedding::JointEmbedding;
pub use io::{load_model, save_model, ModelKind, NeuralModel, MODEL_MAGIC, MODEL_VERSION};
pub use mlp::{Activation, Gradients, Layer, Mlp, MlpSpec};
pub use objectives::{hyperplane_backprop, hyperplane_loss_and_grad, mse_backprop};
pub use train::{
    split_indices, train_neural_jacobian, train_neural_kinematics, EpochLog, TrainReport,
};
