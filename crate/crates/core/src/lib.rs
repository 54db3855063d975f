//! Data-driven Jacobian estimation and inverse-Jacobian Cartesian control.
//!
//! The crate simulates DH-parameterised manipulators, collects exploration
//! data, trains neural and classical Jacobian estimators from that data, and
//! evaluates them in closed loop with the pseudo-inverse controller
//! `Δq = λ [J†(x* − x) + (I − J†J) y]`.
//!
//! Module map:
//!
//! - [`linalg`]: dense matrices, Jacobi SVD, pseudo-inverse and its derivative
//! - [`kinematics`]: DH chains, the built-in Kinova Gen3 chain, planar 2-link arm
//! - [`env`]: kinematic simulators (single point, multi point, planar)
//! - [`collection`]: Ornstein-Uhlenbeck exploration, datasets, k-NN pairs
//! - [`neural`]: from-scratch MLP, Adam, both training objectives
//! - [`estimators`]: True, Broyden, LL-KNN, Neural Jacobian, Neural Kinematics
//! - [`control`]: controller and closed-loop trajectories
//! - [`metrics`]: success rates, Jacobian quality statistics, CSV schemas
//! - [`config`] / [`experiment`]: JSON experiment configs and the pipeline
//!   stages behind the `jacobian-lab` binary

// `!(x >= 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod collection;
pub mod config;
pub mod control;
pub mod env;
mod error;
pub mod estimators;
pub mod experiment;
pub mod kinematics;
pub mod linalg;
pub mod metrics;
pub mod neural;
pub(crate) mod rng;

pub use error::{Error, Result};
pub use linalg::Mat;
