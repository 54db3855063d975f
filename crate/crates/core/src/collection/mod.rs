//! Exploration data: Ornstein-Uhlenbeck rollouts, dataset files, and the
//! k-nearest-neighbour finite-difference pairs used for Jacobian fitting.

mod dataset;
mod ou;
mod pairs;

pub(crate) use dataset::Reader;
pub use dataset::{
    collect, load_dataset, save_dataset, write_dataset_csv, CollectConfig, CollectPolicy, Dataset,
    DATASET_MAGIC, DATASET_VERSION,
};
pub use ou::{ou_step, OuConfig, OuProcess};
pub use pairs::{build_pairs, nearest_neighbors, FdPair, PairSet};
