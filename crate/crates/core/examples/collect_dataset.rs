//! Ornstein-Uhlenbeck exploration, dataset files, and the k-NN pairs the
//! neural Jacobian trains on.
//!
//! ```text
//! cargo run --example collect_dataset
//! ```

use jacobian_lab::collection::{build_pairs, collect, load_dataset, save_dataset, CollectConfig};
use jacobian_lab::env::{Env, EnvKind, SimConfig};

fn main() -> jacobian_lab::Result<()> {
    let env = Env::new(EnvKind::SinglePoint7, &SimConfig::default())?;
    let cfg = CollectConfig {
        n_traj: 20,
        seed: 7,
        ..CollectConfig::default()
    };
    let ds = collect(&env, &cfg)?;
    println!(
        "{} samples, q in R^{}, x in R^{}",
        ds.len(),
        ds.joint_dim(),
        ds.feature_dim()
    );
    let last = ds.len() - 1;
    println!(
        "trajectory {} step {}: x = {:.4?}",
        ds.trajectory(last),
        ds.step(last),
        ds.x(last)
    );

    let dir = std::env::temp_dir().join("jacobian-lab-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("dataset.njds");
    save_dataset(&ds, &path)?;
    let back = load_dataset(&path)?;
    println!(
        "round trip through {}: equal = {}",
        path.display(),
        back == ds
    );

    // Every trajectory starts from the same pose, so step-0 anchors only see
    // duplicates; look at one from the middle of a trajectory.
    let pairs = build_pairs(&ds, 10)?;
    let anchor = 50;
    let p = &pairs.pairs(anchor)[0];
    println!(
        "{} anchors x {} pairs; anchor {anchor} first pair |dq| = {:.4}, |dx| = {:.4}",
        pairs.anchor_count(),
        pairs.pairs_per_anchor(),
        jacobian_lab::linalg::norm(&p.dq),
        jacobian_lab::linalg::norm(&p.dx)
    );
    Ok(())
}
