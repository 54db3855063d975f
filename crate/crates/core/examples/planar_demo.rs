//! The whole pipeline on the planar arm: collect, train a tanh kinematics
//! network, evaluate against the exact Jacobian and Broyden, analyse.
//! Artifacts land in a temporary directory.
//!
//! ```text
//! cargo run --release --example planar_demo
//! ```

use jacobian_lab::experiment::{demo, DemoOptions, Workspace};

fn main() -> jacobian_lab::Result<()> {
    let out = std::env::temp_dir().join("jacobian-lab-demo");
    let report = demo(&DemoOptions::default(), &Workspace::new(&out, true))?;
    println!("{} samples collected", report.collect.samples);
    for row in &report.eval.rows {
        println!(
            "{:>10}: {:.2}%",
            row.estimator,
            row.overall.unwrap_or(f64::NAN)
        );
    }
    println!("results in {}", report.eval.dir.display());
    Ok(())
}
