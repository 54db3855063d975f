//! Closed-loop reaching on the single-point arm with the exact Jacobian,
//! Broyden and LL-KNN, scored with the threshold-averaged success rate.
//!
//! ```text
//! cargo run --release --example closed_loop
//! ```

use jacobian_lab::collection::{collect, CollectConfig};
use jacobian_lab::control::{evaluate, sample_targets, ControllerConfig};
use jacobian_lab::env::{Env, EnvKind, SimConfig};
use jacobian_lab::estimators::{BroydenConfig, Estimator};
use jacobian_lab::metrics::{success_row, BucketSpec, ThresholdSpec, TraceSummary};

fn main() -> jacobian_lab::Result<()> {
    let kind = EnvKind::SinglePoint7;
    let env = Env::new(kind, &SimConfig::default())?;
    let ds = collect(
        &env,
        &CollectConfig {
            n_traj: 200,
            ..CollectConfig::default()
        },
    )?;
    let estimators = [
        Estimator::true_for(kind),
        Estimator::Broyden(BroydenConfig::default()),
        Estimator::llknn(&ds, 128)?,
    ];
    let targets = sample_targets(&env, 0, 40);
    let ctrl = ControllerConfig::default();
    let (thresholds, buckets) = (ThresholdSpec::for_kind(kind), BucketSpec::for_kind(kind));

    println!(
        "{:>10}  {:>8}  per bucket {:?}",
        "estimator",
        "overall",
        buckets.labels()
    );
    for est in &estimators {
        let traces = evaluate(&env, est, &targets, 0, &ctrl)?;
        let summaries = traces
            .iter()
            .map(TraceSummary::from_trace)
            .collect::<jacobian_lab::Result<Vec<_>>>()?;
        let refs: Vec<&TraceSummary> = summaries.iter().collect();
        let row = success_row(&est.id(), &refs, &thresholds, &buckets)?;
        let cells: Vec<String> = row
            .buckets
            .iter()
            .map(|b| b.map_or("-".into(), |v| format!("{v:.1}")))
            .collect();
        println!(
            "{:>10}  {:>7.2}%  {}",
            row.estimator,
            row.overall.unwrap_or(f64::NAN),
            cells.join("  ")
        );
    }
    Ok(())
}
