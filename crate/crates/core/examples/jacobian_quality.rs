//! Per-step Jacobian quality along closed-loop trajectories: Frobenius
//! error, condition numbers and the positive-definiteness criterion.
//!
//! ```text
//! cargo run --release --example jacobian_quality
//! ```

use jacobian_lab::control::{evaluate, sample_targets, ControllerConfig};
use jacobian_lab::env::{Env, EnvKind, SimConfig};
use jacobian_lab::estimators::{BroydenConfig, Estimator};
use jacobian_lab::kinematics::KINOVA_BENT_POSE;
use jacobian_lab::linalg::Condition;
use jacobian_lab::metrics::{classify_pd_flags, step_curve, summarize_conditions, TraceSummary};

fn main() -> jacobian_lab::Result<()> {
    // A bent start pose keeps the exact Jacobian away from the stretched
    // singularity at q = 0.
    let sim = SimConfig {
        initial_q: Some(KINOVA_BENT_POSE.to_vec()),
        ..SimConfig::default()
    };
    let env = Env::new(EnvKind::MultiPoint7, &sim)?;
    let targets = sample_targets(&env, 1, 30);
    let traces = evaluate(
        &env,
        &Estimator::Broyden(BroydenConfig::default()),
        &targets,
        1,
        &ControllerConfig::default(),
    )?;
    let summaries = traces
        .iter()
        .map(TraceSummary::from_trace)
        .collect::<jacobian_lab::Result<Vec<_>>>()?;
    let refs: Vec<&TraceSummary> = summaries.iter().collect();

    let frob = step_curve(&refs, |s| s.frobenius_error);
    for p in frob.iter().step_by(50) {
        println!(
            "step {:>3}: |J* - Ĵ|_F = {:.3} ± {:.3}",
            p.step, p.mean, p.stderr
        );
    }

    let conds: Vec<Condition> = summaries
        .iter()
        .flat_map(|t| t.steps.iter().map(|s| s.cond))
        .collect();
    let stats = summarize_conditions(&conds)?;
    println!(
        "estimate cond: median {}, {:.1}% infinite",
        stats.median_all,
        100.0 * stats.fraction_infinite
    );
    let truth: Vec<Condition> = summaries
        .iter()
        .flat_map(|t| t.steps.iter().map(|s| s.cond_true))
        .collect();
    println!(
        "true cond:     median {} (the 12x7 multi-point Jacobian has rank at most 6)",
        summarize_conditions(&truth)?.median_all
    );

    let flags: Vec<Vec<bool>> = summaries.iter().map(TraceSummary::pd_flags).collect();
    let (always, not_always) = classify_pd_flags(&flags).percentages();
    println!("J* Ĵ† positive definite at every step: {always:.1}% of trajectories ({not_always:.1}% not)");
    Ok(())
}
