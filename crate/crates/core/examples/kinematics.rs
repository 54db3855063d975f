//! Forward kinematics and exact Jacobians of the built-in chains.
//!
//! ```text
//! cargo run --example kinematics
//! ```

use jacobian_lab::env::{EnvKind, Kinematics};
use jacobian_lab::kinematics::{planar_jacobian, DhChain, PlanarArm2, KINOVA_BENT_POSE};
use jacobian_lab::linalg::cond;

fn main() -> jacobian_lab::Result<()> {
    let chain = DhChain::kinova_gen3();
    println!("kinova chain: {} joints", chain.joint_count());

    let bent = KINOVA_BENT_POSE;
    for kind in [EnvKind::SinglePoint7, EnvKind::MultiPoint7] {
        let k = Kinematics::for_kind(kind);
        let x = k.features(&bent);
        let j = k.jacobian(&bent);
        println!(
            "{:>14}: x[..3] = {:.4?}, J is {}x{}, cond = {}",
            kind.name(),
            &x[..3],
            j.rows(),
            j.cols(),
            cond(&j)?
        );
        // Central differences of the features agree with the geometric Jacobian.
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for c in 0..7 {
            let (mut qp, mut qm) = (bent, bent);
            qp[c] += h;
            qm[c] -= h;
            let (xp, xm) = (k.features(&qp), k.features(&qm));
            for r in 0..j.rows() {
                worst = worst.max(((xp[r] - xm[r]) / (2.0 * h) - j[(r, c)]).abs());
            }
        }
        println!("{:>14}  max |J - FD| = {worst:.2e}", "");
    }

    // The stretched home pose is singular for the 7-DOF chain.
    let home = Kinematics::for_kind(EnvKind::SinglePoint7).jacobian(&[0.0; 7]);
    println!("single point at q = 0: cond = {}", cond(&home)?);

    let arm = PlanarArm2::default();
    for q in [[0.0, 0.0], [0.4, 1.2]] {
        println!(
            "planar q = {q:?}: x = {:.4?}, cond = {}",
            arm.fk(q),
            cond(&planar_jacobian(&arm, q))?
        );
    }
    Ok(())
}
