//! SVD, pseudo-inverse, its derivative, and the positive-definiteness test
//! behind the convergence criterion.
//!
//! ```text
//! cargo run --example pseudo_inverse
//! ```

use jacobian_lab::linalg::{
    cond, is_positive_definite, pinv, pinv_directional_derivative, svd, Mat,
};

fn main() -> jacobian_lab::Result<()> {
    let j = Mat::from_rows(&[[1.0, 0.5, -0.2], [0.0, 2.0, 0.3]])?;
    let s = svd(&j)?;
    println!("sigma = {:.6?}", s.sigma);
    println!("cond  = {}", cond(&j)?);

    let jp = pinv(&j)?;
    println!("J J† = {:?}", j.matmul(&jp));
    let residual = (&j.matmul(&jp).matmul(&j) - &j).max_abs();
    println!("|J J† J - J| = {residual:.2e}");

    // First-order change of J† along dJ, checked against a finite difference.
    let dj = Mat::from_rows(&[[0.1, 0.0, 0.2], [-0.3, 0.1, 0.0]])?;
    let d = pinv_directional_derivative(&j, &dj)?;
    let h = 1e-6;
    let fd = (&pinv(&(&j + &dj.scale(h)))? - &pinv(&(&j - &dj.scale(h)))?).scale(0.5 / h);
    println!("|dJ† - FD| = {:.2e}", (&d - &fd).max_abs());

    // Rank-deficient input: the pseudo-inverse exists, the condition is infinite.
    let singular = Mat::from_rows(&[[1.0, 2.0], [2.0, 4.0]])?;
    println!(
        "singular: cond = {}, pinv = {:?}",
        cond(&singular)?,
        pinv(&singular)?
    );

    // J* Ĵ† is PD when the estimate is close; a sign flip breaks it.
    println!("PD(J J†)    = {}", is_positive_definite(&j.matmul(&jp))?);
    println!(
        "PD(J (-J)†) = {}",
        is_positive_definite(&j.matmul(&pinv(&-&j)?))?
    );
    Ok(())
}
