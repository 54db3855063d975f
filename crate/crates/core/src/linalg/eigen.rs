use super::Mat;
use crate::error::{Error, Result};

/// Eigenvalues of the symmetric part must exceed this for a matrix to count
/// as positive definite.
pub const PD_MARGIN: f64 = 1e-10;

const MAX_EIGEN_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix in ascending order (cyclic Jacobi).
///
/// Only the upper triangle is trusted; callers pass genuinely symmetric input.
pub fn symmetric_eigenvalues(s: &Mat) -> Result<Vec<f64>> {
    if !s.is_square() {
        return Err(Error::ShapeMismatch {
            context: "symmetric_eigenvalues",
            left: s.shape(),
            right: (s.cols(), s.rows()),
        });
    }
    let n = s.rows();
    let mut a = s.symmetric_part();
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Ok(vec![0.0; n]);
    }
    // Entries below this are treated as zero; a sweep without rotations
    // means the matrix is diagonal to working precision.
    let negligible = f64::EPSILON * scale * n as f64;
    let mut converged = false;
    for _ in 0..MAX_EIGEN_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= negligible {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- Gᵀ A G on rows/columns p and q.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::EigenNoConvergence(MAX_EIGEN_SWEEPS));
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// `xᵀ M x > 0` for every nonzero `x`, decided on the symmetric part.
pub fn is_positive_definite(m: &Mat) -> Result<bool> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch {
            context: "is_positive_definite",
            left: m.shape(),
            right: (m.cols(), m.rows()),
        });
    }
    let eig = symmetric_eigenvalues(&m.symmetric_part())?;
    Ok(eig.first().is_some_and(|&l| l > PD_MARGIN))
}
