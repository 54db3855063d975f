//! Moore-Penrose pseudo-inverse, its derivative, and condition numbers.

use std::fmt;

use super::{svd, Mat, SvdResult};
use crate::error::{Error, Result};

/// Relative rank threshold `1e-12 · σ_max · max(m, n)`.
pub fn default_rank_tol(sigma_max: f64, rows: usize, cols: usize) -> f64 {
    1e-12 * sigma_max * rows.max(cols) as f64
}

pub fn pinv(a: &Mat) -> Result<Mat> {
    let s = svd(a)?;
    let tol = default_rank_tol(s.sigma_max(), a.rows(), a.cols());
    Ok(pinv_from_svd(&s, tol))
}

/// Pseudo-inverse keeping only singular values strictly above `tol`.
pub fn pinv_with_tol(a: &Mat, tol: f64) -> Result<Mat> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("pinv tolerance {tol}")));
    }
    let s = svd(a)?;
    Ok(pinv_from_svd(&s, tol))
}

fn pinv_from_svd(s: &SvdResult, tol: f64) -> Mat {
    let (m, n) = (s.u.rows(), s.v.rows());
    let mut out = Mat::zeros(n, m);
    for (k, &sig) in s.sigma.iter().enumerate() {
        if sig <= tol {
            continue;
        }
        let inv = 1.0 / sig;
        for i in 0..n {
            let vik = s.v[(i, k)] * inv;
            if vik == 0.0 {
                continue;
            }
            for j in 0..m {
                out[(i, j)] += vik * s.u[(j, k)];
            }
        }
    }
    out
}

/// Condition number `σ_max / σ_min`, or [`Condition::Infinite`] when the
/// smallest singular value falls under the rank tolerance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Condition {
    Finite(f64),
    Infinite,
}

impl Condition {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Condition::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Condition::Finite(c) => Some(c),
            Condition::Infinite => None,
        }
    }

    /// `f64` view with `+∞` for the sentinel; handy for ordering.
    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn parse(s: &str) -> Option<Self> {
        if s == "inf" {
            Some(Condition::Infinite)
        } else {
            s.parse().ok().map(Condition::Finite)
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Finite(c) => write!(f, "{c}"),
            Condition::Infinite => f.write_str("inf"),
        }
    }
}

pub fn cond(a: &Mat) -> Result<Condition> {
    let s = svd(a)?;
    let tol = default_rank_tol(s.sigma_max(), a.rows(), a.cols());
    let smin = s.sigma_min();
    if smin <= tol || s.sigma_max() == 0.0 {
        Ok(Condition::Infinite)
    } else {
        Ok(Condition::Finite(s.sigma_max() / smin))
    }
}

/// Pseudo-inverse of a matrix required to have full rank, with
/// `σ_min > 100 · tol` as the margin for differentiability.
pub fn pinv_full_rank(j: &Mat) -> Result<Mat> {
    let s = svd(j)?;
    let tol = default_rank_tol(s.sigma_max(), j.rows(), j.cols());
    let threshold = 100.0 * tol;
    if s.sigma_min() <= threshold || s.sigma_max() == 0.0 {
        return Err(Error::RankDeficient {
            sigma_min: s.sigma_min(),
            threshold,
        });
    }
    Ok(pinv_from_svd(&s, tol))
}

/// Directional derivative of `J ↦ J†` along `dJ`:
///
/// `dJ† = −J† dJ J† + J† J†ᵀ dJᵀ (I − J J†) + (I − J† J) dJᵀ J†ᵀ J†`
///
/// The pseudo-inverse is only differentiable while the rank is constant, so
/// `j` must have full rank.
pub fn pinv_directional_derivative(j: &Mat, dj: &Mat) -> Result<Mat> {
    if j.shape() != dj.shape() {
        return Err(Error::ShapeMismatch {
            context: "pinv_directional_derivative",
            left: j.shape(),
            right: dj.shape(),
        });
    }
    let jp = pinv_full_rank(j)?;
    let (m, n) = j.shape();
    let djt = dj.transpose();
    let jpt = jp.transpose();
    let proj_out = &Mat::identity(m) - &j.matmul(&jp);
    let proj_in = &Mat::identity(n) - &jp.matmul(j);

    let t1 = -&jp.matmul(dj).matmul(&jp);
    let t2 = jp.matmul(&jpt).matmul(&djt).matmul(&proj_out);
    let t3 = proj_in.matmul(&djt).matmul(&jpt.matmul(&jp));
    Ok(&(&t1 + &t2) + &t3)
}

/// Gradient of `⟨G, J†⟩` with respect to `J`, i.e. the adjoint of
/// [`pinv_directional_derivative`] applied to the cotangent `g` (n×m).
///
/// `jp` must be the pseudo-inverse of a full-rank `j`
/// (see [`pinv_full_rank`]).
pub fn pinv_adjoint(j: &Mat, jp: &Mat, g: &Mat) -> Result<Mat> {
    let (m, n) = j.shape();
    if g.shape() != (n, m) || jp.shape() != (n, m) {
        return Err(Error::ShapeMismatch {
            context: "pinv_adjoint",
            left: (n, m),
            right: if g.shape() != (n, m) {
                g.shape()
            } else {
                jp.shape()
            },
        });
    }
    let jpt = jp.transpose();
    let gt = g.transpose();
    let proj_out = &Mat::identity(m) - &j.matmul(jp);
    let proj_in = &Mat::identity(n) - &jp.matmul(j);

    let t1 = -&jpt.matmul(g).matmul(&jpt);
    let t2 = proj_out.matmul(&gt).matmul(&jp.matmul(&jpt));
    let t3 = jpt.matmul(jp).matmul(&gt).matmul(&proj_in);
    Ok(&(&t1 + &t2) + &t3)
}
