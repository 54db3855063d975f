//! One-sided (Hestenes) Jacobi SVD.

use super::{dot, norm, Mat};
use crate::error::{Error, Result};

/// Sweep cap before declaring non-convergence.
pub const MAX_SWEEPS: usize = 100;

/// Thin SVD `A = U diag(sigma) Vᵀ` with `r = min(m, n)` singular triplets.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: Mat,
    pub sigma: Vec<f64>,
    pub v: Mat,
}

impl SvdResult {
    pub fn sigma_max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma.last().copied().unwrap_or(0.0)
    }

    /// `U diag(sigma) Vᵀ`.
    pub fn reconstruct(&self) -> Mat {
        let mut us = self.u.clone();
        for j in 0..us.cols() {
            for i in 0..us.rows() {
                us[(i, j)] *= self.sigma[j];
            }
        }
        us.matmul(&self.v.transpose())
    }
}

pub fn svd(a: &Mat) -> Result<SvdResult> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::Empty("svd of an empty matrix"));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("svd input"));
    }
    if a.rows() >= a.cols() {
        tall_svd(a)
    } else {
        // A = (Aᵀ)ᵀ = (U' S V'ᵀ)ᵀ = V' S U'ᵀ
        let t = tall_svd(&a.transpose())?;
        Ok(SvdResult {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        })
    }
}

/// Jacobi rotations on the columns of a matrix with `m >= n`.
fn tall_svd(a: &Mat) -> Result<SvdResult> {
    let (m, n) = a.shape();
    // Work column-major so rotations touch contiguous memory.
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let eps = f64::EPSILON;
    // Dot products of length m carry ~m·eps rounding; a bare eps cutoff can
    // limit-cycle on columns that are orthogonal to working precision.
    let ortho_tol = eps * m as f64;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == 0.0 || gamma.abs() <= ortho_tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence(MAX_SWEEPS));
    }

    let mut order: Vec<(f64, usize)> = w.iter().map(|c| norm(c)).zip(0..n).collect();
    // Stable sort keeps equal singular values in column order.
    order.sort_by(|x, y| y.0.total_cmp(&x.0));

    let sigma_max = order[0].0;
    let negligible = sigma_max * eps * m.max(n) as f64;
    let mut u = Mat::zeros(m, n);
    let mut vm = Mat::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut pending = Vec::new();
    for (k, &(s, j)) in order.iter().enumerate() {
        sigma.push(s);
        vm.set_column(k, &v[j]);
        if s > negligible && s > 0.0 {
            let col: Vec<f64> = w[j].iter().map(|x| x / s).collect();
            u.set_column(k, &col);
            basis.push(col);
        } else {
            pending.push(k);
        }
    }
    // Null directions of A carry no information; fill them with an
    // orthonormal completion so U keeps orthonormal columns.
    for k in pending {
        let col = complete_basis(&basis, m);
        u.set_column(k, &col);
        basis.push(col);
    }
    Ok(SvdResult { u, sigma, v: vm })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Unit vector orthogonal to every vector in `basis` (assumed orthonormal).
fn complete_basis(basis: &[Vec<f64>], m: usize) -> Vec<f64> {
    let mut best = vec![0.0; m];
    let mut best_norm = -1.0;
    for e in 0..m {
        let mut cand = vec![0.0; m];
        cand[e] = 1.0;
        // Two Gram-Schmidt passes for numerical orthogonality.
        for _ in 0..2 {
            for b in basis {
                let proj = dot(&cand, b);
                for (c, bv) in cand.iter_mut().zip(b) {
                    *c -= proj * bv;
                }
            }
        }
        let nrm = norm(&cand);
        if nrm > best_norm {
            best_norm = nrm;
            best = cand;
        }
    }
    best.iter().map(|x| x / best_norm).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn orthonormality_error(q: &Mat) -> f64 {
        let g = q.transpose().matmul(q);
        (&g - &Mat::identity(q.cols())).max_abs()
    }

    fn check_invariants(a: &Mat) {
        let s = svd(a).unwrap();
        let r = a.rows().min(a.cols());
        assert_eq!(s.sigma.len(), r);
        assert_eq!(s.u.shape(), (a.rows(), r));
        assert_eq!(s.v.shape(), (a.cols(), r));
        assert!(orthonormality_error(&s.u) < 1e-10, "U not orthonormal");
        assert!(orthonormality_error(&s.v) < 1e-10, "V not orthonormal");
        assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        assert!(s.sigma.iter().all(|&x| x >= 0.0));
        let err = (&s.reconstruct() - a).max_abs();
        assert!(err < 1e-10 * a.max_abs().max(1.0), "reconstruction {err}");
    }

    #[test]
    fn converges_on_rounding_limit_cycle() {
        // A single-point Jacobian (transposed) that used to oscillate at
        // 1.3·eps relative orthogonality forever.
        let d = vec![
            -0.16892246028385946,
            0.4388879725272561,
            -5.3748275073977564e-17,
            -0.7507294903364351,
            -0.10144681223083563,
            -0.4575559558455645,
            -0.1144243160130321,
            0.046557543903618936,
            -0.0549527370477004,
            -0.03163553170927404,
            -0.43778887410722933,
            -0.197405192673484,
            -0.012771500991429124,
            0.003733897577433365,
            -0.006234008210221631,
            -0.0062820690391005435,
            -0.14886959243943354,
            -0.0762963960846441,
            -3.469446951953614e-17,
            0.0,
            -2.0816681711721685e-17,
        ];
        let a = Mat::new(7, 3, d).unwrap();
        check_invariants(&a);
        let s = svd(&a).unwrap();
        let want = [0.91993731, 0.65837109, 0.05302539];
        for (got, w) in s.sigma.iter().zip(want) {
            assert!((got - w).abs() < 1e-7);
        }
    }

    #[test]
    fn diagonal_and_identity() {
        let s = svd(&Mat::diag(&[3.0, 1.0])).unwrap();
        assert_eq!(s.sigma, vec![3.0, 1.0]);
        let s = svd(&Mat::diag(&[1.0, 3.0])).unwrap();
        assert_eq!(s.sigma, vec![3.0, 1.0]);
        let s = svd(&Mat::identity(4)).unwrap();
        assert_eq!(s.sigma, vec![1.0; 4]);
    }

    #[test]
    fn zero_matrix() {
        let z = Mat::zeros(2, 2);
        let s = svd(&z).unwrap();
        assert_eq!(s.sigma, vec![0.0, 0.0]);
        check_invariants(&z);
        check_invariants(&Mat::zeros(3, 5));
    }

    #[test]
    fn empty_is_rejected() {
        assert!(matches!(svd(&Mat::zeros(0, 3)), Err(Error::Empty(_))));
    }

    #[test]
    fn random_shapes_satisfy_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let m = rng.random_range(1..=12);
            let n = rng.random_range(1..=12);
            let data = (0..m * n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let a = Mat::new(m, n, data).unwrap();
            check_invariants(&a);
        }
    }

    #[test]
    fn rank_deficient_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let m = rng.random_range(2..=12);
            let n = rng.random_range(2..=7);
            let rank = rng.random_range(1..m.min(n));
            let l = Mat::new(
                m,
                rank,
                (0..m * rank).map(|_| rng.random_range(-1.0..1.0)).collect(),
            )
            .unwrap();
            let r = Mat::new(
                rank,
                n,
                (0..rank * n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            )
            .unwrap();
            let a = l.matmul(&r);
            check_invariants(&a);
            let s = svd(&a).unwrap();
            assert!(s.sigma[rank] < 1e-12 * s.sigma[0].max(1.0));
        }
    }

    #[test]
    fn deterministic() {
        let a = Mat::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.5]]).unwrap();
        let s1 = svd(&a).unwrap();
        let s2 = svd(&a).unwrap();
        assert_eq!(s1.sigma, s2.sigma);
        assert_eq!(s1.u, s2.u);
        assert_eq!(s1.v, s2.v);
    }
}
