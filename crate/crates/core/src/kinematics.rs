//! Denavit-Hartenberg forward kinematics and exact Jacobians.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// A bent Kinova pose away from the stretched-arm singularity at q = 0.
/// The angles are recorded values, so 3.14 is not meant as π.
#[allow(clippy::approx_constant)]
pub const KINOVA_BENT_POSE: [f64; 7] = [0.0, 0.26, 3.14, -2.27, 0.0, 0.96, 1.57];

/// One row of a standard DH table. The joint variable is added to
/// `theta_offset` to form the rotation about the previous z axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DhRow {
    pub alpha: f64,
    pub a: f64,
    pub d: f64,
    #[serde(default)]
    pub theta_offset: f64,
    /// Fixed rows always see a joint value of zero.
    #[serde(default = "default_actuated")]
    pub actuated: bool,
}

fn default_actuated() -> bool {
    true
}

impl DhRow {
    pub const fn revolute(alpha: f64, a: f64, d: f64, theta_offset: f64) -> Self {
        Self {
            alpha,
            a,
            d,
            theta_offset,
            actuated: true,
        }
    }

    pub const fn fixed(alpha: f64, a: f64, d: f64, theta_offset: f64) -> Self {
        Self {
            alpha,
            a,
            d,
            theta_offset,
            actuated: false,
        }
    }
}

/// Homogeneous transform of a single DH row at joint value `q`.
pub fn dh_transform(row: &DhRow, q: f64) -> Mat {
    let (st, ct) = (q + row.theta_offset).sin_cos();
    let (sa, ca) = row.alpha.sin_cos();
    Mat::from_vec_unchecked(
        4,
        4,
        vec![
            ct,
            -ca * st,
            sa * st,
            row.a * ct, //
            st,
            ca * ct,
            -sa * ct,
            row.a * st, //
            0.0,
            sa,
            ca,
            row.d, //
            0.0,
            0.0,
            0.0,
            1.0,
        ],
    )
}

/// Ordered DH rows from base to end-effector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DhChain {
    rows: Vec<DhRow>,
}

impl DhChain {
    pub fn new(rows: Vec<DhRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("DH chain"));
        }
        if rows.iter().any(|r| {
            !(r.alpha.is_finite()
                && r.a.is_finite()
                && r.d.is_finite()
                && r.theta_offset.is_finite())
        }) {
            return Err(Error::NonFinite("DH row"));
        }
        Ok(Self { rows })
    }

    /// Kinova Gen3 (7-DOF). Row 0 is the fixed base flip.
    pub fn kinova_gen3() -> Self {
        Self {
            rows: vec![
                DhRow::fixed(PI, 0.0, 0.0, 0.0),
                DhRow::revolute(FRAC_PI_2, 0.0, -(0.1564 + 0.1284), 0.0),
                DhRow::revolute(FRAC_PI_2, 0.0, -(0.0054 + 0.0064), PI),
                DhRow::revolute(FRAC_PI_2, 0.0, -(0.2104 + 0.2104), PI),
                DhRow::revolute(FRAC_PI_2, 0.0, -(0.0064 + 0.0064), PI),
                DhRow::revolute(FRAC_PI_2, 0.0, -(0.2084 + 0.1059), PI),
                DhRow::revolute(FRAC_PI_2, 0.0, 0.0, PI),
                DhRow::revolute(PI, 0.0, -(0.1059 + 0.0615), PI),
            ],
        }
    }

    /// The planar two-link arm written as a DH chain (motion in the x-y plane).
    pub fn planar(arm: &PlanarArm2) -> Self {
        Self {
            rows: vec![
                DhRow::revolute(0.0, arm.l1, 0.0, 0.0),
                DhRow::revolute(0.0, arm.l2, 0.0, 0.0),
            ],
        }
    }

    pub fn rows(&self) -> &[DhRow] {
        &self.rows
    }

    pub fn joint_count(&self) -> usize {
        self.rows.iter().filter(|r| r.actuated).count()
    }

    fn check_joints(&self, q: &[f64]) -> Result<()> {
        let n = self.joint_count();
        if q.len() != n {
            return Err(Error::DimensionMismatch {
                context: "joint vector",
                expected: n,
                got: q.len(),
            });
        }
        Ok(())
    }

    /// Joint value seen by each row (zero for fixed rows).
    fn row_values<'a>(&'a self, q: &'a [f64]) -> impl Iterator<Item = (&'a DhRow, f64)> + 'a {
        let mut next = q.iter();
        self.rows.iter().map(move |r| {
            let v = if r.actuated {
                *next.next().expect("joint count checked")
            } else {
                0.0
            };
            (r, v)
        })
    }

    /// Base-to-frame transform in front of every row, followed by the
    /// end-effector transform (so `rows + 1` entries).
    fn frames(&self, q: &[f64]) -> Vec<Mat> {
        let mut frames = Vec::with_capacity(self.rows.len() + 1);
        let mut t = Mat::identity(4);
        for (row, v) in self.row_values(q) {
            let next = t.matmul(&dh_transform(row, v));
            frames.push(t);
            t = next;
        }
        frames.push(t);
        frames
    }
}

pub fn forward_kinematics(chain: &DhChain, q: &[f64]) -> Result<Mat> {
    chain.check_joints(q)?;
    Ok(chain.row_values(q).fold(Mat::identity(4), |t, (row, v)| {
        t.matmul(&dh_transform(row, v))
    }))
}

/// Homogeneous points rigidly attached to the end-effector frame.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    points: Vec<[f64; 4]>,
}

impl PointSet {
    pub fn new(points: Vec<[f64; 4]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("point set"));
        }
        if points
            .iter()
            .any(|p| p[3] != 1.0 || p.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidArgument(
                "tracked points must be finite homogeneous vectors with w = 1".into(),
            ));
        }
        Ok(Self { points })
    }

    /// The end-effector origin only.
    pub fn single() -> Self {
        Self {
            points: vec![[0.0, 0.0, 0.0, 1.0]],
        }
    }

    /// Origin plus one-tenth unit vectors along the frame's x, y and z axes.
    pub fn multi() -> Self {
        Self {
            points: vec![
                [0.0, 0.0, 0.0, 1.0],
                [0.1, 0.0, 0.0, 1.0],
                [0.0, 0.1, 0.0, 1.0],
                [0.0, 0.0, 0.1, 1.0],
            ],
        }
    }

    pub fn points(&self) -> &[[f64; 4]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Cartesian feature dimension (three per point).
    pub fn feature_dim(&self) -> usize {
        3 * self.points.len()
    }
}

fn transform_point(t: &Mat, p: &[f64; 4]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..4).map(|k| t[(i, k)] * p[k]).sum();
    }
    out
}

/// Concatenated world positions of every tracked point.
pub fn point_features(chain: &DhChain, q: &[f64], pts: &PointSet) -> Result<Vec<f64>> {
    let t = forward_kinematics(chain, q)?;
    Ok(features_from_transform(&t, pts))
}

pub fn features_from_transform(t: &Mat, pts: &PointSet) -> Vec<f64> {
    pts.points
        .iter()
        .flat_map(|p| transform_point(t, p))
        .collect()
}

/// Exact position Jacobian of all tracked points: for revolute joint `j`,
/// column entries are `zⱼ × (p − oⱼ)` with `zⱼ`, `oⱼ` the joint axis and
/// origin in world coordinates.
pub fn true_jacobian(chain: &DhChain, q: &[f64], pts: &PointSet) -> Result<Mat> {
    chain.check_joints(q)?;
    let frames = chain.frames(q);
    let end = frames.last().expect("frames nonempty");
    let world: Vec<[f64; 3]> = pts.points.iter().map(|p| transform_point(end, p)).collect();

    let n = chain.joint_count();
    let mut jac = Mat::zeros(pts.feature_dim(), n);
    let mut col = 0;
    for (row, frame) in chain.rows.iter().zip(&frames) {
        if !row.actuated {
            continue;
        }
        let z = [frame[(0, 2)], frame[(1, 2)], frame[(2, 2)]];
        let o = [frame[(0, 3)], frame[(1, 3)], frame[(2, 3)]];
        for (k, p) in world.iter().enumerate() {
            let r = [p[0] - o[0], p[1] - o[1], p[2] - o[2]];
            let c = cross(&z, &r);
            for (i, v) in c.iter().enumerate() {
                jac[(3 * k + i, col)] = *v;
            }
        }
        col += 1;
    }
    Ok(jac)
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Two-link planar arm (link lengths in meters).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarArm2 {
    pub l1: f64,
    pub l2: f64,
}

impl Default for PlanarArm2 {
    /// Kinova Gen3 4th and 6th link lengths.
    fn default() -> Self {
        Self {
            l1: 0.3143,
            l2: 0.1774,
        }
    }
}

impl PlanarArm2 {
    pub fn new(l1: f64, l2: f64) -> Result<Self> {
        if !(l1 > 0.0 && l2 > 0.0 && l1.is_finite() && l2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "planar link lengths must be positive, got {l1}, {l2}"
            )));
        }
        Ok(Self { l1, l2 })
    }

    pub fn fk(&self, q: [f64; 2]) -> [f64; 2] {
        let (s1, c1) = q[0].sin_cos();
        let (s12, c12) = (q[0] + q[1]).sin_cos();
        [self.l1 * c1 + self.l2 * c12, self.l1 * s1 + self.l2 * s12]
    }

    pub fn jacobian(&self, q: [f64; 2]) -> Mat {
        let (s1, c1) = q[0].sin_cos();
        let (s12, c12) = (q[0] + q[1]).sin_cos();
        Mat::from_vec_unchecked(
            2,
            2,
            vec![
                -self.l1 * s1 - self.l2 * s12,
                -self.l2 * s12,
                self.l1 * c1 + self.l2 * c12,
                self.l2 * c12,
            ],
        )
    }
}

pub fn planar_fk(arm: &PlanarArm2, q: [f64; 2]) -> [f64; 2] {
    arm.fk(q)
}

pub fn planar_jacobian(arm: &PlanarArm2, q: [f64; 2]) -> Mat {
    arm.jacobian(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::svd;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    fn random_q(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-PI..PI)).collect()
    }

    #[test]
    fn dh_transform_examples() {
        let t = dh_transform(&DhRow::revolute(0.0, 0.0, 0.0, 0.0), 0.0);
        assert_eq!(t, Mat::identity(4));
        let t = dh_transform(&DhRow::revolute(0.0, 1.0, 0.0, 0.0), 0.0);
        let mut expected = Mat::identity(4);
        expected[(0, 3)] = 1.0;
        assert_eq!(t, expected);
    }

    #[test]
    fn kinova_row_one_at_zero() {
        // Direct evaluation: theta = 0 so cos = 1, sin = 0; alpha = pi/2.
        let row = DhChain::kinova_gen3().rows()[1];
        let t = dh_transform(&row, 0.0);
        let ca = FRAC_PI_2.cos();
        let expected = [
            1.0, 0.0, 0.0, 0.0, //
            0.0, ca, -1.0, 0.0, //
            0.0, 1.0, ca, -0.2848, //
            0.0, 0.0, 0.0, 1.0,
        ];
        assert_close(t.as_slice(), &expected, 1e-15);
    }

    #[test]
    fn rotation_blocks_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for row in DhChain::kinova_gen3().rows() {
            let t = dh_transform(row, rng.random_range(-PI..PI));
            let mut r = Mat::zeros(3, 3);
            for i in 0..3 {
                for j in 0..3 {
                    r[(i, j)] = t[(i, j)];
                }
            }
            assert!((&r.transpose().matmul(&r) - &Mat::identity(3)).max_abs() < 1e-12);
            assert_eq!(t.row(3), &[0.0, 0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn translation_chain() {
        let chain = DhChain::new(vec![
            DhRow::revolute(0.0, 1.0, 0.0, 0.0),
            DhRow::revolute(0.0, 1.0, 0.0, 0.0),
        ])
        .unwrap();
        let t = forward_kinematics(&chain, &[0.0, 0.0]).unwrap();
        assert_close(&[t[(0, 3)], t[(1, 3)], t[(2, 3)]], &[2.0, 0.0, 0.0], 0.0);
        assert!(forward_kinematics(&chain, &[0.0]).is_err());
    }

    #[test]
    fn single_row_chain_equals_transform() {
        let row = DhRow::revolute(0.3, 0.2, -0.1, 0.5);
        let chain = DhChain::new(vec![row]).unwrap();
        let t = forward_kinematics(&chain, &[0.7]).unwrap();
        assert_eq!(t, dh_transform(&row, 0.7));
    }

    #[test]
    fn kinova_home_matches_explicit_product() {
        let chain = DhChain::kinova_gen3();
        let q = [0.0; 7];
        // Independent oracle: write out each row's matrix and multiply.
        let table = [
            (PI, 0.0, 0.0),
            (FRAC_PI_2, -0.2848, 0.0),
            (FRAC_PI_2, -0.0118, PI),
            (FRAC_PI_2, -0.4208, PI),
            (FRAC_PI_2, -0.0128, PI),
            (FRAC_PI_2, -0.3143, PI),
            (FRAC_PI_2, 0.0, PI),
            (PI, -0.1674, PI),
        ];
        let mut t = Mat::identity(4);
        for &(alpha, d, theta) in &table {
            let (ct, st, ca, sa) = (
                f64::cos(theta),
                f64::sin(theta),
                f64::cos(alpha),
                f64::sin(alpha),
            );
            let m = Mat::from_rows(&[
                [ct, -ca * st, sa * st, 0.0],
                [st, ca * ct, -sa * ct, 0.0],
                [0.0, sa, ca, d],
                [0.0, 0.0, 0.0, 1.0],
            ])
            .unwrap();
            t = t.matmul(&m);
        }
        let fk = forward_kinematics(&chain, &q).unwrap();
        assert_close(fk.as_slice(), t.as_slice(), 1e-12);
    }

    #[test]
    fn splitting_the_chain() {
        let chain = DhChain::kinova_gen3();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let q = random_q(&mut rng, 7);
        let (head, tail) = chain.rows().split_at(4);
        let head = DhChain::new(head.to_vec()).unwrap();
        let tail = DhChain::new(tail.to_vec()).unwrap();
        let nh = head.joint_count();
        let whole = forward_kinematics(&chain, &q).unwrap();
        let split = forward_kinematics(&head, &q[..nh])
            .unwrap()
            .matmul(&forward_kinematics(&tail, &q[nh..]).unwrap());
        assert_close(whole.as_slice(), split.as_slice(), 1e-12);
    }

    #[test]
    fn point_feature_examples() {
        let identity_chain = DhChain::new(vec![DhRow::revolute(0.0, 0.0, 0.0, 0.0)]).unwrap();
        let f = point_features(&identity_chain, &[0.0], &PointSet::single()).unwrap();
        assert_eq!(f, vec![0.0, 0.0, 0.0]);
        let f = point_features(&identity_chain, &[0.0], &PointSet::multi()).unwrap();
        assert_eq!(&f[9..12], &[0.0, 0.0, 0.1]);

        let mut t = Mat::identity(4);
        t[(0, 3)] = 1.0;
        t[(1, 3)] = 2.0;
        t[(2, 3)] = 3.0;
        assert_eq!(
            features_from_transform(&t, &PointSet::single()),
            vec![1.0, 2.0, 3.0]
        );
    }

    #[test]
    fn point_set_validation() {
        assert!(PointSet::new(vec![]).is_err());
        assert!(PointSet::new(vec![[0.0, 0.0, 0.0, 2.0]]).is_err());
        assert_eq!(PointSet::multi().feature_dim(), 12);
    }

    fn finite_difference_jacobian(chain: &DhChain, q: &[f64], pts: &PointSet, h: f64) -> Mat {
        let m = pts.feature_dim();
        let mut jac = Mat::zeros(m, q.len());
        for j in 0..q.len() {
            let mut qp = q.to_vec();
            let mut qm = q.to_vec();
            qp[j] += h;
            qm[j] -= h;
            let fp = point_features(chain, &qp, pts).unwrap();
            let fm = point_features(chain, &qm, pts).unwrap();
            for i in 0..m {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        jac
    }

    #[test]
    fn true_jacobian_matches_finite_differences() {
        let chain = DhChain::kinova_gen3();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for pts in [PointSet::single(), PointSet::multi()] {
            for _ in 0..100 {
                let q = random_q(&mut rng, 7);
                let exact = true_jacobian(&chain, &q, &pts).unwrap();
                let fd = finite_difference_jacobian(&chain, &q, &pts, 1e-6);
                assert!((&exact - &fd).max_abs() < 1e-5);
            }
        }
    }

    #[test]
    fn zero_moment_arm_gives_zero_jacobian() {
        // Pure rotations about a common z axis with no offsets: the origin
        // never moves.
        let chain = DhChain::new(vec![
            DhRow::revolute(0.0, 0.0, 0.0, 0.0),
            DhRow::revolute(0.0, 0.0, 0.0, 0.3),
        ])
        .unwrap();
        let j = true_jacobian(&chain, &[0.4, -1.0], &PointSet::single()).unwrap();
        assert_eq!(j.max_abs(), 0.0);
    }

    #[test]
    fn planar_chain_agrees_with_closed_form() {
        let arm = PlanarArm2::default();
        let chain = DhChain::planar(&arm);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let q = [rng.random_range(-PI..PI), rng.random_range(-PI..PI)];
            let j3 = true_jacobian(&chain, &q, &PointSet::single()).unwrap();
            let j2 = arm.jacobian(q);
            for i in 0..2 {
                for k in 0..2 {
                    assert!((j3[(i, k)] - j2[(i, k)]).abs() < 1e-10);
                }
            }
            assert!(j3.row(2).iter().all(|v| v.abs() < 1e-15));
            let p = point_features(&chain, &q, &PointSet::single()).unwrap();
            assert_close(&p[..2], &arm.fk(q), 1e-12);
        }
    }

    #[test]
    fn planar_examples() {
        let arm = PlanarArm2::default();
        assert_close(&arm.fk([0.0, 0.0]), &[0.4917, 0.0], 1e-15);
        assert_close(&arm.fk([FRAC_PI_2, 0.0]), &[0.0, 0.4917], 1e-15);
        assert_close(&arm.fk([0.0, FRAC_PI_2]), &[0.3143, 0.1774], 1e-15);
        assert_close(
            arm.jacobian([0.0, 0.0]).as_slice(),
            &[0.0, 0.0, 0.4917, 0.1774],
            1e-15,
        );
        assert_close(
            arm.jacobian([0.0, FRAC_PI_2]).as_slice(),
            &[-0.1774, -0.1774, 0.3143, 0.0],
            1e-15,
        );
        assert!(PlanarArm2::new(0.0, 1.0).is_err());
    }

    #[test]
    fn planar_jacobian_matches_finite_differences() {
        let arm = PlanarArm2::default();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let h = 1e-6;
        for _ in 0..100 {
            let q = [rng.random_range(-PI..PI), rng.random_range(-PI..PI)];
            let j = arm.jacobian(q);
            for k in 0..2 {
                let mut qp = q;
                let mut qm = q;
                qp[k] += h;
                qm[k] -= h;
                let (fp, fm) = (arm.fk(qp), arm.fk(qm));
                for i in 0..2 {
                    let fd = (fp[i] - fm[i]) / (2.0 * h);
                    assert!((fd - j[(i, k)]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn planar_singular_when_extended_or_folded() {
        let arm = PlanarArm2::default();
        for q2 in [0.0, PI] {
            for q1 in [-1.0, 0.0, 0.7] {
                let s = svd(&arm.jacobian([q1, q2])).unwrap();
                assert!(s.sigma_min() < 1e-12);
            }
        }
    }
}
