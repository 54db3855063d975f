use serde::{Deserialize, Serialize};

use crate::linalg::Mat;

/// How joint angles are presented to a network.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointEmbedding {
    /// `[cos q₁ … cos qₙ, sin q₁ … sin qₙ]`.
    #[default]
    Trig,
    /// The raw angles.
    Raw,
}

impl JointEmbedding {
    pub fn input_dim(self, joints: usize) -> usize {
        match self {
            JointEmbedding::Trig => 2 * joints,
            JointEmbedding::Raw => joints,
        }
    }

    pub fn embed(self, q: &[f64]) -> Vec<f64> {
        match self {
            JointEmbedding::Trig => q
                .iter()
                .map(|v| v.cos())
                .chain(q.iter().map(|v| v.sin()))
                .collect(),
            JointEmbedding::Raw => q.to_vec(),
        }
    }

    /// Converts a Jacobian with respect to the embedding into one with
    /// respect to `q`: `∂f/∂qⱼ = −sin qⱼ ∂f/∂cⱼ + cos qⱼ ∂f/∂sⱼ`.
    pub fn pull_back(self, jac_embedded: &Mat, q: &[f64]) -> Mat {
        match self {
            JointEmbedding::Raw => jac_embedded.clone(),
            JointEmbedding::Trig => {
                let n = q.len();
                let m = jac_embedded.rows();
                let mut out = Mat::zeros(m, n);
                for (j, &qj) in q.iter().enumerate() {
                    let (s, c) = qj.sin_cos();
                    for i in 0..m {
                        out[(i, j)] = -s * jac_embedded[(i, j)] + c * jac_embedded[(i, n + j)];
                    }
                }
                out
            }
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            JointEmbedding::Trig => 1,
            JointEmbedding::Raw => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(JointEmbedding::Trig),
            2 => Some(JointEmbedding::Raw),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_layout() {
        let e = JointEmbedding::Trig.embed(&[0.0, std::f64::consts::FRAC_PI_2]);
        assert_eq!(e.len(), 4);
        assert_eq!(e[0], 1.0);
        assert!((e[3] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pull_back_at_zero_uses_sin_channels_only() {
        let je = Mat::from_rows(&[[10.0, 20.0, 1.0, 2.0], [30.0, 40.0, 3.0, 4.0]]).unwrap();
        let j = JointEmbedding::Trig.pull_back(&je, &[0.0, 0.0]);
        assert_eq!(j, Mat::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap());
    }
}
