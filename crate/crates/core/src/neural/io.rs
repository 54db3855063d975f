use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::embedding::JointEmbedding;
use super::mlp::{Activation, Layer, Mlp, MlpSpec};
use crate::collection::Reader;
use crate::env::EnvKind;
use crate::error::{Error, Result};
use crate::linalg::Mat;

pub const MODEL_MAGIC: &[u8; 4] = b"NJLM";
pub const MODEL_VERSION: u32 = 1;

/// What a network's output means.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    /// Output is the Jacobian, row-major `m × n`.
    Jacobian,
    /// Output is the feature vector; the Jacobian is its input derivative.
    Kinematics,
}

impl ModelKind {
    fn code(self) -> u8 {
        match self {
            ModelKind::Jacobian => 1,
            ModelKind::Kinematics => 2,
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(ModelKind::Jacobian),
            2 => Some(ModelKind::Kinematics),
            _ => None,
        }
    }
}

/// A trained network together with how to feed it and read it.
#[derive(Clone, Debug, PartialEq)]
pub struct NeuralModel {
    pub kind: ModelKind,
    pub env: EnvKind,
    pub embedding: JointEmbedding,
    /// Weight of the inverse secant term used in training; zero for
    /// kinematics models.
    pub beta: f64,
    pub mlp: Mlp,
}

impl NeuralModel {
    pub fn new(
        kind: ModelKind,
        env: EnvKind,
        embedding: JointEmbedding,
        beta: f64,
        mlp: Mlp,
    ) -> Result<Self> {
        let (m, n) = (env.feature_dim(), env.joint_dim());
        let spec = mlp.spec();
        let out = match kind {
            ModelKind::Jacobian => m * n,
            ModelKind::Kinematics => m,
        };
        if spec.input_dim != embedding.input_dim(n) || spec.output_dim != out {
            return Err(Error::ShapeMismatch {
                context: "model dimensions",
                left: (embedding.input_dim(n), out),
                right: (spec.input_dim, spec.output_dim),
            });
        }
        Ok(Self {
            kind,
            env,
            embedding,
            beta,
            mlp,
        })
    }

    /// Estimated `m × n` Jacobian at `q`.
    pub fn jacobian(&self, q: &[f64]) -> Result<Mat> {
        let (m, n) = (self.env.feature_dim(), self.env.joint_dim());
        if q.len() != n {
            return Err(Error::DimensionMismatch {
                context: "model joints",
                expected: n,
                got: q.len(),
            });
        }
        let input = self.embedding.embed(q);
        match self.kind {
            ModelKind::Jacobian => Mat::new(m, n, self.mlp.forward(&input)?),
            ModelKind::Kinematics => Ok(self
                .embedding
                .pull_back(&self.mlp.input_jacobian(&input)?, q)),
        }
    }

    /// Predicted features; only meaningful for kinematics models.
    pub fn features(&self, q: &[f64]) -> Result<Vec<f64>> {
        if self.kind != ModelKind::Kinematics {
            return Err(Error::InvalidArgument(
                "a Jacobian model does not predict features".into(),
            ));
        }
        self.mlp.forward(&self.embedding.embed(q))
    }
}

/// Layout (little endian): magic `NJLM`, `u32` version, `u8` model kind,
/// env kind, embedding and activation, `u32` input dim, hidden layers,
/// hidden width and output dim, `u64` init seed, `u32` m and n, `f64` beta,
/// `u64` parameter count, then parameters (weights row-major then bias,
/// layer by layer).
pub fn save_model(model: &NeuralModel, path: &Path) -> Result<()> {
    let spec = model.mlp.spec();
    let params = model.mlp.parameters();
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&MODEL_VERSION.to_le_bytes())?;
    w.write_all(&[
        model.kind.code(),
        model.env.code(),
        model.embedding.code(),
        spec.activation.code(),
    ])?;
    for d in [
        spec.input_dim,
        spec.hidden_layers,
        spec.hidden_width,
        spec.output_dim,
    ] {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    w.write_all(&spec.seed.to_le_bytes())?;
    w.write_all(&(model.env.feature_dim() as u32).to_le_bytes())?;
    w.write_all(&(model.env.joint_dim() as u32).to_le_bytes())?;
    w.write_all(&model.beta.to_le_bytes())?;
    w.write_all(&(params.len() as u64).to_le_bytes())?;
    for p in params {
        w.write_all(&p.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<NeuralModel> {
    let bytes = fs::read(path)?;
    let mut r = Reader::new(&bytes, "model file");
    if r.take(4)? != MODEL_MAGIC {
        return Err(Error::Format("not a model file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::Format(format!(
            "model format version {version}, expected {MODEL_VERSION}"
        )));
    }
    let bad = |what: &str| Error::Format(format!("unknown {what} code"));
    let kind = ModelKind::from_code(r.u8()?).ok_or_else(|| bad("model kind"))?;
    let env = EnvKind::from_code(r.u8()?).ok_or_else(|| bad("env kind"))?;
    let embedding = JointEmbedding::from_code(r.u8()?).ok_or_else(|| bad("embedding"))?;
    let activation = Activation::from_code(r.u8()?).ok_or_else(|| bad("activation"))?;
    let spec = MlpSpec {
        input_dim: r.u32()? as usize,
        hidden_layers: r.u32()? as usize,
        hidden_width: r.u32()? as usize,
        output_dim: r.u32()? as usize,
        activation,
        seed: r.u64()?,
    };
    let (m, n) = (r.u32()? as usize, r.u32()? as usize);
    if (m, n) != (env.feature_dim(), env.joint_dim()) {
        return Err(Error::Format(format!(
            "header dims (m = {m}, n = {n}) do not match env {}",
            env.name()
        )));
    }
    let beta = r.f64()?;
    spec.validate()?;
    let count = r.u64()? as usize;
    if count != spec.parameter_count() {
        return Err(Error::Format(format!(
            "model declares {count} parameters, architecture needs {}",
            spec.parameter_count()
        )));
    }
    let mut layers = Vec::new();
    for (fan_in, fan_out) in spec.layer_shapes() {
        let weights = (0..fan_in * fan_out)
            .map(|_| r.f64())
            .collect::<Result<Vec<_>>>()?;
        let bias = (0..fan_out).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        layers.push(Layer {
            weights: Mat::new(fan_out, fan_in, weights)?,
            bias,
        });
    }
    r.finish()?;
    NeuralModel::new(kind, env, embedding, beta, Mlp::from_layers(spec, layers)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(kind: ModelKind) -> NeuralModel {
        let out = if kind == ModelKind::Jacobian { 21 } else { 3 };
        let spec = MlpSpec {
            input_dim: 14,
            hidden_layers: 2,
            hidden_width: 16,
            output_dim: out,
            activation: Activation::Relu,
            seed: 4,
        };
        NeuralModel::new(
            kind,
            EnvKind::SinglePoint7,
            JointEmbedding::Trig,
            0.5,
            Mlp::new(spec).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        for kind in [ModelKind::Jacobian, ModelKind::Kinematics] {
            let path = dir.path().join("m.njlm");
            let m = model(kind);
            save_model(&m, &path).unwrap();
            let back = load_model(&path).unwrap();
            assert_eq!(back, m);
            let q = [0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7];
            assert_eq!(back.jacobian(&q).unwrap(), m.jacobian(&q).unwrap());
        }
    }

    #[test]
    fn truncation_and_version_are_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.njlm");
        save_model(&model(ModelKind::Jacobian), &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        assert!(matches!(load_model(&path), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[4] = 7;
        fs::write(&path, &bad).unwrap();
        assert!(matches!(load_model(&path), Err(Error::Format(ref s)) if s.contains("version")));
    }

    #[test]
    fn shapes() {
        let q = [0.0; 7];
        assert_eq!(
            model(ModelKind::Jacobian).jacobian(&q).unwrap().shape(),
            (3, 7)
        );
        assert_eq!(
            model(ModelKind::Kinematics).jacobian(&q).unwrap().shape(),
            (3, 7)
        );
        assert!(model(ModelKind::Jacobian).features(&q).is_err());
    }
}
