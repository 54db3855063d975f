use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::rng::seeded;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative given the preactivation `z` and activation `a = σ(z)`.
    /// The ReLU subgradient at exactly zero is zero.
    #[inline]
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Relu => 1,
            Activation::Tanh => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Activation::Relu),
            2 => Some(Activation::Tanh),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub output_dim: usize,
    pub activation: Activation,
    pub seed: u64,
}

impl MlpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::InvalidArgument(
                "network dimensions must be positive".into(),
            ));
        }
        if self.hidden_layers > 0 && self.hidden_width == 0 {
            return Err(Error::InvalidArgument(
                "hidden width must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of each affine layer in order.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = vec![self.input_dim];
        dims.extend(std::iter::repeat_n(self.hidden_width, self.hidden_layers));
        dims.push(self.output_dim);
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_shapes().iter().map(|(i, o)| i * o + o).sum()
    }
}

/// Affine layer `y = W a + b` with `W` stored output-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: Mat,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weights: Mat::zeros(fan_out, fan_in),
            bias: vec![0.0; fan_out],
        }
    }
}

/// Fully connected network; hidden layers share one activation and the
/// output layer is linear.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<Layer>,
}

/// Intermediate values of one forward pass, kept for backpropagation.
pub(crate) struct ForwardCache {
    /// `activations[0]` is the input; `activations[k]` the output of layer k.
    activations: Vec<Vec<f64>>,
    preactivations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub(crate) fn output(&self) -> &[f64] {
        self.activations.last().expect("nonempty")
    }
}

/// Gradient buffers shaped like the network's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Self {
            layers: mlp
                .spec
                .layer_shapes()
                .into_iter()
                .map(|(i, o)| Layer::zeros(i, o))
                .collect(),
        }
    }

    pub fn scale(&mut self, c: f64) {
        for l in &mut self.layers {
            l.weights.as_mut_slice().iter_mut().for_each(|v| *v *= c);
            l.bias.iter_mut().for_each(|v| *v *= c);
        }
    }

    /// Adds `wd · W` to every weight gradient; biases are not decayed.
    pub fn add_weight_decay(&mut self, mlp: &Mlp, wd: f64) {
        if wd == 0.0 {
            return;
        }
        for (g, l) in self.layers.iter_mut().zip(&mlp.layers) {
            for (gv, wv) in g
                .weights
                .as_mut_slice()
                .iter_mut()
                .zip(l.weights.as_slice())
            {
                *gv += wd * wv;
            }
        }
    }

    /// Flat view in parameter order (weights then bias, layer by layer).
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.as_slice().iter().chain(&l.bias).copied())
            .collect()
    }
}

impl Mlp {
    /// Glorot-uniform weights and zero biases drawn from `spec.seed`.
    pub fn new(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = seeded(spec.seed);
        let layers = spec
            .layer_shapes()
            .into_iter()
            .map(|(fan_in, fan_out)| {
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let mut layer = Layer::zeros(fan_in, fan_out);
                for w in layer.weights.as_mut_slice() {
                    *w = rng.random_range(-limit..=limit);
                }
                layer
            })
            .collect();
        Ok(Self { spec, layers })
    }

    /// Network with explicit parameters; shapes must match the spec.
    pub fn from_layers(spec: MlpSpec, layers: Vec<Layer>) -> Result<Self> {
        spec.validate()?;
        let shapes = spec.layer_shapes();
        if shapes.len() != layers.len() {
            return Err(Error::DimensionMismatch {
                context: "layer count",
                expected: shapes.len(),
                got: layers.len(),
            });
        }
        for ((fan_in, fan_out), l) in shapes.into_iter().zip(&layers) {
            if l.weights.shape() != (fan_out, fan_in) || l.bias.len() != fan_out {
                return Err(Error::ShapeMismatch {
                    context: "layer parameters",
                    left: (fan_out, fan_in),
                    right: l.weights.shape(),
                });
            }
            if !l.weights.is_finite() || l.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::NonFinite("layer parameters"));
            }
        }
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.as_slice().iter().chain(&l.bias).copied())
            .collect()
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.spec.input_dim {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.spec.input_dim,
                got: input.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let last = self.layers.len() - 1;
        let mut a = input.to_vec();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = affine(layer, &a);
            if k != last {
                z.iter_mut()
                    .for_each(|v| *v = self.spec.activation.apply(*v));
            }
            a = z;
        }
        Ok(a)
    }

    pub(crate) fn forward_cached(&self, input: &[f64]) -> ForwardCache {
        debug_assert_eq!(input.len(), self.spec.input_dim);
        let last = self.layers.len() - 1;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut preactivations = Vec::with_capacity(self.layers.len());
        activations.push(input.to_vec());
        for (k, layer) in self.layers.iter().enumerate() {
            let z = affine(layer, activations.last().expect("nonempty"));
            let a = if k == last {
                z.clone()
            } else {
                z.iter().map(|&v| self.spec.activation.apply(v)).collect()
            };
            preactivations.push(z);
            activations.push(a);
        }
        ForwardCache {
            activations,
            preactivations,
        }
    }

    /// Accumulates parameter gradients for the upstream gradient `dy` on the
    /// output into `grads`.
    pub(crate) fn backward(&self, cache: &ForwardCache, dy: &[f64], grads: &mut Gradients) {
        let mut delta = dy.to_vec();
        for k in (0..self.layers.len()).rev() {
            let a_in = &cache.activations[k];
            let g = &mut grads.layers[k];
            let cols = a_in.len();
            let gw = g.weights.as_mut_slice();
            for (i, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (w, &a) in gw[i * cols..(i + 1) * cols].iter_mut().zip(a_in) {
                    *w += d * a;
                }
            }
            for (b, &d) in g.bias.iter_mut().zip(&delta) {
                *b += d;
            }
            if k > 0 {
                let mut prev = self.layers[k].weights.tr_mul_vec(&delta);
                let z = &cache.preactivations[k - 1];
                let a = &cache.activations[k];
                for ((p, &zv), &av) in prev.iter_mut().zip(z).zip(a) {
                    *p *= self.spec.activation.derivative(zv, av);
                }
                delta = prev;
            }
        }
    }

    /// `∂f/∂input = W_L D_{L-1} W_{L-1} ⋯ D_1 W_1` with `D_k` the diagonal of
    /// activation derivatives.
    pub fn input_jacobian(&self, input: &[f64]) -> Result<Mat> {
        self.check_input(input)?;
        let cache = self.forward_cached(input);
        let mut jac = self.layers[0].weights.clone();
        for k in 1..self.layers.len() {
            let z = &cache.preactivations[k - 1];
            let a = &cache.activations[k];
            let cols = jac.cols();
            let data = jac.as_mut_slice();
            for (i, (&zv, &av)) in z.iter().zip(a).enumerate() {
                let d = self.spec.activation.derivative(zv, av);
                data[i * cols..(i + 1) * cols]
                    .iter_mut()
                    .for_each(|v| *v *= d);
            }
            jac = self.layers[k].weights.matmul(&jac);
        }
        Ok(jac)
    }
}

fn affine(layer: &Layer, a: &[f64]) -> Vec<f64> {
    let cols = a.len();
    let w = layer.weights.as_slice();
    layer
        .bias
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            b + w[i * cols..(i + 1) * cols]
                .iter()
                .zip(a)
                .map(|(x, y)| x * y)
                .sum::<f64>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn spec(
        input: usize,
        hidden: usize,
        width: usize,
        out: usize,
        act: Activation,
    ) -> MlpSpec {
        MlpSpec {
            input_dim: input,
            hidden_layers: hidden,
            hidden_width: width,
            output_dim: out,
            activation: act,
            seed: 17,
        }
    }

    fn finite_difference_jacobian(mlp: &Mlp, x: &[f64], h: f64) -> Mat {
        let out = mlp.spec().output_dim;
        let mut j = Mat::zeros(out, x.len());
        for c in 0..x.len() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[c] += h;
            xm[c] -= h;
            let fp = mlp.forward(&xp).unwrap();
            let fm = mlp.forward(&xm).unwrap();
            for r in 0..out {
                j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        j
    }

    #[test]
    fn linear_network() {
        let s = spec(2, 0, 0, 2, Activation::Tanh);
        let w = Mat::from_rows(&[[1.0, 2.0], [3.0, -1.0]]).unwrap();
        let mlp = Mlp::from_layers(
            s,
            vec![Layer {
                weights: w.clone(),
                bias: vec![0.0; 2],
            }],
        )
        .unwrap();
        assert_eq!(mlp.forward(&[1.0, 1.0]).unwrap(), vec![3.0, 2.0]);
        assert_eq!(mlp.input_jacobian(&[5.0, -2.0]).unwrap(), w);
    }

    #[test]
    fn zero_tanh_network_outputs_zero() {
        let s = spec(3, 2, 5, 2, Activation::Tanh);
        let layers = s
            .layer_shapes()
            .into_iter()
            .map(|(i, o)| Layer::zeros(i, o))
            .collect();
        let mlp = Mlp::from_layers(s, layers).unwrap();
        assert_eq!(mlp.forward(&[1.0, -4.0, 2.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn tanh_jacobian_at_origin_is_weight_product() {
        let s = spec(3, 1, 4, 2, Activation::Tanh);
        let mlp = Mlp::new(s).unwrap();
        let j = mlp.input_jacobian(&[0.0; 3]).unwrap();
        let expected = mlp.layers()[1].weights.matmul(&mlp.layers()[0].weights);
        assert!((&j - &expected).max_abs() < 1e-15);
    }

    #[test]
    fn deterministic_forward() {
        let s = spec(4, 2, 16, 3, Activation::Relu);
        let a = Mlp::new(s)
            .unwrap()
            .forward(&[0.1, 0.2, -0.3, 0.4])
            .unwrap();
        let b = Mlp::new(s)
            .unwrap()
            .forward(&[0.1, 0.2, -0.3, 0.4])
            .unwrap();
        assert_eq!(a, b);
        assert!(Mlp::new(s).unwrap().forward(&[0.1]).is_err());
    }

    #[test]
    fn init_respects_glorot_bounds() {
        let s = spec(14, 2, 100, 3, Activation::Tanh);
        let mlp = Mlp::new(s).unwrap();
        for (l, (i, o)) in mlp.layers().iter().zip(s.layer_shapes()) {
            let limit = (6.0 / (i + o) as f64).sqrt();
            assert!(l.weights.max_abs() <= limit);
            assert!(l.bias.iter().all(|&b| b == 0.0));
        }
        assert_eq!(mlp.parameters().len(), s.parameter_count());
    }

    #[test]
    fn tanh_jacobian_matches_finite_differences() {
        let s = MlpSpec {
            seed: 3,
            ..spec(14, 4, 100, 12, Activation::Tanh)
        };
        let mlp = Mlp::new(s).unwrap();
        let x: Vec<f64> = (0..14).map(|i| (i as f64 * 0.37).sin()).collect();
        let exact = mlp.input_jacobian(&x).unwrap();
        let fd = finite_difference_jacobian(&mlp, &x, 1e-5);
        let rel = (&exact - &fd).frobenius_norm() / exact.frobenius_norm();
        assert!(rel < 1e-4, "{rel}");
    }

    #[test]
    fn relu_jacobian_matches_away_from_kinks() {
        let s = spec(5, 2, 30, 4, Activation::Relu);
        let mlp = Mlp::new(s).unwrap();
        let x = [0.3, -0.2, 0.9, 0.1, -0.5];
        let cache = mlp.forward_cached(&x);
        let min_abs = cache
            .preactivations
            .iter()
            .take(2)
            .flatten()
            .fold(f64::INFINITY, |m, v| m.min(v.abs()));
        if min_abs > 1e-3 {
            let exact = mlp.input_jacobian(&x).unwrap();
            let fd = finite_difference_jacobian(&mlp, &x, 1e-6);
            assert!((&exact - &fd).max_abs() < 1e-6);
        }
    }

    #[test]
    fn relu_subgradient_at_zero() {
        assert_eq!(Activation::Relu.derivative(0.0, 0.0), 0.0);
        assert_eq!(Activation::Relu.derivative(1e-300, 1e-300), 1.0);
    }
}
