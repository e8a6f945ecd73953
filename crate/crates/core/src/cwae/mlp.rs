//! Fully connected encoder/decoder pair with hand-written backpropagation.
//!
//! All parameters live in one flat vector; each layer owns a row-major
//! `outputs × inputs` weight block followed by its bias.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::sample::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
    Sigmoid,
}

impl Activation {
    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Identity => v,
            Activation::Sigmoid => 1.0 / (1.0 + (-v).exp()),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, out: f64) -> f64 {
        match self {
            Activation::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
            Activation::Sigmoid => out * (1.0 - out),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
            Activation::Sigmoid => "sigmoid",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Identity => 1,
            Activation::Sigmoid => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Activation> {
        match code {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Identity),
            2 => Some(Activation::Sigmoid),
            _ => None,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "identity" | "linear" => Ok(Activation::Identity),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::invalid(format!("unknown activation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub inputs: usize,
    pub outputs: usize,
    offset: usize,
}

impl LayerShape {
    pub fn num_params(&self) -> usize {
        self.outputs * (self.inputs + 1)
    }

    fn weight_range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.inputs * self.outputs
    }

    fn bias_range(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.inputs * self.outputs;
        start..start + self.outputs
    }
}

/// Encoder and decoder weights.
///
/// Hidden layers use `hidden_activation`, the latent layer is linear and the
/// decoder's last layer uses `output_activation`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    layers: Vec<LayerShape>,
    encoder_layers: usize,
    values: Vec<f64>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

/// Layer widths of an autoencoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub input_dim: usize,
    pub encoder_hidden: Vec<usize>,
    pub latent_dim: usize,
    pub decoder_hidden: Vec<usize>,
}

impl Architecture {
    fn widths(&self) -> (Vec<usize>, usize) {
        let mut w = vec![self.input_dim];
        w.extend(&self.encoder_hidden);
        w.push(self.latent_dim);
        let encoder_layers = w.len() - 1;
        w.extend(&self.decoder_hidden);
        w.push(self.input_dim);
        (w, encoder_layers)
    }
}

fn build_layers(widths: &[usize]) -> Vec<LayerShape> {
    let mut offset = 0;
    widths
        .windows(2)
        .map(|w| {
            let shape = LayerShape {
                inputs: w[0],
                outputs: w[1],
                offset,
            };
            offset += shape.num_params();
            shape
        })
        .collect()
}

impl MlpParams {
    /// All parameters zero.
    pub fn zeros(
        arch: &Architecture,
        hidden_activation: Activation,
        output_activation: Activation,
    ) -> Result<MlpParams> {
        let (widths, encoder_layers) = arch.widths();
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::invalid(format!("layer widths must be positive: {widths:?}")));
        }
        let layers = build_layers(&widths);
        let total = layers.iter().map(LayerShape::num_params).sum();
        Ok(MlpParams {
            layers,
            encoder_layers,
            values: vec![0.0; total],
            hidden_activation,
            output_activation,
        })
    }

    /// Weights uniform in `±√(k/fan_in)` with `k = 6` for layers feeding a
    /// ReLU and `k = 3` otherwise; biases zero.
    pub fn random<R: Rng + ?Sized>(
        arch: &Architecture,
        hidden_activation: Activation,
        output_activation: Activation,
        rng: &mut R,
    ) -> Result<MlpParams> {
        let mut p = MlpParams::zeros(arch, hidden_activation, output_activation)?;
        for l in 0..p.layers.len() {
            let shape = p.layers[l];
            let k = if p.activation(l) == Activation::Relu { 6.0 } else { 3.0 };
            let limit = (k / shape.inputs as f64).sqrt();
            for w in &mut p.values[shape.weight_range()] {
                *w = rng.gen_range(-limit..limit);
            }
        }
        Ok(p)
    }

    pub(crate) fn from_parts(
        shapes: &[(usize, usize)],
        encoder_layers: usize,
        values: Vec<f64>,
        hidden_activation: Activation,
        output_activation: Activation,
    ) -> Result<MlpParams> {
        if shapes.is_empty() || encoder_layers == 0 || encoder_layers >= shapes.len() {
            return Err(Error::invalid("network needs encoder and decoder layers"));
        }
        let mut widths = vec![shapes[0].0];
        for (i, &(inputs, outputs)) in shapes.iter().enumerate() {
            if inputs != widths[i] || outputs == 0 {
                return Err(Error::invalid(format!("layer {i} shape does not compose")));
            }
            widths.push(outputs);
        }
        let layers = build_layers(&widths);
        let total: usize = layers.iter().map(LayerShape::num_params).sum();
        if values.len() != total {
            return Err(Error::invalid(format!(
                "expected {total} parameters, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite parameter"));
        }
        Ok(MlpParams {
            layers,
            encoder_layers,
            values,
            hidden_activation,
            output_activation,
        })
    }

    pub fn layers(&self) -> &[LayerShape] {
        &self.layers
    }

    pub fn encoder_layers(&self) -> usize {
        self.encoder_layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn latent_dim(&self) -> usize {
        self.layers[self.encoder_layers - 1].outputs
    }

    pub fn num_params(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.values[self.layers[layer].weight_range()]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        let r = self.layers[layer].weight_range();
        &mut self.values[r]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        &self.values[self.layers[layer].bias_range()]
    }

    pub fn bias_mut(&mut self, layer: usize) -> &mut [f64] {
        let r = self.layers[layer].bias_range();
        &mut self.values[r]
    }

    /// Activation applied after layer `l`.
    pub fn activation(&self, l: usize) -> Activation {
        if l + 1 == self.encoder_layers {
            Activation::Identity
        } else if l + 1 == self.layers.len() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    fn check_input(&self, x: &Sample) -> Result<()> {
        if x.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.dim(),
            });
        }
        Ok(())
    }

    fn layer_forward(&self, l: usize, input: &[f64], n: usize) -> Vec<f64> {
        let shape = self.layers[l];
        let w = self.weights(l);
        let b = self.bias(l);
        let act = self.activation(l);
        let mut out = vec![0.0; n * shape.outputs];
        for (row_in, row_out) in input
            .chunks_exact(shape.inputs)
            .zip(out.chunks_exact_mut(shape.outputs))
        {
            for (o, y) in row_out.iter_mut().enumerate() {
                let wo = &w[o * shape.inputs..(o + 1) * shape.inputs];
                let z = b[o] + wo.iter().zip(row_in).map(|(a, c)| a * c).sum::<f64>();
                *y = act.apply(z);
            }
        }
        out
    }

    /// Runs the full network, keeping every layer's output.
    pub fn forward(&self, x: &Sample) -> Result<ForwardPass> {
        self.check_input(x)?;
        let n = x.len();
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.as_flat().to_vec());
        for l in 0..self.layers.len() {
            let next = self.layer_forward(l, &activations[l], n);
            activations.push(next);
        }
        Ok(ForwardPass { activations, n })
    }

    /// Latent codes of `x`.
    pub fn encode(&self, x: &Sample) -> Result<Sample> {
        self.check_input(x)?;
        let n = x.len();
        let mut cur = x.as_flat().to_vec();
        for l in 0..self.encoder_layers {
            cur = self.layer_forward(l, &cur, n);
        }
        Sample::from_flat(cur, self.latent_dim())
    }

    /// Decoder applied to latent codes.
    pub fn decode(&self, z: &Sample) -> Result<Sample> {
        if z.dim() != self.latent_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.latent_dim(),
                actual: z.dim(),
            });
        }
        let n = z.len();
        let mut cur = z.as_flat().to_vec();
        for l in self.encoder_layers..self.layers.len() {
            cur = self.layer_forward(l, &cur, n);
        }
        Sample::from_flat(cur, self.input_dim())
    }

    /// Backpropagates `grad_out` (gradient with respect to the output of layer
    /// `to - 1`) down to the input of layer `from`, accumulating parameter
    /// gradients into `grads`. Returns the gradient at the input of `from`.
    pub(crate) fn backward_range(
        &self,
        pass: &ForwardPass,
        from: usize,
        to: usize,
        mut grad_out: Vec<f64>,
        grads: &mut [f64],
    ) -> Vec<f64> {
        let n = pass.n;
        for l in (from..to).rev() {
            let shape = self.layers[l];
            let act = self.activation(l);
            let out = &pass.activations[l + 1];
            let input = &pass.activations[l];
            for (g, &y) in grad_out.iter_mut().zip(out) {
                *g *= act.derivative_from_output(y);
            }
            let w = self.weights(l);
            let (gw, gb) = grads[shape.offset..shape.offset + shape.num_params()]
                .split_at_mut(shape.inputs * shape.outputs);
            let mut grad_in = vec![0.0; n * shape.inputs];
            for i in 0..n {
                let d = &grad_out[i * shape.outputs..(i + 1) * shape.outputs];
                let xin = &input[i * shape.inputs..(i + 1) * shape.inputs];
                let gin = &mut grad_in[i * shape.inputs..(i + 1) * shape.inputs];
                for (o, &dv) in d.iter().enumerate() {
                    if dv == 0.0 {
                        continue;
                    }
                    gb[o] += dv;
                    let row = o * shape.inputs;
                    for k in 0..shape.inputs {
                        gw[row + k] += dv * xin[k];
                        gin[k] += dv * w[row + k];
                    }
                }
            }
            grad_out = grad_in;
        }
        grad_out
    }
}

/// Layer outputs of one forward pass; `activations[0]` is the input.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    activations: Vec<Vec<f64>>,
    n: usize,
}

impl ForwardPass {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("at least one layer")
    }

    pub fn layer_output(&self, l: usize) -> &[f64] {
        &self.activations[l + 1]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn arch() -> Architecture {
        Architecture {
            input_dim: 3,
            encoder_hidden: vec![4],
            latent_dim: 2,
            decoder_hidden: vec![5],
        }
    }

    #[test]
    fn layer_shapes_compose() {
        let p = MlpParams::zeros(&arch(), Activation::Relu, Activation::Identity).unwrap();
        let shapes: Vec<_> = p.layers().iter().map(|l| (l.inputs, l.outputs)).collect();
        assert_eq!(shapes, vec![(3, 4), (4, 2), (2, 5), (5, 3)]);
        assert_eq!(p.num_params(), 4 * 4 + 2 * 5 + 5 * 3 + 3 * 6);
        assert_eq!(p.latent_dim(), 2);
        assert_eq!(p.activation(1), Activation::Identity);
        assert_eq!(p.activation(0), Activation::Relu);
    }

    #[test]
    fn zero_width_rejected() {
        let mut a = arch();
        a.latent_dim = 0;
        assert!(MlpParams::zeros(&a, Activation::Relu, Activation::Identity).is_err());
    }

    #[test]
    fn random_init_respects_bounds_and_seed() {
        let a = arch();
        let p = MlpParams::random(&a, Activation::Relu, Activation::Identity, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let q = MlpParams::random(&a, Activation::Relu, Activation::Identity, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(p, q);
        let limit = (6.0f64 / 3.0).sqrt();
        assert!(p.weights(0).iter().all(|w| w.abs() <= limit));
        assert!(p.bias(0).iter().all(|&b| b == 0.0));
    }

    #[test]
    fn encode_then_decode_equals_forward() {
        let a = arch();
        let p = MlpParams::random(&a, Activation::Relu, Activation::Sigmoid, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let x = Sample::from_rows(&[[0.1, 0.2, 0.3], [1.0, -1.0, 0.5]]).unwrap();
        let f = p.forward(&x).unwrap();
        let z = p.encode(&x).unwrap();
        assert_eq!(z.as_flat(), f.layer_output(1));
        assert_eq!(p.decode(&z).unwrap().as_flat(), f.output());
        assert!(f.output().iter().all(|v| *v > 0.0 && *v < 1.0));
    }
}
