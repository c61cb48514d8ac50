//! Dense feed-forward net with exact analytic backprop.

use super::NnError;
use serde::{Deserialize, Serialize};

const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Feed-forward net: a chain of `LayerNorm? -> Linear -> activation` blocks.
///
/// The hidden activation is applied after every layer except the last, which
/// stays linear. When a layer's norm toggle is set, its input is normalized
/// (zero mean, unit variance, no affine parameters) before the affine map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamNet {
    widths: Vec<usize>,
    layer_norm: Vec<bool>,
    activation: Activation,
    params: Vec<f64>,
}

/// Cached intermediate values from one forward pass, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Input to each layer (post-activation of the previous one).
    inputs: Vec<Vec<f64>>,
    /// Normalized inputs for layers with the norm toggle on.
    normed: Vec<Option<Vec<f64>>>,
    /// Pre-activation outputs of each layer.
    preacts: Vec<Vec<f64>>,
}

impl ParamNet {
    /// Zero-initialized net with the given `[input, hidden.., output]` widths.
    ///
    /// `layer_norm` enables input normalization on every hidden layer; the
    /// output layer input is never normalized.
    pub fn new(widths: &[usize], layer_norm: bool, activation: Activation) -> Self {
        assert!(widths.len() >= 2, "net needs at least input and output widths");
        assert!(widths.iter().all(|&w| w >= 1), "layer widths must be >= 1");
        let n_layers = widths.len() - 1;
        let mut flags = vec![layer_norm; n_layers];
        if let Some(last) = flags.last_mut() {
            *last = false;
        }
        let count: usize = (0..n_layers).map(|l| widths[l] * widths[l + 1] + widths[l + 1]).sum();
        ParamNet {
            widths: widths.to_vec(),
            layer_norm: flags,
            activation,
            params: vec![0.0; count],
        }
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn layer_norm_flags(&self) -> &[bool] {
        &self.layer_norm
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Offset of layer `l`'s weight block in the flat parameter vector.
    pub fn weight_offset(&self, layer: usize) -> usize {
        (0..layer).map(|l| self.widths[l] * self.widths[l + 1] + self.widths[l + 1]).sum()
    }

    /// (rows, cols) of layer `l`'s weight matrix, i.e. (output, input) width.
    pub fn layer_shape(&self, layer: usize) -> (usize, usize) {
        (self.widths[layer + 1], self.widths[layer])
    }

    fn check_input(&self, input: &[f64]) -> Result<(), NnError> {
        if input.len() != self.input_width() {
            return Err(NnError::WidthMismatch { expected: self.input_width(), got: input.len() });
        }
        Ok(())
    }

    /// Runs the net on `input`. Deterministic; finite output for finite
    /// input and parameters.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        self.check_input(input)?;
        let mut x = input.to_vec();
        let mut scratch = Vec::new();
        for layer in 0..self.num_layers() {
            let normed = if self.layer_norm[layer] { Some(layer_norm(&x)) } else { None };
            let fed = normed.as_deref().unwrap_or(&x);
            self.affine(layer, fed, &mut scratch);
            if layer + 1 < self.num_layers() {
                for z in &mut scratch {
                    *z = self.activation.apply(*z);
                }
            }
            std::mem::swap(&mut x, &mut scratch);
        }
        Ok(x)
    }

    /// Forward pass that also records the intermediates needed by `backward`.
    pub fn forward_traced(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardTrace), NnError> {
        self.check_input(input)?;
        let n = self.num_layers();
        let mut trace = ForwardTrace {
            inputs: Vec::with_capacity(n),
            normed: Vec::with_capacity(n),
            preacts: Vec::with_capacity(n),
        };
        let mut x = input.to_vec();
        for layer in 0..n {
            let normed = if self.layer_norm[layer] { Some(layer_norm(&x)) } else { None };
            let mut z = Vec::new();
            {
                let fed = normed.as_deref().unwrap_or(&x);
                self.affine(layer, fed, &mut z);
            }
            trace.inputs.push(x);
            trace.normed.push(normed);
            let next = if layer + 1 < n {
                z.iter().map(|&v| self.activation.apply(v)).collect()
            } else {
                z.clone()
            };
            trace.preacts.push(z);
            x = next;
        }
        Ok((x, trace))
    }

    /// Accumulates dLoss/dParams into `grads` given dLoss/dOutput, and
    /// returns dLoss/dInput. `grads` must have `num_params()` entries.
    pub fn backward(
        &self,
        trace: &ForwardTrace,
        output_grad: &[f64],
        grads: &mut [f64],
    ) -> Result<Vec<f64>, NnError> {
        if grads.len() != self.params.len() {
            return Err(NnError::GradientShape { expected: self.params.len(), got: grads.len() });
        }
        let n = self.num_layers();
        assert_eq!(output_grad.len(), self.output_width(), "output grad width");
        let mut g = output_grad.to_vec();
        for layer in (0..n).rev() {
            let (out_w, in_w) = self.layer_shape(layer);
            let z = &trace.preacts[layer];
            // dLoss/dz; the last layer is linear.
            if layer + 1 < n {
                for (gi, &zi) in g.iter_mut().zip(z.iter()) {
                    *gi *= self.activation.derivative(zi);
                }
            }
            let fed: &[f64] = trace.normed[layer].as_deref().unwrap_or(&trace.inputs[layer]);
            let off = self.weight_offset(layer);
            let w = &self.params[off..off + out_w * in_w];
            // Weight and bias gradients.
            for r in 0..out_w {
                let gr = g[r];
                let row = &mut grads[off + r * in_w..off + (r + 1) * in_w];
                for (c, gw) in row.iter_mut().enumerate() {
                    *gw += gr * fed[c];
                }
                grads[off + out_w * in_w + r] += gr;
            }
            // Propagate to the layer input.
            let mut dx = vec![0.0; in_w];
            for r in 0..out_w {
                let gr = g[r];
                let row = &w[r * in_w..(r + 1) * in_w];
                for (c, dxc) in dx.iter_mut().enumerate() {
                    *dxc += gr * row[c];
                }
            }
            g = match &trace.normed[layer] {
                Some(xhat) => layer_norm_backward(&trace.inputs[layer], xhat, &dx),
                None => dx,
            };
        }
        Ok(g)
    }

    /// Checks all parameters are finite; index of the first offender on error.
    pub fn check_finite(&self) -> Result<(), NnError> {
        for (index, p) in self.params.iter().enumerate() {
            if !p.is_finite() {
                return Err(NnError::NonFiniteParameter { index });
            }
        }
        Ok(())
    }

    fn affine(&self, layer: usize, input: &[f64], out: &mut Vec<f64>) {
        let (out_w, in_w) = self.layer_shape(layer);
        let off = self.weight_offset(layer);
        let w = &self.params[off..off + out_w * in_w];
        let b = &self.params[off + out_w * in_w..off + out_w * in_w + out_w];
        out.clear();
        out.reserve(out_w);
        for r in 0..out_w {
            let row = &w[r * in_w..(r + 1) * in_w];
            let mut acc = b[r];
            for (x, wv) in input.iter().zip(row.iter()) {
                acc += x * wv;
            }
            out.push(acc);
        }
    }
}

/// Normalizes to zero mean and unit variance (population), no affine terms.
fn layer_norm(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let s = (var + LAYER_NORM_EPS).sqrt();
    x.iter().map(|&v| (v - mean) / s).collect()
}

fn layer_norm_backward(x: &[f64], xhat: &[f64], dxhat: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let s = (var + LAYER_NORM_EPS).sqrt();
    let mean_d = dxhat.iter().sum::<f64>() / n;
    let mean_dxh = dxhat.iter().zip(xhat.iter()).map(|(&d, &h)| d * h).sum::<f64>() / n;
    xhat.iter()
        .zip(dxhat.iter())
        .map(|(&h, &d)| (d - mean_d - h * mean_dxh) / s)
        .collect()
}
