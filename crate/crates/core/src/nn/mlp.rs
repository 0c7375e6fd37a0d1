//! MLP forward/backward passes with an explicit tape.
//!
//! Layer `l` computes `a = x W_l + b_l`; every layer except (optionally) the
//! last applies LeakyReLU. Dropout, when enabled, sits after the activation of
//! the second hidden layer and uses inverted scaling, so the eval path needs
//! no rescaling and is the identity map w.r.t. dropout.

use serde::{Deserialize, Serialize};

use crate::ndmath::{matmul_a_bt, matmul_at_b, Matrix, RngStream};
use crate::{Error, Result};

/// Weight-layer index after whose activation dropout is applied.
const DROPOUT_AFTER_LAYER: usize = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MlpSpec {
    /// Input width, hidden widths, output width.
    pub layer_widths: Vec<usize>,
    /// Negative slope of LeakyReLU.
    pub activation_slope: f64,
    /// Dropout probability; 0 disables dropout entirely.
    pub dropout_rate: f64,
    /// When true (the usual case) the last layer has no activation.
    pub final_linear: bool,
}

impl MlpSpec {
    pub fn new(layer_widths: Vec<usize>) -> Self {
        MlpSpec {
            layer_widths,
            activation_slope: 0.1,
            dropout_rate: 0.0,
            final_linear: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 2 {
            return Err(Error::InvalidArgument(
                "MLP needs at least an input and an output width".into(),
            ));
        }
        if self.layer_widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidArgument("zero-width MLP layer".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if !(self.activation_slope > 0.0 && self.activation_slope < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "activation slope must lie in (0, 1), got {}",
                self.activation_slope
            )));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.layer_widths.len() - 1
    }

    fn has_activation(&self, layer: usize) -> bool {
        layer + 1 < self.n_layers() || !self.final_linear
    }

    fn has_dropout(&self, layer: usize) -> bool {
        self.dropout_rate > 0.0 && layer == DROPOUT_AFTER_LAYER && layer + 1 < self.n_layers()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `in_width x out_width`.
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

impl MlpParams {
    pub fn zeros(spec: &MlpSpec) -> Self {
        let layers = spec
            .layer_widths
            .windows(2)
            .map(|w| Layer {
                weight: Matrix::zeros(w[0], w[1]),
                bias: vec![0.0; w[1]],
            })
            .collect();
        MlpParams { layers }
    }

    pub fn matches_spec(&self, spec: &MlpSpec) -> bool {
        self.layers.len() == spec.n_layers()
            && self
                .layers
                .iter()
                .zip(spec.layer_widths.windows(2))
                .all(|(l, w)| l.weight.shape() == (w[0], w[1]) && l.bias.len() == w[1])
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.is_finite() && l.bias.iter().all(|b| b.is_finite()))
    }

    /// Flat mutable views over every parameter tensor, weights before biases
    /// per layer, in layer order.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for layer in &mut self.layers {
            out.push(layer.weight.data_mut());
            out.push(layer.bias.as_mut_slice());
        }
        out
    }
}

/// Per-parameter gradients, shape-congruent with [`MlpParams`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(params: &MlpParams) -> Self {
        Gradients {
            layers: params
                .layers
                .iter()
                .map(|l| Layer {
                    weight: Matrix::zeros(l.weight.rows(), l.weight.cols()),
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for layer in &self.layers {
            out.push(layer.weight.data());
            out.push(layer.bias.as_slice());
        }
        out
    }

    pub fn scale_in_place(&mut self, c: f64) {
        for layer in &mut self.layers {
            for v in layer.weight.data_mut() {
                *v *= c;
            }
            for v in &mut layer.bias {
                *v *= c;
            }
        }
    }
}

/// Everything recorded during a forward pass that backward needs.
#[derive(Debug, Clone)]
pub struct Tape {
    /// Input to each layer (index 0 is the network input).
    layer_inputs: Vec<Matrix>,
    /// Pre-activation output of each layer.
    pre_activations: Vec<Matrix>,
    /// Multiplicative dropout mask (0 or 1/keep) where applied.
    dropout_masks: Vec<Option<Matrix>>,
    spec: MlpSpec,
    output_shape: (usize, usize),
}

/// Xavier-uniform weights on `±sqrt(6 / (fan_in + fan_out))`, zero biases.
pub fn init_xavier_uniform(spec: &MlpSpec, rng: &mut RngStream) -> Result<MlpParams> {
    spec.validate()?;
    let layers = spec
        .layer_widths
        .windows(2)
        .map(|w| {
            let bound = (6.0 / (w[0] + w[1]) as f64).sqrt();
            Layer {
                weight: Matrix::from_fn(w[0], w[1], |_, _| rng.next_uniform(-bound, bound)),
                bias: vec![0.0; w[1]],
            }
        })
        .collect();
    Ok(MlpParams { layers })
}

#[inline]
fn leaky_relu(v: f64, slope: f64) -> f64 {
    if v >= 0.0 {
        v
    } else {
        slope * v
    }
}

#[inline]
fn leaky_relu_grad(pre: f64, slope: f64) -> f64 {
    if pre >= 0.0 {
        1.0
    } else {
        slope
    }
}

/// Forward pass. Dropout draws from `rng` only in train mode.
pub fn forward(
    params: &MlpParams,
    spec: &MlpSpec,
    x: &Matrix,
    train_mode: bool,
    rng: &mut RngStream,
) -> Result<(Matrix, Tape)> {
    if !params.matches_spec(spec) {
        return Err(Error::ShapeMismatch("MLP parameters do not match spec".into()));
    }
    if x.cols() != spec.input_width() {
        return Err(Error::ShapeMismatch(format!(
            "MLP input has {} columns, spec expects {}",
            x.cols(),
            spec.input_width()
        )));
    }

    let n_layers = spec.n_layers();
    let mut layer_inputs = Vec::with_capacity(n_layers);
    let mut pre_activations = Vec::with_capacity(n_layers);
    let mut dropout_masks = vec![None; n_layers];
    let mut cur = x.clone();

    for l in 0..n_layers {
        layer_inputs.push(cur.clone());
        let layer = &params.layers[l];
        let mut pre = crate::ndmath::matmul(&cur, &layer.weight)?;
        for i in 0..pre.rows() {
            for (v, b) in pre.row_mut(i).iter_mut().zip(&layer.bias) {
                *v += b;
            }
        }
        pre_activations.push(pre.clone());

        let mut act = if spec.has_activation(l) {
            pre.map(|v| leaky_relu(v, spec.activation_slope))
        } else {
            pre
        };

        if spec.has_dropout(l) && train_mode {
            let keep = 1.0 - spec.dropout_rate;
            let mask = Matrix::from_fn(act.rows(), act.cols(), |_, _| {
                if rng.next_f64() >= spec.dropout_rate {
                    1.0 / keep
                } else {
                    0.0
                }
            });
            act = act.hadamard(&mask)?;
            dropout_masks[l] = Some(mask);
        }
        cur = act;
    }

    let tape = Tape {
        layer_inputs,
        pre_activations,
        dropout_masks,
        spec: spec.clone(),
        output_shape: cur.shape(),
    };
    Ok((cur, tape))
}

/// Backward pass: exact gradients of the traced computation, plus the
/// gradient with respect to the network input (needed to chain encoders,
/// decoders, and losses together).
pub fn backward(
    params: &MlpParams,
    tape: &Tape,
    output_grad: &Matrix,
) -> Result<(Gradients, Matrix)> {
    let spec = &tape.spec;
    if !params.matches_spec(spec) || tape.layer_inputs.len() != spec.n_layers() {
        return Err(Error::ShapeMismatch("tape does not match MLP parameters".into()));
    }
    if output_grad.shape() != tape.output_shape {
        return Err(Error::ShapeMismatch(format!(
            "output gradient shape {:?} does not match traced output {:?}",
            output_grad.shape(),
            tape.output_shape
        )));
    }

    let mut grads = Gradients::zeros_like(params);
    let mut g = output_grad.clone();

    for l in (0..spec.n_layers()).rev() {
        if let Some(mask) = &tape.dropout_masks[l] {
            g = g.hadamard(mask)?;
        }
        if spec.has_activation(l) {
            let pre = &tape.pre_activations[l];
            g = Matrix::from_fn(g.rows(), g.cols(), |i, j| {
                g.at(i, j) * leaky_relu_grad(pre.at(i, j), spec.activation_slope)
            });
        }
        let xl = &tape.layer_inputs[l];
        grads.layers[l].weight = matmul_at_b(xl, &g)?;
        let bias = &mut grads.layers[l].bias;
        for i in 0..g.rows() {
            for (b, &v) in bias.iter_mut().zip(g.row(i)) {
                *b += v;
            }
        }
        g = matmul_a_bt(&g, &params.layers[l].weight)?;
    }

    Ok((grads, g))
}
