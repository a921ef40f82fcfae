use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Largest double strictly below one.
const ONE_MINUS_ULP: f64 = 1.0 - f64::EPSILON / 2.0;

/// Logistic function, kept inside the open interval `(0, 1)`.
///
/// Branches on the sign of `x` so `exp` never overflows.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    let y = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    y.clamp(f64::MIN_POSITIVE, ONE_MINUS_ULP)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// Fully connected layer computing `act(W^T x + b)` with `W` of shape `in x out`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseGrads {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub input: Vec<f64>,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.cols() {
            return Err(Error::shape(format!(
                "bias of length {} for a layer with {} outputs",
                bias.len(),
                weights.cols()
            )));
        }
        Ok(DenseLayer {
            weights,
            bias,
            activation,
        })
    }

    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        DenseLayer {
            weights: Matrix::zeros(in_dim, out_dim),
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.in_dim() {
            return Err(Error::shape(format!(
                "layer expects input of length {}, got {}",
                self.in_dim(),
                input.len()
            )));
        }
        let mut out = self.bias.clone();
        for (j, &x) in input.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(self.weights.row(j)) {
                *o += x * w;
            }
        }
        for o in out.iter_mut() {
            *o = self.activation.apply(*o);
        }
        Ok(out)
    }

    /// Adds this example's parameter gradients into `grads` and returns the
    /// gradient with respect to the input. `output` must be the result of
    /// `forward(input)`.
    pub fn backward_accumulate(
        &self,
        input: &[f64],
        output: &[f64],
        upstream: &[f64],
        grads: &mut DenseLayer,
    ) -> Result<Vec<f64>> {
        let (n_in, n_out) = (self.in_dim(), self.out_dim());
        if input.len() != n_in || output.len() != n_out || upstream.len() != n_out {
            return Err(Error::shape(format!(
                "backward through {n_in}x{n_out} layer with input {}, output {}, upstream {}",
                input.len(),
                output.len(),
                upstream.len()
            )));
        }
        if grads.weights.shape() != self.weights.shape() || grads.bias.len() != n_out {
            return Err(Error::shape("gradient buffer does not mirror layer"));
        }
        let delta: Vec<f64> = upstream
            .iter()
            .zip(output)
            .map(|(g, &y)| g * self.activation.derivative_from_output(y))
            .collect();
        for (gb, d) in grads.bias.iter_mut().zip(&delta) {
            *gb += d;
        }
        let mut grad_input = vec![0.0; n_in];
        for (j, &x) in input.iter().enumerate() {
            let w_row = self.weights.row(j);
            let mut acc = 0.0;
            for (w, d) in w_row.iter().zip(&delta) {
                acc += w * d;
            }
            grad_input[j] = acc;
            if x != 0.0 {
                for (gw, d) in grads.weights.row_mut(j).iter_mut().zip(&delta) {
                    *gw += x * d;
                }
            }
        }
        Ok(grad_input)
    }
}

pub fn dense_forward(layer: &DenseLayer, input: &[f64]) -> Result<Vec<f64>> {
    layer.forward(input)
}

/// Gradients of `upstream . layer(input)` with respect to weights, bias and input.
pub fn dense_backward(layer: &DenseLayer, input: &[f64], upstream: &[f64]) -> Result<DenseGrads> {
    let output = layer.forward(input)?;
    let mut acc = DenseLayer::zeros(layer.in_dim(), layer.out_dim(), layer.activation);
    let grad_input = layer.backward_accumulate(input, &output, upstream, &mut acc)?;
    Ok(DenseGrads {
        weights: acc.weights,
        bias: acc.bias,
        input: grad_input,
    })
}
