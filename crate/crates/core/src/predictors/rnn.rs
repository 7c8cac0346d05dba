//! Shared machinery for the gated recurrent models: gate parameters, the
//! Adam/BPTT training loop with early stopping, and the RMSE objective.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// One gate's parameters: `w` acts on the previous hidden state, `u` on the
/// current input, `b` is the bias.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Gate {
    pub w: Array2<f64>,
    pub u: Array2<f64>,
    pub b: Array1<f64>,
}

impl Gate {
    /// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per matrix; biases
    /// start at `bias_init`.
    pub fn random(hidden: usize, input: usize, bias_init: f64, rng: &mut ChaCha8Rng) -> Self {
        let wb = 1.0 / (hidden as f64).sqrt();
        let ub = 1.0 / (input as f64).sqrt();
        Self {
            w: Array2::from_shape_fn((hidden, hidden), |_| rng.random_range(-wb..wb)),
            u: Array2::from_shape_fn((hidden, input), |_| rng.random_range(-ub..ub)),
            b: Array1::from_elem(hidden, bias_init),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            w: Array2::zeros(self.w.dim()),
            u: Array2::zeros(self.u.dim()),
            b: Array1::zeros(self.b.len()),
        }
    }

    /// `w . h_prev + u . x + b`
    pub fn preactivation(&self, h_prev: &ArrayView1<f64>, x: &ArrayView1<f64>) -> Array1<f64> {
        let mut out = self.w.dot(h_prev);
        out += &self.u.dot(x);
        out += &self.b;
        out
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.u.len() + self.b.len()
    }

    pub fn write_flat(&self, out: &mut Vec<f64>) {
        out.extend(self.w.iter());
        out.extend(self.u.iter());
        out.extend(self.b.iter());
    }

    pub fn read_flat(&mut self, data: &[f64], pos: &mut usize) {
        for v in self.w.iter_mut() {
            *v = data[*pos];
            *pos += 1;
        }
        for v in self.u.iter_mut() {
            *v = data[*pos];
            *pos += 1;
        }
        for v in self.b.iter_mut() {
            *v = data[*pos];
            *pos += 1;
        }
    }

    /// Accumulates `da (x) h_prev` into `w`, `da (x) x` into `u`, `da` into
    /// `b` -- the per-timestep gradient contribution.
    pub fn accumulate_grad(
        grad: &mut Gate,
        da: &Array1<f64>,
        h_prev: &ArrayView1<f64>,
        x: &ArrayView1<f64>,
    ) {
        for (r, &d) in da.iter().enumerate() {
            for (c, &h) in h_prev.iter().enumerate() {
                grad.w[[r, c]] += d * h;
            }
            for (c, &xv) in x.iter().enumerate() {
                grad.u[[r, c]] += d * xv;
            }
            grad.b[r] += d;
        }
    }
}

/// Training settings for BPTT with Adam.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Time decay of the learning rate: `lr_t = lr / (1 + decay * t)`.
    pub lr_time_decay: f64,
    /// L2 weight decay added to the gradient; the alternative reading of
    /// "decay". Off by default.
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    /// Early stopping on training RMSE: stop after `patience` epochs
    /// without an improvement of at least `min_delta`.
    pub patience: usize,
    pub min_delta: f64,
    /// Apply relu to each layer's hidden sequence before feeding the next
    /// layer.
    pub interlayer_relu: bool,
}

impl TrainConfig {
    pub fn lstm_default() -> Self {
        Self {
            learning_rate: 1e-4,
            lr_time_decay: 1e-7,
            weight_decay: 0.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 1000,
            patience: 25,
            min_delta: 1e-6,
            interlayer_relu: true,
        }
    }

    pub fn gru_default() -> Self {
        Self {
            epochs: 500,
            ..Self::lstm_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(CoreError::InvalidArgument(
                "learning rate must be > 0".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(CoreError::InvalidArgument("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

/// A network trainable by full-batch BPTT on the RMSE objective. Parameter
/// layout is fixed per implementation; gradients use the same layout.
pub(crate) trait BpttModel {
    fn param_count(&self) -> usize;
    fn write_params(&self, out: &mut Vec<f64>);
    fn read_params(&mut self, data: &[f64]);
    /// Full-batch RMSE over standardized blocks/targets, with the gradient
    /// written into `grad` (zeroed when the loss is exactly zero).
    fn loss_and_grad(&self, inputs: &[Array2<f64>], targets: &[f64], grad: &mut [f64]) -> f64;
}

/// Full-batch Adam with time-decayed learning rate and early stopping.
/// Returns the per-epoch loss history (the RMSE observed *before* each
/// update). Divergence to a non-finite loss is an error carrying the epoch.
pub(crate) fn train_bptt<M: BpttModel>(
    model: &mut M,
    inputs: &[Array2<f64>],
    targets: &[f64],
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(CoreError::InvalidArgument(
            "training needs a non-empty, aligned block/target set".into(),
        ));
    }

    let n = model.param_count();
    let mut theta = Vec::with_capacity(n);
    model.write_params(&mut theta);
    let mut grad = vec![0.0; n];
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];

    let mut history = Vec::new();
    let mut best = f64::INFINITY;
    let mut stale = 0usize;

    for epoch in 1..=cfg.epochs {
        let loss = model.loss_and_grad(inputs, targets, &mut grad);
        if !loss.is_finite() {
            return Err(CoreError::Divergence { epoch });
        }
        history.push(loss);

        if loss < best - cfg.min_delta {
            best = loss;
            stale = 0;
        } else {
            stale += 1;
        }
        if loss <= 1e-15 || stale >= cfg.patience {
            break;
        }

        if cfg.weight_decay > 0.0 {
            for (g, t) in grad.iter_mut().zip(theta.iter()) {
                *g += cfg.weight_decay * t;
            }
        }

        let t = epoch as f64;
        let lr_t = cfg.learning_rate / (1.0 + cfg.lr_time_decay * t);
        let bc1 = 1.0 - cfg.beta1.powf(t);
        let bc2 = 1.0 - cfg.beta2.powf(t);
        for i in 0..n {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            theta[i] -= lr_t * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
        model.read_params(&theta);
    }

    if theta.iter().any(|t| !t.is_finite()) {
        return Err(CoreError::Divergence {
            epoch: history.len(),
        });
    }
    Ok(history)
}

/// RMSE and per-prediction error scale shared by the models' two-pass
/// gradient computation: dRMSE/dyhat_b = e_b / (B * RMSE).
pub(crate) fn rmse(errors: &[f64]) -> f64 {
    let mse = errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64;
    mse.sqrt()
}

/// One recurrent layer as seen by the stack driver: roll over a sequence
/// caching whatever the cell's backward pass needs, then backpropagate
/// hidden-state gradients into parameter gradients and input gradients.
pub(crate) trait StackLayer: Sized {
    type Trace;

    fn hidden(&self) -> usize;
    fn zeros_like(&self) -> Self;
    fn param_count(&self) -> usize;
    fn write_flat(&self, out: &mut Vec<f64>);
    fn read_flat(&mut self, data: &[f64], pos: &mut usize);

    /// Rolls the cell over `xs`, returning the raw hidden sequence and the
    /// cached activations.
    fn forward_seq(&self, xs: &[Array1<f64>]) -> (Vec<Array1<f64>>, Self::Trace);

    /// Consumes per-timestep dL/dh contributions, accumulates parameter
    /// gradients into `grad`, and returns dL/dx per timestep.
    fn backward_seq(
        &self,
        xs: &[Array1<f64>],
        trace: &Self::Trace,
        dh_seq: &[Array1<f64>],
        grad: &mut Self,
    ) -> Vec<Array1<f64>>;
}

pub(crate) fn block_rows(block: &Array2<f64>) -> Vec<Array1<f64>> {
    block.rows().into_iter().map(|r| r.to_owned()).collect()
}

/// Forward pass through the stack; the readout sees the top layer's raw
/// final hidden state (relu only runs *between* layers).
pub(crate) fn stack_forward<L: StackLayer>(
    layers: &[L],
    relu_between: bool,
    readout_w: &Array1<f64>,
    readout_b: f64,
    block: &Array2<f64>,
) -> f64 {
    let mut xs = block_rows(block);
    for (idx, layer) in layers.iter().enumerate() {
        let (h_seq, _) = layer.forward_seq(&xs);
        if idx + 1 == layers.len() {
            let last = h_seq.last().expect("non-empty sequence");
            return readout_w.dot(last) + readout_b;
        }
        xs = if relu_between {
            h_seq.into_iter().map(|h| h.mapv(relu)).collect()
        } else {
            h_seq
        };
    }
    unreachable!("stack has at least one layer")
}

/// Full-batch RMSE plus gradients for a stacked recurrent net. Two passes:
/// a light forward to get the RMSE scale, then per-block traced forward +
/// BPTT, so memory stays bounded by one block's trace.
#[allow(clippy::too_many_arguments)]
pub(crate) fn stack_loss_and_grad<L: StackLayer>(
    layers: &[L],
    relu_between: bool,
    readout_w: &Array1<f64>,
    readout_b: f64,
    inputs: &[Array2<f64>],
    targets: &[f64],
    grad_layers: &mut [L],
    grad_readout_w: &mut Array1<f64>,
    grad_readout_b: &mut f64,
) -> f64 {
    let n_blocks = inputs.len();
    let errors: Vec<f64> = inputs
        .iter()
        .zip(targets)
        .map(|(block, &y)| stack_forward(layers, relu_between, readout_w, readout_b, block) - y)
        .collect();
    let loss = rmse(&errors);
    if loss <= 0.0 || !loss.is_finite() {
        return loss;
    }

    let n_layers = layers.len();
    for (block, &err) in inputs.iter().zip(&errors) {
        let dyhat = err / (n_blocks as f64 * loss);

        // Traced forward.
        let mut layer_inputs: Vec<Vec<Array1<f64>>> = Vec::with_capacity(n_layers);
        let mut hidden_seqs: Vec<Vec<Array1<f64>>> = Vec::with_capacity(n_layers);
        let mut traces: Vec<L::Trace> = Vec::with_capacity(n_layers);
        let mut xs = block_rows(block);
        for (idx, layer) in layers.iter().enumerate() {
            let (h_seq, trace) = layer.forward_seq(&xs);
            let next_xs = if idx + 1 < n_layers {
                if relu_between {
                    h_seq.iter().map(|h| h.mapv(relu)).collect()
                } else {
                    h_seq.clone()
                }
            } else {
                Vec::new()
            };
            layer_inputs.push(std::mem::replace(&mut xs, next_xs));
            hidden_seqs.push(h_seq);
            traces.push(trace);
        }

        let h_top_last = hidden_seqs[n_layers - 1]
            .last()
            .expect("non-empty sequence");
        for (g, h) in grad_readout_w.iter_mut().zip(h_top_last.iter()) {
            *g += dyhat * h;
        }
        *grad_readout_b += dyhat;

        // Backward through the stack.
        let steps = block.nrows();
        let mut dh: Vec<Array1<f64>> = (0..steps)
            .map(|_| Array1::zeros(layers[n_layers - 1].hidden()))
            .collect();
        dh[steps - 1] = readout_w.mapv(|w| w * dyhat);

        for idx in (0..n_layers).rev() {
            let dxs = layers[idx].backward_seq(
                &layer_inputs[idx],
                &traces[idx],
                &dh,
                &mut grad_layers[idx],
            );
            if idx == 0 {
                break;
            }
            dh = if relu_between {
                dxs.into_iter()
                    .zip(&hidden_seqs[idx - 1])
                    .map(|(dx, h)| {
                        Array1::from_shape_fn(dx.len(), |i| {
                            if h[i] > 0.0 {
                                dx[i]
                            } else {
                                0.0
                            }
                        })
                    })
                    .collect()
            } else {
                dxs
            };
        }
    }
    loss
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_midpoint_and_bounds() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(40.0) < 1.0 && sigmoid(40.0) > 0.99);
        assert!(sigmoid(-40.0) > 0.0 && sigmoid(-40.0) < 0.01);
    }

    #[test]
    fn gate_flat_round_trip() {
        let mut rng = crate::rng::SeedStream::root(3).rng();
        let g = Gate::random(3, 2, 1.0, &mut rng);
        let mut flat = Vec::new();
        g.write_flat(&mut flat);
        assert_eq!(flat.len(), g.param_count());
        let mut g2 = g.zeros_like();
        let mut pos = 0;
        g2.read_flat(&flat, &mut pos);
        assert_eq!(pos, flat.len());
        assert_eq!(g2.w, g.w);
        assert_eq!(g2.u, g.u);
        assert_eq!(g2.b, g.b);
    }

    #[test]
    fn forget_bias_initializes_to_one() {
        let mut rng = crate::rng::SeedStream::root(3).rng();
        let g = Gate::random(4, 2, 1.0, &mut rng);
        assert!(g.b.iter().all(|&b| b == 1.0));
        let in_bound = 1.0 / (4.0f64).sqrt();
        assert!(g.w.iter().all(|w| w.abs() <= in_bound));
    }
}
