//! Long short-term memory network trained by backpropagation through time.
//!
//! Cell equations per step, with `(.)` sigmoid and `o` elementwise product:
//!
//! ```text
//! f_t = sigmoid(W_f . h_prev + U_f . x_t + b_f)
//! i_t = sigmoid(W_i . h_prev + U_i . x_t + b_i)
//! c~_t = tanh  (W_c . h_prev + U_c . x_t + b_c)
//! c_t = f_t o c_prev + i_t o c~_t
//! o_t = sigmoid(W_o . h_prev + U_o . x_t + b_o)
//! h_t = o_t o tanh(c_t)
//! ```

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::rng::SeedStream;

use super::rnn::{
    sigmoid, stack_forward, stack_loss_and_grad, train_bptt, BpttModel, Gate, StackLayer,
    TrainConfig,
};
use super::standardize::Standardizer;
use super::window::SupervisedWindowSet;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LstmLayer {
    pub forget: Gate,
    pub input: Gate,
    pub cell: Gate,
    pub output: Gate,
    pub hidden: usize,
    pub input_dim: usize,
}

/// Cached activations for one timestep.
#[derive(Clone, Debug)]
pub struct LstmStep {
    pub f: Array1<f64>,
    pub i: Array1<f64>,
    pub ctilde: Array1<f64>,
    pub o: Array1<f64>,
    pub c: Array1<f64>,
    pub h: Array1<f64>,
}

impl LstmLayer {
    pub fn random(hidden: usize, input_dim: usize, seed: SeedStream) -> Self {
        let mut rng = seed.rng();
        Self {
            // Forget gate bias starts at +1 so early training retains memory.
            forget: Gate::random(hidden, input_dim, 1.0, &mut rng),
            input: Gate::random(hidden, input_dim, 0.0, &mut rng),
            cell: Gate::random(hidden, input_dim, 0.0, &mut rng),
            output: Gate::random(hidden, input_dim, 0.0, &mut rng),
            hidden,
            input_dim,
        }
    }

    /// One cell step. Returns `(h_t, c_t)`.
    pub fn step(
        &self,
        x: &ArrayView1<f64>,
        h_prev: &ArrayView1<f64>,
        c_prev: &ArrayView1<f64>,
    ) -> Result<(Array1<f64>, Array1<f64>)> {
        if x.len() != self.input_dim || h_prev.len() != self.hidden || c_prev.len() != self.hidden
        {
            return Err(CoreError::DimensionMismatch(format!(
                "lstm step: x {} h {} c {} vs layer ({}, {})",
                x.len(),
                h_prev.len(),
                c_prev.len(),
                self.input_dim,
                self.hidden
            )));
        }
        let s = self.step_full(x, h_prev, c_prev);
        Ok((s.h, s.c))
    }

    fn step_full(
        &self,
        x: &ArrayView1<f64>,
        h_prev: &ArrayView1<f64>,
        c_prev: &ArrayView1<f64>,
    ) -> LstmStep {
        let f = self.forget.preactivation(h_prev, x).mapv(sigmoid);
        let i = self.input.preactivation(h_prev, x).mapv(sigmoid);
        let ctilde = self.cell.preactivation(h_prev, x).mapv(f64::tanh);
        let c = &f * c_prev + &i * &ctilde;
        let o = self.output.preactivation(h_prev, x).mapv(sigmoid);
        let h = &o * &c.mapv(f64::tanh);
        LstmStep {
            f,
            i,
            ctilde,
            o,
            c,
            h,
        }
    }
}

impl StackLayer for LstmLayer {
    type Trace = Vec<LstmStep>;

    fn hidden(&self) -> usize {
        self.hidden
    }

    fn zeros_like(&self) -> Self {
        Self {
            forget: self.forget.zeros_like(),
            input: self.input.zeros_like(),
            cell: self.cell.zeros_like(),
            output: self.output.zeros_like(),
            hidden: self.hidden,
            input_dim: self.input_dim,
        }
    }

    fn param_count(&self) -> usize {
        self.forget.param_count()
            + self.input.param_count()
            + self.cell.param_count()
            + self.output.param_count()
    }

    fn write_flat(&self, out: &mut Vec<f64>) {
        self.forget.write_flat(out);
        self.input.write_flat(out);
        self.cell.write_flat(out);
        self.output.write_flat(out);
    }

    fn read_flat(&mut self, data: &[f64], pos: &mut usize) {
        self.forget.read_flat(data, pos);
        self.input.read_flat(data, pos);
        self.cell.read_flat(data, pos);
        self.output.read_flat(data, pos);
    }

    fn forward_seq(&self, xs: &[Array1<f64>]) -> (Vec<Array1<f64>>, Self::Trace) {
        let mut h = Array1::zeros(self.hidden);
        let mut c = Array1::zeros(self.hidden);
        let mut h_seq = Vec::with_capacity(xs.len());
        let mut trace = Vec::with_capacity(xs.len());
        for x in xs {
            let step = self.step_full(&x.view(), &h.view(), &c.view());
            h = step.h.clone();
            c = step.c.clone();
            h_seq.push(step.h.clone());
            trace.push(step);
        }
        (h_seq, trace)
    }

    fn backward_seq(
        &self,
        xs: &[Array1<f64>],
        trace: &Self::Trace,
        dh_seq: &[Array1<f64>],
        grad: &mut Self,
    ) -> Vec<Array1<f64>> {
        let steps = xs.len();
        let zeros = Array1::zeros(self.hidden);
        let mut dh_rec: Array1<f64> = Array1::zeros(self.hidden);
        let mut dc_rec: Array1<f64> = Array1::zeros(self.hidden);
        let mut dxs = vec![Array1::zeros(self.input_dim); steps];

        for t in (0..steps).rev() {
            let s = &trace[t];
            let h_prev = if t > 0 { &trace[t - 1].h } else { &zeros };
            let c_prev = if t > 0 { &trace[t - 1].c } else { &zeros };

            let dh = &dh_seq[t] + &dh_rec;
            let c_tanh = s.c.mapv(f64::tanh);

            let da_o = Array1::from_shape_fn(self.hidden, |k| {
                dh[k] * c_tanh[k] * s.o[k] * (1.0 - s.o[k])
            });
            let dc = Array1::from_shape_fn(self.hidden, |k| {
                dh[k] * s.o[k] * (1.0 - c_tanh[k] * c_tanh[k]) + dc_rec[k]
            });
            let da_f = Array1::from_shape_fn(self.hidden, |k| {
                dc[k] * c_prev[k] * s.f[k] * (1.0 - s.f[k])
            });
            let da_i = Array1::from_shape_fn(self.hidden, |k| {
                dc[k] * s.ctilde[k] * s.i[k] * (1.0 - s.i[k])
            });
            let da_c = Array1::from_shape_fn(self.hidden, |k| {
                dc[k] * s.i[k] * (1.0 - s.ctilde[k] * s.ctilde[k])
            });

            let x = &xs[t];
            Gate::accumulate_grad(&mut grad.forget, &da_f, &h_prev.view(), &x.view());
            Gate::accumulate_grad(&mut grad.input, &da_i, &h_prev.view(), &x.view());
            Gate::accumulate_grad(&mut grad.cell, &da_c, &h_prev.view(), &x.view());
            Gate::accumulate_grad(&mut grad.output, &da_o, &h_prev.view(), &x.view());

            dh_rec = self.forget.w.t().dot(&da_f)
                + self.input.w.t().dot(&da_i)
                + self.cell.w.t().dot(&da_c)
                + self.output.w.t().dot(&da_o);
            dc_rec = &dc * &s.f;

            dxs[t] = self.forget.u.t().dot(&da_f)
                + self.input.u.t().dot(&da_i)
                + self.cell.u.t().dot(&da_c)
                + self.output.u.t().dot(&da_o);
        }
        dxs
    }
}

/// Stacked LSTM with a linear readout from the final hidden state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LstmNetwork {
    pub layers: Vec<LstmLayer>,
    pub readout_w: Array1<f64>,
    pub readout_b: f64,
    pub interlayer_relu: bool,
    pub standardizer: Option<Standardizer>,
    pub input_dim: usize,
}

impl LstmNetwork {
    pub fn new(
        input_dim: usize,
        layer_sizes: &[usize],
        interlayer_relu: bool,
        seed: SeedStream,
    ) -> Result<Self> {
        if input_dim == 0 || layer_sizes.is_empty() || layer_sizes.contains(&0) {
            return Err(CoreError::InvalidArgument(
                "lstm needs input_dim >= 1 and non-empty positive layer sizes".into(),
            ));
        }
        let mut layers = Vec::with_capacity(layer_sizes.len());
        let mut dim = input_dim;
        for (idx, &hidden) in layer_sizes.iter().enumerate() {
            layers.push(LstmLayer::random(hidden, dim, seed.child(idx as u64)));
            dim = hidden;
        }
        let top = *layer_sizes.last().unwrap();
        let mut rng = seed.child_str("readout").rng();
        let bound = 1.0 / (top as f64).sqrt();
        let readout_w = Array1::from_shape_fn(top, |_| {
            use rand::Rng;
            rng.random_range(-bound..bound)
        });
        Ok(Self {
            layers,
            readout_w,
            readout_b: 0.0,
            interlayer_relu,
            standardizer: None,
            input_dim,
        })
    }

    /// Standardized-space prediction for a standardized block.
    pub fn forward_std(&self, block_std: &Array2<f64>) -> f64 {
        stack_forward(
            &self.layers,
            self.interlayer_relu,
            &self.readout_w,
            self.readout_b,
            block_std,
        )
    }

    /// Fits by full-batch BPTT with Adam; returns the loss history.
    pub fn fit(&mut self, windows: &SupervisedWindowSet, cfg: &TrainConfig) -> Result<Vec<f64>> {
        let (inputs, targets, standardizer) = standardize_windows(windows, self.input_dim)?;
        let history = train_bptt(self, &inputs, &targets, cfg)?;
        self.standardizer = Some(standardizer);
        Ok(history)
    }

    pub fn predict(&self, block: &ArrayView2<f64>) -> Result<f64> {
        let standardizer = self
            .standardizer
            .as_ref()
            .ok_or_else(|| CoreError::NotFitted("lstm".into()))?;
        if block.nrows() == 0 || block.ncols() != self.input_dim {
            return Err(CoreError::DimensionMismatch(format!(
                "block {:?} vs input_dim {}",
                block.dim(),
                self.input_dim
            )));
        }
        let z = standardizer.transform_block(block)?;
        Ok(standardizer.destandardize_target(self.forward_std(&z)))
    }
}

/// Shared by both gated networks: standardize the window set for training.
pub(crate) fn standardize_windows(
    windows: &SupervisedWindowSet,
    expected_dim: usize,
) -> Result<(Vec<Array2<f64>>, Vec<f64>, Standardizer)> {
    if windows.is_empty() {
        return Err(CoreError::InvalidArgument(
            "training needs at least one block".into(),
        ));
    }
    if windows.n_features != expected_dim {
        return Err(CoreError::DimensionMismatch(format!(
            "windows have {} features, network expects {expected_dim}",
            windows.n_features
        )));
    }
    let standardizer = Standardizer::fit(windows)?;
    let inputs: Vec<Array2<f64>> = windows
        .inputs
        .iter()
        .map(|b| standardizer.transform_block(&b.view()))
        .collect::<Result<_>>()?;
    let targets: Vec<f64> = windows
        .targets
        .iter()
        .map(|&t| standardizer.standardize_target(t))
        .collect();
    Ok((inputs, targets, standardizer))
}

impl BpttModel for LstmNetwork {
    fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum::<usize>() + self.readout_w.len() + 1
    }

    fn write_params(&self, out: &mut Vec<f64>) {
        out.clear();
        for layer in &self.layers {
            layer.write_flat(out);
        }
        out.extend(self.readout_w.iter());
        out.push(self.readout_b);
    }

    fn read_params(&mut self, data: &[f64]) {
        let mut pos = 0;
        for layer in &mut self.layers {
            layer.read_flat(data, &mut pos);
        }
        for v in self.readout_w.iter_mut() {
            *v = data[pos];
            pos += 1;
        }
        self.readout_b = data[pos];
    }

    fn loss_and_grad(&self, inputs: &[Array2<f64>], targets: &[f64], grad: &mut [f64]) -> f64 {
        let mut grad_layers: Vec<LstmLayer> =
            self.layers.iter().map(|l| l.zeros_like()).collect();
        let mut grad_w = Array1::zeros(self.readout_w.len());
        let mut grad_b = 0.0;
        let loss = stack_loss_and_grad(
            &self.layers,
            self.interlayer_relu,
            &self.readout_w,
            self.readout_b,
            inputs,
            targets,
            &mut grad_layers,
            &mut grad_w,
            &mut grad_b,
        );
        let mut flat = Vec::with_capacity(grad.len());
        for layer in &grad_layers {
            layer.write_flat(&mut flat);
        }
        flat.extend(grad_w.iter());
        flat.push(grad_b);
        grad.copy_from_slice(&flat);
        loss
    }
}
