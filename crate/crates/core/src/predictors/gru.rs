//! Gated recurrent unit network trained by backpropagation through time.
//!
//! Cell equations per step:
//!
//! ```text
//! z_t = sigmoid(W_z . h_prev + U_z . x_t + b_z)
//! r_t = sigmoid(W_r . h_prev + U_r . x_t + b_r)
//! h~_t = tanh  (W_h . (r_t o h_prev) + U_h . x_t + b_h)
//! h_t = (1 - z_t) o h_prev + z_t o h~_t
//! ```

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::rng::SeedStream;

use super::lstm::standardize_windows;
use super::rnn::{
    sigmoid, stack_forward, stack_loss_and_grad, train_bptt, BpttModel, Gate, StackLayer,
    TrainConfig,
};
use super::standardize::Standardizer;
use super::window::SupervisedWindowSet;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GruLayer {
    pub update: Gate,
    pub reset: Gate,
    pub candidate: Gate,
    pub hidden: usize,
    pub input_dim: usize,
}

#[derive(Clone, Debug)]
pub struct GruStep {
    pub z: Array1<f64>,
    pub r: Array1<f64>,
    pub htilde: Array1<f64>,
    pub h: Array1<f64>,
}

impl GruLayer {
    pub fn random(hidden: usize, input_dim: usize, seed: SeedStream) -> Self {
        let mut rng = seed.rng();
        Self {
            update: Gate::random(hidden, input_dim, 0.0, &mut rng),
            reset: Gate::random(hidden, input_dim, 0.0, &mut rng),
            candidate: Gate::random(hidden, input_dim, 0.0, &mut rng),
            hidden,
            input_dim,
        }
    }

    /// One cell step. Returns `h_t`.
    pub fn step(&self, x: &ArrayView1<f64>, h_prev: &ArrayView1<f64>) -> Result<Array1<f64>> {
        if x.len() != self.input_dim || h_prev.len() != self.hidden {
            return Err(CoreError::DimensionMismatch(format!(
                "gru step: x {} h {} vs layer ({}, {})",
                x.len(),
                h_prev.len(),
                self.input_dim,
                self.hidden
            )));
        }
        Ok(self.step_full(x, h_prev).h)
    }

    fn step_full(&self, x: &ArrayView1<f64>, h_prev: &ArrayView1<f64>) -> GruStep {
        let z = self.update.preactivation(h_prev, x).mapv(sigmoid);
        let r = self.reset.preactivation(h_prev, x).mapv(sigmoid);
        let gated = Array1::from_shape_fn(self.hidden, |k| r[k] * h_prev[k]);
        let htilde = self
            .candidate
            .preactivation(&gated.view(), x)
            .mapv(f64::tanh);
        let h = Array1::from_shape_fn(self.hidden, |k| {
            (1.0 - z[k]) * h_prev[k] + z[k] * htilde[k]
        });
        GruStep { z, r, htilde, h }
    }
}

impl StackLayer for GruLayer {
    type Trace = Vec<GruStep>;

    fn hidden(&self) -> usize {
        self.hidden
    }

    fn zeros_like(&self) -> Self {
        Self {
            update: self.update.zeros_like(),
            reset: self.reset.zeros_like(),
            candidate: self.candidate.zeros_like(),
            hidden: self.hidden,
            input_dim: self.input_dim,
        }
    }

    fn param_count(&self) -> usize {
        self.update.param_count() + self.reset.param_count() + self.candidate.param_count()
    }

    fn write_flat(&self, out: &mut Vec<f64>) {
        self.update.write_flat(out);
        self.reset.write_flat(out);
        self.candidate.write_flat(out);
    }

    fn read_flat(&mut self, data: &[f64], pos: &mut usize) {
        self.update.read_flat(data, pos);
        self.reset.read_flat(data, pos);
        self.candidate.read_flat(data, pos);
    }

    fn forward_seq(&self, xs: &[Array1<f64>]) -> (Vec<Array1<f64>>, Self::Trace) {
        let mut h = Array1::zeros(self.hidden);
        let mut h_seq = Vec::with_capacity(xs.len());
        let mut trace = Vec::with_capacity(xs.len());
        for x in xs {
            let step = self.step_full(&x.view(), &h.view());
            h = step.h.clone();
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
        let mut dxs = vec![Array1::zeros(self.input_dim); steps];

        for t in (0..steps).rev() {
            let s = &trace[t];
            let h_prev = if t > 0 { &trace[t - 1].h } else { &zeros };

            let dh = &dh_seq[t] + &dh_rec;
            let da_z = Array1::from_shape_fn(self.hidden, |k| {
                dh[k] * (s.htilde[k] - h_prev[k]) * s.z[k] * (1.0 - s.z[k])
            });
            let da_h = Array1::from_shape_fn(self.hidden, |k| {
                dh[k] * s.z[k] * (1.0 - s.htilde[k] * s.htilde[k])
            });
            // Gradient w.r.t. the reset-gated hidden state (r o h_prev).
            let d_gated = self.candidate.w.t().dot(&da_h);
            let da_r = Array1::from_shape_fn(self.hidden, |k| {
                d_gated[k] * h_prev[k] * s.r[k] * (1.0 - s.r[k])
            });

            let x = &xs[t];
            let gated = Array1::from_shape_fn(self.hidden, |k| s.r[k] * h_prev[k]);
            Gate::accumulate_grad(&mut grad.update, &da_z, &h_prev.view(), &x.view());
            Gate::accumulate_grad(&mut grad.reset, &da_r, &h_prev.view(), &x.view());
            Gate::accumulate_grad(&mut grad.candidate, &da_h, &gated.view(), &x.view());

            dh_rec = Array1::from_shape_fn(self.hidden, |k| {
                dh[k] * (1.0 - s.z[k]) + d_gated[k] * s.r[k]
            }) + &self.update.w.t().dot(&da_z)
                + &self.reset.w.t().dot(&da_r);

            dxs[t] = self.update.u.t().dot(&da_z)
                + self.reset.u.t().dot(&da_r)
                + self.candidate.u.t().dot(&da_h);
        }
        dxs
    }
}

/// Stacked GRU with a linear readout from the final hidden state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GruNetwork {
    pub layers: Vec<GruLayer>,
    pub readout_w: Array1<f64>,
    pub readout_b: f64,
    pub interlayer_relu: bool,
    pub standardizer: Option<Standardizer>,
    pub input_dim: usize,
}

impl GruNetwork {
    pub fn new(
        input_dim: usize,
        layer_sizes: &[usize],
        interlayer_relu: bool,
        seed: SeedStream,
    ) -> Result<Self> {
        if input_dim == 0 || layer_sizes.is_empty() || layer_sizes.contains(&0) {
            return Err(CoreError::InvalidArgument(
                "gru needs input_dim >= 1 and non-empty positive layer sizes".into(),
            ));
        }
        let mut layers = Vec::with_capacity(layer_sizes.len());
        let mut dim = input_dim;
        for (idx, &hidden) in layer_sizes.iter().enumerate() {
            layers.push(GruLayer::random(hidden, dim, seed.child(idx as u64)));
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

    pub fn forward_std(&self, block_std: &Array2<f64>) -> f64 {
        stack_forward(
            &self.layers,
            self.interlayer_relu,
            &self.readout_w,
            self.readout_b,
            block_std,
        )
    }

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
            .ok_or_else(|| CoreError::NotFitted("gru".into()))?;
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

impl BpttModel for GruNetwork {
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
        let mut grad_layers: Vec<GruLayer> = self.layers.iter().map(|l| l.zeros_like()).collect();
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

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::Rng;

    #[test]
    fn zero_parameters_halve_the_hidden_state() {
        // z = r = 0.5 and h~ = 0, so h_t = 0.5 h_prev.
        let layer = GruLayer::random(3, 2, SeedStream::root(0)).zeros_like();
        let x = array![1.0, -1.0];
        let h_prev = array![0.8, -0.4, 0.2];
        let h = layer.step(&x.view(), &h_prev.view()).unwrap();
        for k in 0..3 {
            assert_abs_diff_eq!(h[k], 0.5 * h_prev[k], epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_hidden_state_stays_zero_with_zero_params() {
        let layer = GruLayer::random(4, 2, SeedStream::root(0)).zeros_like();
        let x = array![3.0, -2.0];
        let h = layer.step(&x.view(), &Array1::zeros(4).view()).unwrap();
        assert!(h.iter().all(|&v| v == 0.0));
    }

    /// Straight-line transcription over plain slices.
    pub(crate) fn cell_oracle(layer: &GruLayer, x: &[f64], h_prev: &[f64]) -> Vec<f64> {
        let n = layer.hidden;
        let pre = |g: &Gate, hvec: &[f64], k: usize| {
            let mut a = g.b[k];
            for (j, hv) in hvec.iter().enumerate() {
                a += g.w[[k, j]] * hv;
            }
            for (j, xv) in x.iter().enumerate() {
                a += g.u[[k, j]] * xv;
            }
            a
        };
        let mut h = vec![0.0; n];
        let z: Vec<f64> = (0..n)
            .map(|k| 1.0 / (1.0 + (-pre(&layer.update, h_prev, k)).exp()))
            .collect();
        let r: Vec<f64> = (0..n)
            .map(|k| 1.0 / (1.0 + (-pre(&layer.reset, h_prev, k)).exp()))
            .collect();
        let gated: Vec<f64> = (0..n).map(|k| r[k] * h_prev[k]).collect();
        for k in 0..n {
            let ht = pre(&layer.candidate, &gated, k).tanh();
            h[k] = (1.0 - z[k]) * h_prev[k] + z[k] * ht;
        }
        h
    }

    #[test]
    fn random_cells_match_transcription_oracle() {
        let mut rng = SeedStream::root(55).rng();
        for trial in 0..100u64 {
            let layer = GruLayer::random(3, 2, SeedStream::root(1000 + trial));
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
            let h_prev: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let h = layer
                .step(
                    &Array1::from_vec(x.clone()).view(),
                    &Array1::from_vec(h_prev.clone()).view(),
                )
                .unwrap();
            let oh = cell_oracle(&layer, &x, &h_prev);
            for k in 0..3 {
                assert_abs_diff_eq!(h[k], oh[k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn fit_reduces_loss_on_learnable_data() {
        let panel = crate::predictors::window::tests::toy_panel(20);
        let w = crate::predictors::window::make_supervised(
            &panel,
            "AAA",
            &["f0".into(), "f1".into()],
            3,
            1,
        )
        .unwrap();
        let mut net = GruNetwork::new(2, &[4, 3], true, SeedStream::root(2)).unwrap();
        let cfg = TrainConfig {
            epochs: 300,
            learning_rate: 1e-2,
            patience: 300,
            ..TrainConfig::gru_default()
        };
        let history = net.fit(&w, &cfg).unwrap();
        assert!(history.last().unwrap() < &(history[0] * 0.5));
        let p = net.predict(&w.inputs[0].view()).unwrap();
        assert!(p.is_finite());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let layer = GruLayer::random(3, 2, SeedStream::root(1));
        let x = array![1.0, 2.0, 3.0];
        assert!(layer.step(&x.view(), &Array1::zeros(3).view()).is_err());
    }
}
