//! One-hidden-layer perceptron regressor.
//!
//! Sigmoid hidden units, linear output, squared-error loss. Inputs and target
//! are standardised before training and the output is mapped back on
//! predict. Training is full-batch gradient descent: a step that would raise
//! the loss is rejected and the learning rate halved; an accepted step grows
//! the rate by `lr_growth`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{target_scaler, RegressError, Standardizer};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    /// Hidden width; `None` means `ceil((inputs + 1) / 2)`.
    pub hidden: Option<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Multiplier applied to the learning rate after an accepted step.
    pub lr_growth: f64,
    pub standardize: bool,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self { hidden: None, epochs: 500, learning_rate: 0.01, lr_growth: 1.05, standardize: true }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Raw network parameters. `hidden_weights` is `hidden × inputs`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNetwork {
    pub inputs: usize,
    pub hidden: usize,
    pub hidden_weights: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
}

impl MlpNetwork {
    /// Uniform `±1/sqrt(fan_in)` weights, zero biases.
    pub fn random(inputs: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = 1.0 / (inputs.max(1) as f64).sqrt();
        let b = 1.0 / (hidden.max(1) as f64).sqrt();
        let hidden_weights = (0..hidden * inputs).map(|_| rng.random_range(-a..=a)).collect();
        let output_weights = (0..hidden).map(|_| rng.random_range(-b..=b)).collect();
        Self { inputs, hidden, hidden_weights, hidden_bias: vec![0.0; hidden], output_weights, output_bias: 0.0 }
    }

    pub fn num_params(&self) -> usize {
        self.hidden * self.inputs + 2 * self.hidden + 1
    }

    /// Flat parameter vector: hidden weights, hidden bias, output weights,
    /// output bias.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.num_params());
        p.extend_from_slice(&self.hidden_weights);
        p.extend_from_slice(&self.hidden_bias);
        p.extend_from_slice(&self.output_weights);
        p.push(self.output_bias);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.num_params(), "parameter vector length");
        let (hw, rest) = p.split_at(self.hidden * self.inputs);
        let (hb, rest) = rest.split_at(self.hidden);
        let (ow, rest) = rest.split_at(self.hidden);
        self.hidden_weights.copy_from_slice(hw);
        self.hidden_bias.copy_from_slice(hb);
        self.output_weights.copy_from_slice(ow);
        self.output_bias = rest[0];
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        let mut out = self.output_bias;
        for h in 0..self.hidden {
            let row = &self.hidden_weights[h * self.inputs..(h + 1) * self.inputs];
            let z = row.iter().zip(x).fold(self.hidden_bias[h], |acc, (w, v)| acc + w * v);
            out += self.output_weights[h] * sigmoid(z);
        }
        out
    }

    /// Mean of `½(f(x) − y)²` over rows of a row-major `rows × inputs` slice.
    pub fn loss_rows(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = y.len();
        let sum: f64 = (0..n)
            .map(|i| {
                let e = self.forward(&x[i * self.inputs..(i + 1) * self.inputs]) - y[i];
                0.5 * e * e
            })
            .sum();
        sum / n as f64
    }

    /// Loss and its gradient with respect to [`Self::params`], by
    /// backpropagation.
    #[allow(clippy::needless_range_loop)]
    pub fn loss_and_gradient_rows(&self, x: &[f64], y: &[f64]) -> (f64, Vec<f64>) {
        let (d, h) = (self.inputs, self.hidden);
        let n = y.len();
        let mut grad = vec![0.0; self.num_params()];
        let (g_hw, rest) = grad.split_at_mut(h * d);
        let (g_hb, rest) = rest.split_at_mut(h);
        let (g_ow, g_ob) = rest.split_at_mut(h);
        let mut act = vec![0.0; h];
        let mut loss = 0.0;
        for i in 0..n {
            let xi = &x[i * d..(i + 1) * d];
            let mut out = self.output_bias;
            for k in 0..h {
                let row = &self.hidden_weights[k * d..(k + 1) * d];
                let z = row.iter().zip(xi).fold(self.hidden_bias[k], |acc, (w, v)| acc + w * v);
                act[k] = sigmoid(z);
                out += self.output_weights[k] * act[k];
            }
            let err = out - y[i];
            loss += 0.5 * err * err;
            g_ob[0] += err;
            for k in 0..h {
                g_ow[k] += err * act[k];
                let delta = err * self.output_weights[k] * act[k] * (1.0 - act[k]);
                g_hb[k] += delta;
                for (g, v) in g_hw[k * d..(k + 1) * d].iter_mut().zip(xi) {
                    *g += delta * v;
                }
            }
        }
        let inv = 1.0 / n as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
        (loss * inv, grad)
    }

    /// Column-major matrix convenience wrapper around
    /// [`Self::loss_and_gradient_rows`].
    pub fn loss_and_gradient(&self, x: &DMatrix<f64>, y: &[f64]) -> (f64, Vec<f64>) {
        self.loss_and_gradient_rows(&Standardizer::identity(x.ncols()).transform_rows(x), y)
    }

    /// Runs `params.epochs` descent steps and returns the loss after each.
    pub fn train(&mut self, x: &[f64], y: &[f64], params: &MlpParams) -> Vec<f64> {
        let mut lr = params.learning_rate;
        let (mut loss, mut grad) = self.loss_and_gradient_rows(x, y);
        let mut current = self.params();
        let mut history = Vec::with_capacity(params.epochs);
        let mut trial = self.clone();
        for _ in 0..params.epochs {
            let candidate: Vec<f64> = current.iter().zip(&grad).map(|(p, g)| p - lr * g).collect();
            trial.set_params(&candidate);
            let (trial_loss, trial_grad) = trial.loss_and_gradient_rows(x, y);
            if trial_loss <= loss {
                current = candidate;
                loss = trial_loss;
                grad = trial_grad;
                lr *= params.lr_growth;
            } else {
                lr *= 0.5;
            }
            history.push(loss);
        }
        self.set_params(&current);
        history
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub columns: Vec<String>,
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub target_mean: f64,
    pub target_scale: f64,
    pub network: MlpNetwork,
}

impl MlpModel {
    fn scaler(&self) -> Standardizer {
        Standardizer { mean: self.input_mean.clone(), scale: self.input_scale.clone() }
    }

    pub(crate) fn predict_values(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let rows = self.scaler().transform_rows(x);
        let d = x.ncols();
        (0..x.nrows())
            .map(|i| self.target_mean + self.target_scale * self.network.forward(&rows[i * d..(i + 1) * d]))
            .collect()
    }
}

pub(crate) fn fit(params: &MlpParams, x: &FeatureMatrix, y: &[f64], seed: u64) -> Result<MlpModel, RegressError> {
    if !(params.learning_rate > 0.0 && params.lr_growth >= 1.0) {
        return Err(RegressError::InvalidHyperparameter(
            "mlp needs learning_rate > 0 and lr_growth >= 1".into(),
        ));
    }
    let inputs = x.ncols();
    let hidden = params.hidden.unwrap_or((inputs + 1).div_ceil(2)).max(1);
    let (scaler, (t_mean, t_scale)) = if params.standardize {
        (Standardizer::fit(x.values()), target_scaler(y))
    } else {
        (Standardizer::identity(inputs), (0.0, 1.0))
    };
    let rows = scaler.transform_rows(x.values());
    let target: Vec<f64> = y.iter().map(|v| (v - t_mean) / t_scale).collect();
    let mut network = MlpNetwork::random(inputs, hidden, seed);
    // start the output bias at the target mean
    network.output_bias = target.iter().sum::<f64>() / target.len() as f64;
    network.train(&rows, &target, params);
    Ok(MlpModel {
        columns: x.column_names().to_vec(),
        input_mean: scaler.mean,
        input_scale: scaler.scale,
        target_mean: t_mean,
        target_scale: t_scale,
        network,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_hidden_width() {
        for (inputs, expected) in [(1usize, 1usize), (2, 2), (3, 2), (10, 6), (13, 7)] {
            let names = (0..inputs).map(|j| format!("c{j}")).collect();
            let x = FeatureMatrix::new(names, DMatrix::from_fn(4, inputs, |i, j| (i * j) as f64)).unwrap();
            let m = fit(&MlpParams { epochs: 1, ..Default::default() }, &x, &[1.0, 2.0, 3.0, 4.0], 0).unwrap();
            assert_eq!(m.network.hidden, expected, "inputs = {inputs}");
        }
    }

    #[test]
    fn params_round_trip() {
        let mut net = MlpNetwork::random(3, 2, 9);
        let p: Vec<f64> = (0..net.num_params()).map(|i| i as f64).collect();
        net.set_params(&p);
        assert_eq!(net.params(), p);
    }

    #[test]
    fn loss_never_increases() {
        let x: Vec<f64> = (0..40).flat_map(|i| [i as f64 / 40.0, ((i * 7) % 11) as f64 / 11.0]).collect();
        let y: Vec<f64> = (0..40).map(|i| (i as f64 / 10.0).sin()).collect();
        let mut net = MlpNetwork::random(2, 3, 1);
        let history = net.train(&x, &y, &MlpParams { learning_rate: 5.0, ..Default::default() });
        assert!(history.windows(2).all(|w| w[1] <= w[0]));
        assert!(history.last().unwrap() < &history[0]);
    }

    #[test]
    fn learns_a_smooth_function() {
        let xs: Vec<f64> = (0..60).map(|i| i as f64 / 6.0).collect();
        let x = FeatureMatrix::from_rows(vec!["x".into()], &xs.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap();
        let y: Vec<f64> = xs.iter().map(|v| 100.0 + 20.0 * v).collect();
        let m = fit(&MlpParams { epochs: 2000, ..Default::default() }, &x, &y, 3).unwrap();
        let pred = m.predict_values(x.values());
        let rmse = (pred.iter().zip(&y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / y.len() as f64).sqrt();
        let spread = 20.0 * 10.0 / 12f64.sqrt();
        assert!(rmse < 0.1 * spread, "rmse {rmse}");
    }
}
