//! Feed-forward network with softmax output, trained by full-batch gradient
//! descent on mean cross-entropy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, LabeledDataset, MlpConfig};
use crate::error::{Error, Result};

/// Dense layer: `out = W · in + b` with `W` stored row-major `outputs × inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.biases)
                .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()),
        );
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub activation: Activation,
    /// Hidden layers followed by the output layer.
    pub layers: Vec<Layer>,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

impl MlpModel {
    /// Uniform weights in `±0.5/√fan_in`, zero biases.
    pub fn init(inputs: usize, hidden: &[usize], outputs: usize, activation: Activation, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut widths = vec![inputs];
        widths.extend_from_slice(hidden);
        widths.push(outputs);
        let layers = widths
            .windows(2)
            .map(|w| {
                let mut layer = Layer::zeros(w[0], w[1]);
                let r = 0.5 / (w[0] as f64).sqrt();
                layer.weights.iter_mut().for_each(|v| *v = rng.gen_range(-r..=r));
                layer
            })
            .collect();
        Self { activation, layers }
    }

    /// All layer outputs; the last entry holds softmax probabilities.
    fn forward_all(&self, x: &[f64], acts: &mut Vec<Vec<f64>>) {
        acts.resize_with(self.layers.len(), Vec::new);
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (done, rest) = acts.split_at_mut(l);
            let input = if l == 0 { x } else { &done[l - 1] };
            let out = &mut rest[0];
            layer.forward(input, out);
            if l == last {
                softmax_in_place(out);
            } else {
                out.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut acts = Vec::new();
        self.forward_all(x, &mut acts);
        acts.pop().unwrap_or_default()
    }

    /// Mean cross-entropy plus `l2/2 · Σ W²` (biases excluded), and its
    /// gradient laid out like `self.layers`.
    pub fn loss_and_gradient(&self, x: &[Vec<f64>], y: &[usize], l2: f64) -> (f64, Vec<Layer>) {
        let mut grads: Vec<Layer> = self.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect();
        let mut acts = Vec::new();
        let mut delta = Vec::new();
        let mut prev_delta = Vec::new();
        let mut loss = 0.0;

        for (xi, &yi) in x.iter().zip(y) {
            self.forward_all(xi, &mut acts);
            let probs = &acts[acts.len() - 1];
            loss -= probs[yi].max(f64::MIN_POSITIVE).ln();
            delta.clear();
            delta.extend_from_slice(probs);
            delta[yi] -= 1.0;

            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let input = if l == 0 { &xi[..] } else { &acts[l - 1][..] };
                let g = &mut grads[l];
                for (o, &d) in delta.iter().enumerate() {
                    g.biases[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    row.iter_mut().zip(input).for_each(|(gw, v)| *gw += d * v);
                }
                if l > 0 {
                    prev_delta.clear();
                    prev_delta.resize(layer.inputs, 0.0);
                    for (o, &d) in delta.iter().enumerate() {
                        let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        prev_delta.iter_mut().zip(row).for_each(|(p, w)| *p += w * d);
                    }
                    prev_delta
                        .iter_mut()
                        .zip(input)
                        .for_each(|(p, &a)| *p *= self.activation.derivative(a));
                    std::mem::swap(&mut delta, &mut prev_delta);
                }
            }
        }

        let n = x.len() as f64;
        loss /= n;
        for (g, layer) in grads.iter_mut().zip(&self.layers) {
            g.biases.iter_mut().for_each(|v| *v /= n);
            g.weights
                .iter_mut()
                .zip(&layer.weights)
                .for_each(|(gw, w)| *gw = *gw / n + l2 * w);
            loss += 0.5 * l2 * layer.weights.iter().map(|w| w * w).sum::<f64>();
        }
        (loss, grads)
    }

    /// Weights then biases of each layer, in layer order.
    pub fn parameters(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_parameters(&mut self, params: &[f64]) {
        let mut it = params.iter().copied();
        for layer in &mut self.layers {
            for v in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                *v = it.next().expect("parameter vector too short");
            }
        }
        assert!(it.next().is_none(), "parameter vector too long");
    }
}

pub fn flatten(layers: &[Layer]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
        .collect()
}

pub fn default_hidden(n_features: usize, n_classes: usize) -> Vec<usize> {
    vec![8.max((n_features + n_classes) / 2)]
}

pub fn fit(data: &LabeledDataset, cfg: &MlpConfig, seed: u64) -> Result<MlpModel> {
    let k = data.n_classes();
    if k < 2 {
        return Err(Error::InvalidDataset("MLP needs at least two classes".into()));
    }
    if let Some(c) = data.class_counts().iter().position(|&n| n == 0) {
        return Err(Error::MissingClass(data.class_names[c].clone()));
    }
    let hidden = cfg
        .hidden
        .clone()
        .unwrap_or_else(|| default_hidden(data.n_features(), k));
    let mut model = MlpModel::init(data.n_features(), &hidden, k, cfg.activation, seed);
    for _ in 0..cfg.epochs {
        let (_, grads) = model.loss_and_gradient(&data.features, &data.labels, cfg.l2);
        for (layer, g) in model.layers.iter_mut().zip(&grads) {
            for (w, gw) in layer
                .weights
                .iter_mut()
                .chain(layer.biases.iter_mut())
                .zip(g.weights.iter().chain(&g.biases))
            {
                *w -= cfg.learning_rate * gw;
            }
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::tests::dataset;
    use crate::classifiers::{argmax, fit as fit_model, ClassifierKind, TrainConfig};

    fn xor() -> LabeledDataset {
        dataset(
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            vec![0, 1, 1, 0],
            2,
        )
    }

    #[test]
    fn learns_xor() {
        let mut cfg = TrainConfig {
            seed: 1,
            ..Default::default()
        };
        cfg.mlp.hidden = Some(vec![4]);
        cfg.mlp.epochs = 5000;
        cfg.mlp.learning_rate = 0.5;
        let data = xor();
        let model = fit_model(ClassifierKind::Mlp, &data, &cfg).unwrap();
        for (row, &y) in data.features.iter().zip(&data.labels) {
            assert_eq!(model.predict_values(row).class, y, "{row:?}");
        }
    }

    #[test]
    fn zero_epochs_is_the_seeded_initialisation() {
        let mut cfg = TrainConfig::default();
        cfg.mlp.epochs = 0;
        let data = xor();
        let a = fit_model(ClassifierKind::Mlp, &data, &cfg).unwrap();
        let b = fit_model(ClassifierKind::Mlp, &data, &cfg).unwrap();
        assert_eq!(a, b);
        let crate::classifiers::ModelParams::Mlp(m) = &a.params else {
            unreachable!()
        };
        assert_eq!(m, &MlpModel::init(2, &[8], 2, Activation::Sigmoid, 42));
        for row in &data.features {
            let (pa, pb) = (a.predict_values(row), b.predict_values(row));
            assert_eq!(
                pa.scores.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                pb.scores.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn init_range_follows_fan_in() {
        let m = MlpModel::init(16, &[5], 3, Activation::Sigmoid, 9);
        assert!(m.layers[0].weights.iter().all(|w| w.abs() <= 0.125));
        assert!(m.layers[1].weights.iter().all(|w| w.abs() <= 0.5 / 5f64.sqrt()));
        assert!(m.layers.iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
    }

    fn gradient_check(activation: Activation, l2: f64, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..7)
            .map(|_| (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<usize> = (0..7).map(|i| i % 3).collect();
        let mut model = MlpModel::init(4, &[5, 3], 3, activation, seed);
        // larger weights than the default initialisation exercise the nonlinearity
        let mut params = model.parameters();
        params.iter_mut().for_each(|p| *p = rng.gen_range(-1.5..1.5));
        model.set_parameters(&params);

        let (_, grads) = model.loss_and_gradient(&x, &y, l2);
        let analytic = flatten(&grads);
        let eps = 1e-5;
        for i in 0..params.len() {
            let mut probe = model.clone();
            let mut p = params.clone();
            p[i] += eps;
            probe.set_parameters(&p);
            let up = probe.loss_and_gradient(&x, &y, l2).0;
            p[i] -= 2.0 * eps;
            probe.set_parameters(&p);
            let down = probe.loss_and_gradient(&x, &y, l2).0;
            let numeric = (up - down) / (2.0 * eps);
            let scale = analytic[i].abs().max(numeric.abs()).max(1e-7);
            let rel = (analytic[i] - numeric).abs() / scale;
            assert!(
                rel < 1e-4,
                "param {i}: analytic {} numeric {numeric} rel {rel}",
                analytic[i]
            );
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        gradient_check(Activation::Sigmoid, 0.0, 3);
        gradient_check(Activation::Sigmoid, 0.1, 4);
        gradient_check(Activation::Tanh, 0.0, 5);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let m = MlpModel::init(3, &[6], 4, Activation::Sigmoid, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-100.0..100.0)).collect();
            let p = m.predict_proba(&x);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert_eq!(p, m.predict_proba(&x));
            assert!(argmax(&p) < 4);
        }
    }

    #[test]
    fn requires_every_class() {
        let mut data = xor();
        data.class_names.push("empty".into());
        assert!(matches!(
            fit(&data, &MlpConfig::default(), 0),
            Err(Error::MissingClass(_))
        ));
    }
}
