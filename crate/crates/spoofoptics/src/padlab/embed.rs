//! Small feed-forward embedding network trained with the supervised
//! contrastive loss. Deterministic given the seed.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::supcon::{supcon_loss, SupConBatch};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct EmbedConfig {
    /// Hidden layer widths (1 or 2 layers, tanh activation).
    pub hidden: Vec<usize>,
    /// Output embedding dimension before unit normalization.
    pub out_dim: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub tau: f64,
    /// Standard deviation of per-presentation feature jitter, standing in
    /// for the crop augmentations used on image inputs. Zero disables it.
    pub jitter: f64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            hidden: vec![16],
            out_dim: 8,
            seed: 7,
            learning_rate: 0.05,
            epochs: 200,
            batch_size: 32,
            tau: 0.1,
            jitter: 0.0,
        }
    }
}

/// Dense layer, row-major weights [out][in].
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl Layer {
    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for r in 0..self.rows {
            let row = &self.weights[r * self.cols..(r + 1) * self.cols];
            let v: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum();
            out.push(v + self.bias[r]);
        }
    }
}

/// Trained embedding model: standardization, 1–2 tanh layers, a linear output
/// layer, then normalization to the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub feat_mean: Vec<f64>,
    pub feat_std: Vec<f64>,
    pub layers: Vec<Layer>,
}

impl EmbeddingModel {
    pub fn input_dim(&self) -> usize {
        self.feat_mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.rows).unwrap_or(0)
    }

    fn raw_embed(&self, x: &[f64]) -> Vec<f64> {
        let mut cur: Vec<f64> = x
            .iter()
            .zip(self.feat_mean.iter().zip(&self.feat_std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        let mut next = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            layer.forward(&cur, &mut next);
            if i + 1 < self.layers.len() {
                for v in &mut next {
                    *v = v.tanh();
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// Unit-norm embedding of a feature vector.
    pub fn embed(&self, x: &[f64]) -> Vec<f64> {
        let v = self.raw_embed(x);
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
        v.into_iter().map(|a| a / n).collect()
    }
}

#[derive(Debug, Clone)]
pub struct TrainedEmbedding {
    pub model: EmbeddingModel,
    /// Mean supcon loss per epoch.
    pub loss_trajectory: Vec<f64>,
}

fn standardization(data: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let dim = data[0].len();
    let n = data.len() as f64;
    let mut mean = vec![0.0; dim];
    for x in data {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut std = vec![0.0; dim];
    for x in data {
        for (s, (v, m)) in std.iter_mut().zip(x.iter().zip(&mean)) {
            *s += (v - m) * (v - m);
        }
    }
    for s in &mut std {
        *s = (*s / n).sqrt().max(1e-9);
    }
    (mean, std)
}

/// Trains the embedding by mini-batch gradient descent on the supervised
/// contrastive loss. Deterministic given (data, config). Batches whose
/// classes are all singletons are skipped.
pub fn train_embedding(
    features: &[Vec<f64>],
    labels: &[u32],
    cfg: &EmbedConfig,
) -> Result<TrainedEmbedding> {
    if features.len() != labels.len() || features.len() < 2 {
        return Err(Error::invalid("need at least 2 labeled feature vectors"));
    }
    let mut classes: Vec<u32> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::invalid("need at least 2 classes"));
    }
    if cfg.hidden.is_empty() || cfg.hidden.len() > 2 {
        return Err(Error::invalid("hidden layer count must be 1 or 2"));
    }
    if cfg.batch_size < 2 {
        return Err(Error::invalid("batch size must be at least 2"));
    }

    let dim = features[0].len();
    let (feat_mean, feat_std) = standardization(features);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Uniform init scaled by fan-in.
    let mut layers = Vec::new();
    let mut fan_in = dim;
    for &h in cfg.hidden.iter().chain(std::iter::once(&cfg.out_dim)) {
        let bound = (6.0 / (fan_in + h) as f64).sqrt();
        let weights: Vec<f64> = (0..h * fan_in)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        layers.push(Layer {
            weights,
            bias: vec![0.0; h],
            rows: h,
            cols: fan_in,
        });
        fan_in = h;
    }
    let mut model = EmbeddingModel {
        feat_mean,
        feat_std,
        layers,
    };

    let n = features.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut trajectory = Vec::with_capacity(cfg.epochs);
    let mut step = 0usize;
    for _epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            step += 1;
            // Forward pass with cached activations.
            let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(chunk.len());
            let mut hidden_acts: Vec<Vec<Vec<f64>>> = Vec::with_capacity(chunk.len());
            let mut outputs: Vec<Vec<f64>> = Vec::with_capacity(chunk.len());
            let batch_labels: Vec<u32> = chunk.iter().map(|&i| labels[i]).collect();
            for &i in chunk {
                let mut x: Vec<f64> = features[i]
                    .iter()
                    .zip(model.feat_mean.iter().zip(&model.feat_std))
                    .map(|(v, (m, s))| (v - m) / s)
                    .collect();
                if cfg.jitter > 0.0 {
                    for v in &mut x {
                        *v += cfg.jitter * rng.random_range(-1.0..1.0);
                    }
                }
                let mut acts = Vec::new();
                let mut cur = x.clone();
                let mut next = Vec::new();
                for (li, layer) in model.layers.iter().enumerate() {
                    layer.forward(&cur, &mut next);
                    if li + 1 < model.layers.len() {
                        for v in &mut next {
                            *v = v.tanh();
                        }
                        acts.push(next.clone());
                    }
                    std::mem::swap(&mut cur, &mut next);
                }
                inputs.push(x);
                hidden_acts.push(acts);
                outputs.push(cur);
            }
            let batch = SupConBatch::new(outputs.clone(), batch_labels, cfg.tau)?;
            let eval = match supcon_loss(&batch) {
                Ok(e) => e,
                Err(_) => continue, // all-singleton batch
            };
            if !eval.loss.is_finite() {
                return Err(Error::Training {
                    step,
                    msg: format!("non-finite loss {}", eval.loss),
                });
            }
            epoch_loss += eval.loss;
            batches += 1;

            // Backprop the per-item gradients through the layers.
            let mut grads: Vec<(Vec<f64>, Vec<f64>)> = model
                .layers
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
                .collect();
            for (bi, _) in chunk.iter().enumerate() {
                let mut delta = eval.grad[bi].clone();
                for li in (0..model.layers.len()).rev() {
                    let layer = &model.layers[li];
                    let input: &[f64] = if li == 0 {
                        &inputs[bi]
                    } else {
                        &hidden_acts[bi][li - 1]
                    };
                    let (gw, gb) = &mut grads[li];
                    for r in 0..layer.rows {
                        gb[r] += delta[r];
                        for c in 0..layer.cols {
                            gw[r * layer.cols + c] += delta[r] * input[c];
                        }
                    }
                    if li > 0 {
                        let mut prev = vec![0.0; layer.cols];
                        for c in 0..layer.cols {
                            let mut acc = 0.0;
                            for r in 0..layer.rows {
                                acc += layer.weights[r * layer.cols + c] * delta[r];
                            }
                            // tanh' = 1 - act².
                            let a = hidden_acts[bi][li - 1][c];
                            prev[c] = acc * (1.0 - a * a);
                        }
                        delta = prev;
                    }
                }
            }
            let scale = cfg.learning_rate / chunk.len() as f64;
            for (layer, (gw, gb)) in model.layers.iter_mut().zip(&grads) {
                for (w, g) in layer.weights.iter_mut().zip(gw) {
                    *w -= scale * g;
                }
                for (b, g) in layer.bias.iter_mut().zip(gb) {
                    *b -= scale * g;
                }
            }
        }
        trajectory.push(if batches > 0 {
            epoch_loss / batches as f64
        } else {
            0.0
        });
    }
    Ok(TrainedEmbedding {
        model,
        loss_trajectory: trajectory,
    })
}
