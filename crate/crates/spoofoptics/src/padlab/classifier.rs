//! Regularized logistic regression over feature vectors (or embeddings),
//! scoring samples with the probability of being live.

use crate::error::{Error, Result};
use crate::Label;

#[derive(Debug, Clone)]
pub struct ClassifierConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 penalty on the weights (not the bias).
    pub l2: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            learning_rate: 0.5,
            epochs: 2000,
            l2: 1e-3,
            seed: 7,
        }
    }
}

/// Logistic model with input standardization folded in. The score is
/// P(live); the decision threshold applies to that probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub threshold: f64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl ClassifierModel {
    /// Identity-standardization model, for hand-constructed classifiers.
    pub fn from_weights(weights: Vec<f64>, bias: f64, threshold: f64) -> Self {
        let dim = weights.len();
        ClassifierModel {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
            weights,
            bias,
            threshold,
        }
    }

    /// Liveness score in (0, 1).
    pub fn score(&self, x: &[f64]) -> f64 {
        let z: f64 = x
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .zip(&self.weights)
            .map(|((v, (m, s)), w)| w * (v - m) / s)
            .sum::<f64>()
            + self.bias;
        sigmoid(z)
    }

    /// Accepts as live iff score ≥ threshold.
    pub fn predict(&self, x: &[f64]) -> Label {
        if self.score(x) >= self.threshold {
            Label::Live
        } else {
            Label::Spoof
        }
    }
}

/// Trains by full-batch gradient descent on the regularized cross-entropy.
/// Deterministic given (data, config); the live class is the positive one.
pub fn train_classifier(
    inputs: &[Vec<f64>],
    labels: &[Label],
    cfg: &ClassifierConfig,
) -> Result<ClassifierModel> {
    if inputs.len() != labels.len() || inputs.is_empty() {
        return Err(Error::invalid("inputs and labels must align and be non-empty"));
    }
    let lives = labels.iter().filter(|l| **l == Label::Live).count();
    if lives == 0 || lives == labels.len() {
        return Err(Error::invalid("training data must contain both classes"));
    }
    let dim = inputs[0].len();
    if inputs.iter().any(|x| x.len() != dim) {
        return Err(Error::invalid("inconsistent feature dimensions"));
    }

    let n = inputs.len() as f64;
    let mut mean = vec![0.0; dim];
    for x in inputs {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut std = vec![0.0; dim];
    for x in inputs {
        for (s, (v, m)) in std.iter_mut().zip(x.iter().zip(&mean)) {
            *s += (v - m) * (v - m);
        }
    }
    for s in &mut std {
        *s = (*s / n).sqrt().max(1e-9);
    }
    let standardized: Vec<Vec<f64>> = inputs
        .iter()
        .map(|x| {
            x.iter()
                .zip(mean.iter().zip(&std))
                .map(|(v, (m, s))| (v - m) / s)
                .collect()
        })
        .collect();
    let targets: Vec<f64> = labels
        .iter()
        .map(|l| if *l == Label::Live { 1.0 } else { 0.0 })
        .collect();

    let mut weights = vec![0.0; dim];
    let mut bias = 0.0;
    for step in 0..cfg.epochs {
        let mut gw = vec![0.0; dim];
        let mut gb = 0.0;
        for (x, t) in standardized.iter().zip(&targets) {
            let z: f64 = x.iter().zip(&weights).map(|(v, w)| v * w).sum::<f64>() + bias;
            let err = sigmoid(z) - t;
            for (g, v) in gw.iter_mut().zip(x) {
                *g += err * v / n;
            }
            gb += err / n;
        }
        for (g, w) in gw.iter_mut().zip(&weights) {
            *g += cfg.l2 * w;
        }
        for (w, g) in weights.iter_mut().zip(&gw) {
            *w -= cfg.learning_rate * g;
        }
        bias -= cfg.learning_rate * gb;
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Training {
                step,
                msg: "weights diverged".to_string(),
            });
        }
    }
    Ok(ClassifierModel {
        mean,
        std,
        weights,
        bias,
        threshold: 0.5,
    })
}
