//! Supervised contrastive loss with exact analytic gradients.
//!
//! For unit embeddings z_i with positive sets P(i) (same-class others) the
//! loss is the sum over anchors with at least one positive of
//!
//! ```text
//! L_i = (-1/|P(i)|) Σ_{p∈P(i)} log( exp(z_i·z_p/τ) / Σ_{a≠i} exp(z_i·z_a/τ) )
//! ```
//!
//! The batch stores raw (pre-normalization) embeddings; the loss normalizes
//! them internally and the returned gradients are with respect to the raw
//! vectors, with the normalization Jacobian (I - zzᵀ)/‖v‖ included.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SupConBatch {
    embeddings: Vec<Vec<f64>>,
    labels: Vec<u32>,
    tau: f64,
}

impl SupConBatch {
    pub fn new(embeddings: Vec<Vec<f64>>, labels: Vec<u32>, tau: f64) -> Result<Self> {
        if embeddings.len() < 2 {
            return Err(Error::invalid("batch must hold at least 2 items"));
        }
        if embeddings.len() != labels.len() {
            return Err(Error::invalid("labels and embeddings differ in length"));
        }
        if tau <= 0.0 {
            return Err(Error::invalid("temperature must be positive"));
        }
        let dim = embeddings[0].len();
        for v in &embeddings {
            if v.len() != dim {
                return Err(Error::invalid("embeddings differ in dimension"));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("non-finite embedding"));
            }
            let n2: f64 = v.iter().map(|x| x * x).sum();
            if n2 < 1e-24 {
                return Err(Error::invalid("zero embedding cannot be normalized"));
            }
        }
        Ok(SupConBatch {
            embeddings,
            labels,
            tau,
        })
    }

    pub fn len(&self) -> usize {
        self.embeddings.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Unit-norm views of the embeddings (‖z‖ = 1 within 1e-9 by
    /// construction).
    pub fn normalized(&self) -> Vec<Vec<f64>> {
        self.embeddings
            .iter()
            .map(|v| {
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter().map(|x| x / n).collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SupConEval {
    pub loss: f64,
    /// Gradient with respect to each raw embedding.
    pub grad: Vec<Vec<f64>>,
}

pub fn supcon_loss(batch: &SupConBatch) -> Result<SupConEval> {
    let n = batch.len();
    let dim = batch.embeddings[0].len();
    let z = batch.normalized();
    let tau = batch.tau;

    let positives: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && batch.labels[j] == batch.labels[i])
                .collect()
        })
        .collect();
    if positives.iter().all(|p| p.is_empty()) {
        return Err(Error::invalid(
            "every anchor has an empty positive set".to_string(),
        ));
    }

    // Similarities and row-wise softmax denominators over a ≠ i, with the
    // max-shift making the single-competitor case exactly zero-loss.
    let sim = |i: usize, j: usize| -> f64 { z[i].iter().zip(&z[j]).map(|(a, b)| a * b).sum() };
    let mut loss = 0.0;
    let mut grad_z = vec![vec![0.0; dim]; n];
    for i in 0..n {
        let p = &positives[i];
        if p.is_empty() {
            continue;
        }
        let logits: Vec<(usize, f64)> = (0..n)
            .filter(|&a| a != i)
            .map(|a| (a, sim(i, a) / tau))
            .collect();
        let m = logits
            .iter()
            .map(|(_, l)| *l)
            .fold(f64::NEG_INFINITY, f64::max);
        let zsum: f64 = logits.iter().map(|(_, l)| (l - m).exp()).sum();
        let log_denom = m + zsum.ln();
        let inv_p = 1.0 / p.len() as f64;
        for &pos in p {
            loss -= inv_p * (sim(i, pos) / tau - log_denom);
        }
        // dL/dz_i = (1/τ)(Σ_a q_ia z_a − (1/|P|) Σ_p z_p)
        // dL/dz_k = (z_i/τ)(q_ik − 1{k∈P}/|P|)  for k ≠ i.
        for (a, l) in &logits {
            let q = (l - m).exp() / zsum;
            let coeff = q - if batch.labels[*a] == batch.labels[i] {
                inv_p
            } else {
                0.0
            };
            for d in 0..dim {
                grad_z[i][d] += coeff / tau * z[*a][d];
                grad_z[*a][d] += coeff / tau * z[i][d];
            }
        }
    }

    // Chain through the normalization: grad_v = (I - zzᵀ) grad_z / ‖v‖.
    let mut grad = vec![vec![0.0; dim]; n];
    for i in 0..n {
        let norm = batch.embeddings[i]
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt();
        let dot: f64 = grad_z[i].iter().zip(&z[i]).map(|(g, zz)| g * zz).sum();
        for d in 0..dim {
            grad[i][d] = (grad_z[i][d] - dot * z[i][d]) / norm;
        }
    }
    Ok(SupConEval { loss, grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_same_class_items_have_zero_loss() {
        let batch = SupConBatch::new(
            vec![vec![0.3, -0.8], vec![-0.5, 0.1]],
            vec![1, 1],
            0.37,
        )
        .unwrap();
        let eval = supcon_loss(&batch).unwrap();
        assert_eq!(eval.loss, 0.0);
    }

    #[test]
    fn three_item_batch_matches_direct_formula() {
        let batch = SupConBatch::new(
            vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0]],
            vec![0, 0, 1],
            1.0,
        )
        .unwrap();
        let eval = supcon_loss(&batch).unwrap();
        // Anchors 1 and 2 each see one positive (sim 1) and one negative
        // (sim -1); anchor 3 has no positive and is excluded.
        let l1 = -((1.0f64).exp() / ((1.0f64).exp() + (-1.0f64).exp())).ln();
        let expect = 2.0 * l1;
        assert!((eval.loss - expect).abs() < 1e-12, "{} vs {expect}", eval.loss);
    }

    #[test]
    fn all_singletons_is_an_error() {
        let batch = SupConBatch::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]],
            vec![0, 1, 2],
            0.5,
        )
        .unwrap();
        assert!(supcon_loss(&batch).is_err());
    }

    #[test]
    fn loss_is_nonnegative_on_random_batches() {
        let mut r = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..50 {
            let n = r.random_range(2..10usize);
            let dim = r.random_range(2..6usize);
            let embeddings: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| r.random_range(-1.0..1.0)).collect())
                .collect();
            let labels: Vec<u32> = (0..n).map(|_| r.random_range(0..2u32)).collect();
            let batch = match SupConBatch::new(embeddings, labels, 0.3) {
                Ok(b) => b,
                Err(_) => continue,
            };
            match supcon_loss(&batch) {
                Ok(eval) => assert!(eval.loss >= -1e-12, "negative loss {}", eval.loss),
                Err(_) => {} // all singleton classes
            }
        }
    }

    fn finite_difference_check(seed: u64, n: usize, dim: usize, tau: f64) -> f64 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let embeddings: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| r.random_range(-1.0..1.0)).collect())
            .collect();
        let mut labels: Vec<u32> = (0..n).map(|_| r.random_range(0..2u32)).collect();
        // Guarantee at least one positive pair.
        labels[0] = 0;
        labels[1] = 0;
        let batch = SupConBatch::new(embeddings.clone(), labels.clone(), tau).unwrap();
        let eval = supcon_loss(&batch).unwrap();
        let h = 1e-6;
        let mut worst = 0.0f64;
        for i in 0..n {
            for d in 0..dim {
                let mut plus = embeddings.clone();
                plus[i][d] += h;
                let mut minus = embeddings.clone();
                minus[i][d] -= h;
                let lp = supcon_loss(&SupConBatch::new(plus, labels.clone(), tau).unwrap())
                    .unwrap()
                    .loss;
                let lm = supcon_loss(&SupConBatch::new(minus, labels.clone(), tau).unwrap())
                    .unwrap()
                    .loss;
                let fd = (lp - lm) / (2.0 * h);
                let g = eval.grad[i][d];
                let rel = (fd - g).abs() / fd.abs().max(g.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
        worst
    }

    #[test]
    fn gradient_matches_central_differences() {
        for seed in 0..20u64 {
            let worst = finite_difference_check(100 + seed, 8, 4, 1.0);
            assert!(worst < 1e-4, "seed {seed}: worst rel error {worst}");
        }
    }

    #[test]
    fn gradient_check_at_low_temperature() {
        for seed in 0..5u64 {
            let worst = finite_difference_check(200 + seed, 6, 3, 0.1);
            assert!(worst < 1e-4, "seed {seed}: worst rel error {worst}");
        }
    }
}
