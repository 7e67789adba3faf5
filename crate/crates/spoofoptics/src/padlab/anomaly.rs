//! Live-only anomaly prior: Mahalanobis distance to the live feature cloud.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative ridge added to the covariance: λ · (trace/dim) · I.
pub const COVARIANCE_RIDGE: f64 = 1e-3;

/// Scores feature vectors by Mahalanobis distance to the live training
/// distribution; higher = more anomalous (spoof-like).
#[derive(Debug, Clone)]
pub struct AnomalyScorer {
    pub mean: Vec<f64>,
    /// Regularized covariance (kept for serialization; the factorization is
    /// rebuilt from it on load).
    pub covariance: DMatrix<f64>,
    chol: Cholesky<f64, nalgebra::Dyn>,
}

impl AnomalyScorer {
    /// Rebuilds the scorer from its serialized fields.
    pub fn from_parts(mean: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let chol = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Fit("covariance is not positive definite".to_string()))?;
        Ok(AnomalyScorer {
            mean,
            covariance,
            chol,
        })
    }

    /// Mahalanobis distance √((x-μ)ᵀ Σ⁻¹ (x-μ)).
    pub fn score(&self, x: &[f64]) -> f64 {
        let d = DVector::from_iterator(x.len(), x.iter().zip(&self.mean).map(|(v, m)| v - m));
        let y = self.chol.solve(&d);
        d.dot(&y).max(0.0).sqrt()
    }

    /// Liveness-oriented score for metric evaluation (higher = more live).
    pub fn liveness(&self, x: &[f64]) -> f64 {
        -self.score(x)
    }
}

/// Fits mean and ridge-regularized sample covariance on live-only features.
pub fn live_prior_anomaly(live_features: &[Vec<f64>]) -> Result<AnomalyScorer> {
    if live_features.is_empty() {
        return Err(Error::invalid("no live samples"));
    }
    let dim = live_features[0].len();
    if live_features.len() < dim + 1 {
        return Err(Error::invalid(format!(
            "need at least dim+1 = {} live samples, got {}",
            dim + 1,
            live_features.len()
        )));
    }
    if live_features.iter().any(|x| x.len() != dim) {
        return Err(Error::invalid("inconsistent feature dimensions"));
    }
    let n = live_features.len() as f64;
    let mut mean = vec![0.0; dim];
    for x in live_features {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for x in live_features {
        for j in 0..dim {
            let dj = x[j] - mean[j];
            for k in j..dim {
                cov[(j, k)] += dj * (x[k] - mean[k]) / (n - 1.0);
            }
        }
    }
    for j in 0..dim {
        for k in 0..j {
            cov[(j, k)] = cov[(k, j)];
        }
    }
    let ridge = COVARIANCE_RIDGE * cov.trace() / dim as f64;
    if !(ridge > 0.0) {
        return Err(Error::Fit(
            "covariance singular after regularization (zero variance?)".to_string(),
        ));
    }
    for j in 0..dim {
        cov[(j, j)] += ridge;
    }
    let chol = cov.clone().cholesky().ok_or_else(|| {
        Error::Fit("covariance singular after regularization (zero variance?)".to_string())
    })?;
    Ok(AnomalyScorer {
        mean,
        covariance: cov,
        chol,
    })
}
