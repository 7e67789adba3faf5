//! Biometric error metrics: APCER, BPCER, ACER, and TPR at fixed FPR
//! operating points from an exact ROC sweep.
//!
//! Scores are liveness scores (higher = more live). A sample is accepted as
//! live iff its score ≥ the threshold. The ROC sweep places thresholds at
//! midpoints between distinct sorted scores plus ±∞, so ties are handled
//! exactly and reproducibly.

use crate::error::{Error, Result};
use crate::Label;

/// Operating points reported as TPR@FPR.
pub const TPR_FPR_POINTS: [f64; 3] = [1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    /// Fraction of spoofs accepted as live.
    pub fpr: f64,
    /// Fraction of lives accepted.
    pub tpr: f64,
}

#[derive(Debug, Clone)]
pub struct Metrics {
    /// Attack presentations accepted as live, at the model threshold.
    pub apcer: f64,
    /// Bona-fide presentations rejected, at the model threshold.
    pub bpcer: f64,
    /// (APCER + BPCER) / 2.
    pub acer: f64,
    /// (fpr target, best achievable tpr with fpr ≤ target).
    pub tpr_at_fpr: Vec<(f64, f64)>,
    /// Full ROC curve from thresholds at +∞ down to -∞.
    pub roc: Vec<RocPoint>,
}

/// Computes all metrics from liveness scores and ground-truth labels at a
/// fixed acceptance threshold.
pub fn evaluate_scores(scores: &[f64], labels: &[Label], threshold: f64) -> Result<Metrics> {
    if scores.len() != labels.len() {
        return Err(Error::invalid("scores and labels differ in length"));
    }
    let n_live = labels.iter().filter(|l| **l == Label::Live).count();
    let n_spoof = labels.len() - n_live;
    if n_live == 0 || n_spoof == 0 {
        return Err(Error::invalid("both classes must be present"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("non-finite score"));
    }

    let accepted_spoof = scores
        .iter()
        .zip(labels)
        .filter(|(s, l)| **l == Label::Spoof && **s >= threshold)
        .count();
    let rejected_live = scores
        .iter()
        .zip(labels)
        .filter(|(s, l)| **l == Label::Live && **s < threshold)
        .count();
    let apcer = accepted_spoof as f64 / n_spoof as f64;
    let bpcer = rejected_live as f64 / n_live as f64;
    let acer = 0.5 * (apcer + bpcer);

    // Threshold sweep: +∞ down through midpoints between distinct scores
    // to -∞, so the ROC runs from (0, 0) to (1, 1).
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    let mut thresholds = Vec::with_capacity(distinct.len() + 1);
    thresholds.push(f64::INFINITY);
    for w in distinct.windows(2).rev() {
        thresholds.push(0.5 * (w[0] + w[1]));
    }
    thresholds.push(f64::NEG_INFINITY);

    let mut roc = Vec::with_capacity(thresholds.len());
    for t in thresholds {
        let mut tp = 0usize;
        let mut fp = 0usize;
        for (s, l) in scores.iter().zip(labels) {
            if *s >= t {
                match l {
                    Label::Live => tp += 1,
                    Label::Spoof => fp += 1,
                }
            }
        }
        roc.push(RocPoint {
            threshold: t,
            fpr: fp as f64 / n_spoof as f64,
            tpr: tp as f64 / n_live as f64,
        });
    }

    let tpr_at_fpr = TPR_FPR_POINTS
        .iter()
        .map(|&target| {
            let best = roc
                .iter()
                .filter(|p| p.fpr <= target)
                .map(|p| p.tpr)
                .fold(0.0, f64::max);
            (target, best)
        })
        .collect();

    Ok(Metrics {
        apcer,
        bpcer,
        acer,
        tpr_at_fpr,
        roc,
    })
}

impl Metrics {
    /// TPR at the requested FPR target (must be one of the reported points).
    pub fn tpr_at(&self, fpr: f64) -> Option<f64> {
        self.tpr_at_fpr
            .iter()
            .find(|(t, _)| (*t - fpr).abs() < 1e-15)
            .map(|(_, v)| *v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_scores() {
        let scores = [1.0, 1.0, 0.0, 0.0];
        let labels = [Label::Live, Label::Live, Label::Spoof, Label::Spoof];
        let m = evaluate_scores(&scores, &labels, 0.5).unwrap();
        assert_eq!(m.apcer, 0.0);
        assert_eq!(m.bpcer, 0.0);
        assert_eq!(m.acer, 0.0);
        for (_, tpr) in &m.tpr_at_fpr {
            assert_eq!(*tpr, 1.0);
        }
    }

    #[test]
    fn inverted_scores() {
        let scores = [0.0, 0.0, 1.0, 1.0];
        let labels = [Label::Live, Label::Live, Label::Spoof, Label::Spoof];
        let m = evaluate_scores(&scores, &labels, 0.5).unwrap();
        assert_eq!(m.apcer, 1.0);
        assert_eq!(m.bpcer, 1.0);
        assert_eq!(m.acer, 1.0);
    }

    #[test]
    fn hand_built_six_sample_set() {
        // live: 0.9, 0.6, 0.4; spoof: 0.7, 0.3, 0.1; threshold 0.5.
        // accepted spoofs: {0.7} → APCER = 1/3.
        // rejected lives: {0.4} → BPCER = 1/3; ACER = 1/3.
        let scores = [0.9, 0.6, 0.4, 0.7, 0.3, 0.1];
        let labels = [
            Label::Live,
            Label::Live,
            Label::Live,
            Label::Spoof,
            Label::Spoof,
            Label::Spoof,
        ];
        let m = evaluate_scores(&scores, &labels, 0.5).unwrap();
        assert!((m.apcer - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.bpcer - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.acer - 1.0 / 3.0).abs() < 1e-15);
        // Best TPR at FPR ≤ 1e-2 needs fpr = 0, i.e. a threshold above 0.7;
        // only the live at 0.9 survives → tpr = 1/3.
        assert!((m.tpr_at(1e-2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        // Midpoint threshold 0.65 accepts live {0.9} and spoof {0.7}.
        let p = m
            .roc
            .iter()
            .find(|p| (p.threshold - 0.65).abs() < 1e-12)
            .unwrap();
        assert!((p.tpr - 1.0 / 3.0).abs() < 1e-15);
        assert!((p.fpr - 1.0 / 3.0).abs() < 1e-15);
        // Midpoint threshold 0.5 accepts lives {0.9, 0.6} and spoof {0.7}.
        let p2 = m
            .roc
            .iter()
            .find(|p| (p.threshold - 0.5).abs() < 1e-12)
            .unwrap();
        assert!((p2.tpr - 2.0 / 3.0).abs() < 1e-15);
        assert!((p2.fpr - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn roc_is_monotone() {
        let scores = [0.9, 0.8, 0.8, 0.6, 0.5, 0.5, 0.2, 0.4, 0.3, 0.1];
        let labels: Vec<Label> = (0..10)
            .map(|i| if i < 5 { Label::Live } else { Label::Spoof })
            .collect();
        let m = evaluate_scores(&scores, &labels, 0.5).unwrap();
        for w in m.roc.windows(2) {
            assert!(w[1].fpr >= w[0].fpr - 1e-15);
            assert!(w[1].tpr >= w[0].tpr - 1e-15);
        }
        assert!((m.acer - 0.5 * (m.apcer + m.bpcer)).abs() < 1e-15);
        // Endpoints.
        assert_eq!(m.roc.first().unwrap().fpr, 0.0);
        assert_eq!(m.roc.last().unwrap().tpr, 1.0);
    }

    #[test]
    fn missing_class_is_an_error() {
        let scores = [0.5, 0.6];
        assert!(evaluate_scores(&scores, &[Label::Live, Label::Live], 0.5).is_err());
    }
}
