//! Stream ablations: retrain the classifier with one feature stream removed
//! and compare error rates.

use super::classifier::{train_classifier, ClassifierConfig};
use super::metrics::{evaluate_scores, Metrics};
use super::{FeatureVector, ALBEDO_STREAM, IMAGE_STREAM, SHADING_STREAM};
use crate::error::{Error, Result};
use crate::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamMask {
    Full,
    NoAlbedo,
    NoShading,
    NoImage,
    /// Keep only the RMS-contrast entry of the image stream.
    ContrastOnly,
}

impl StreamMask {
    pub fn as_str(&self) -> &'static str {
        match self {
            StreamMask::Full => "full",
            StreamMask::NoAlbedo => "no-albedo",
            StreamMask::NoShading => "no-shading",
            StreamMask::NoImage => "no-image",
            StreamMask::ContrastOnly => "contrast-only",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(StreamMask::Full),
            "no-albedo" => Ok(StreamMask::NoAlbedo),
            "no-shading" => Ok(StreamMask::NoShading),
            "no-image" => Ok(StreamMask::NoImage),
            "contrast-only" => Ok(StreamMask::ContrastOnly),
            other => Err(Error::invalid(format!("unknown stream mask '{other}'"))),
        }
    }

    fn keep(&self, index: usize) -> bool {
        match self {
            StreamMask::Full => true,
            StreamMask::NoAlbedo => !ALBEDO_STREAM.contains(&index),
            StreamMask::NoShading => !SHADING_STREAM.contains(&index),
            StreamMask::NoImage => !IMAGE_STREAM.contains(&index),
            StreamMask::ContrastOnly => index == 0,
        }
    }
}

/// Projects a feature vector onto the selected streams.
pub fn apply_stream_mask(f: &FeatureVector, mask: StreamMask) -> Vec<f64> {
    f.values
        .iter()
        .enumerate()
        .filter(|(i, _)| mask.keep(*i))
        .map(|(_, v)| *v)
        .collect()
}

/// Dimension of a masked feature vector.
pub fn masked_dim(mask: StreamMask) -> usize {
    (0..super::FEATURE_DIM).filter(|i| mask.keep(*i)).count()
}

/// Retrains and evaluates the classifier for each requested mask on a fixed
/// train/eval split.
pub fn ablate_streams(
    masks: &[StreamMask],
    train: (&[FeatureVector], &[Label]),
    eval: (&[FeatureVector], &[Label]),
    cfg: &ClassifierConfig,
) -> Result<Vec<(StreamMask, Metrics)>> {
    let mut out = Vec::with_capacity(masks.len());
    for &mask in masks {
        if masked_dim(mask) == 0 {
            return Err(Error::invalid("stream mask keeps no features"));
        }
        let xs: Vec<Vec<f64>> = train.0.iter().map(|f| apply_stream_mask(f, mask)).collect();
        let model = train_classifier(&xs, train.1, cfg)?;
        let scores: Vec<f64> = eval
            .0
            .iter()
            .map(|f| model.score(&apply_stream_mask(f, mask)))
            .collect();
        let metrics = evaluate_scores(&scores, eval.1, model.threshold)?;
        out.push((mask, metrics));
    }
    Ok(out)
}
