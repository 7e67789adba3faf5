//! Occlusion attribution: slide a grey patch over the image, re-score, and
//! report the score drop per patch position.

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy)]
pub struct OcclusionConfig {
    pub patch: usize,
    pub stride: usize,
}

/// For every patch position (top-left corners at multiples of the stride),
/// replaces the covered valid pixels with the image's masked mean ("grey"),
/// re-runs the scoring pipeline, and records original − occluded score.
///
/// The returned heat map has one pixel per patch position; cell (i, j)
/// corresponds to the patch whose top-left corner is (i·stride, j·stride).
pub fn occlusion_attribution(
    score_fn: &mut dyn FnMut(&Image) -> Result<f64>,
    img: &Image,
    cfg: OcclusionConfig,
) -> Result<Image> {
    if cfg.patch == 0 || cfg.stride == 0 {
        return Err(Error::invalid("patch and stride must be positive"));
    }
    if cfg.patch > img.width() || cfg.patch > img.height() {
        return Err(Error::invalid(format!(
            "patch {} exceeds image {}x{}",
            cfg.patch,
            img.width(),
            img.height()
        )));
    }
    let grey = img.masked_mean()?;
    let base = score_fn(img)?;
    let nx = (img.width() - cfg.patch) / cfg.stride + 1;
    let ny = (img.height() - cfg.patch) / cfg.stride + 1;
    let mut heat = vec![0.0; nx * ny];
    for py in 0..ny {
        for px in 0..nx {
            let x0 = px * cfg.stride;
            let y0 = py * cfg.stride;
            let mut occluded = img.clone();
            for y in y0..(y0 + cfg.patch).min(img.height()) {
                for x in x0..(x0 + cfg.patch).min(img.width()) {
                    if occluded.is_valid(x, y) {
                        occluded.set(x, y, grey);
                    }
                }
            }
            heat[py * nx + px] = base - score_fn(&occluded)?;
        }
    }
    Image::new(nx, ny, heat, None)
}
