//! Image statistics: RMS contrast, histogram equalization, and the planar
//! gain regression between matched live/spoof pairs.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::image::{norm_coord, Image};
use crate::optics::PlanarIlluminationField;

/// Default histogram bin count, matching the 8-bit convention of typical
/// source imagery.
pub const DEFAULT_EQUALIZE_BINS: usize = 256;

/// Root mean square of the zero-mean pixel intensities over the mask.
pub fn rms_contrast(img: &Image) -> Result<f64> {
    let mean = img.masked_mean()?;
    let mut acc = 0.0;
    let mut n = 0usize;
    for (_, _, v) in img.valid_pixels() {
        acc += (v - mean) * (v - mean);
        n += 1;
    }
    Ok((acc / n as f64).sqrt())
}

/// Per-class aggregate of per-image contrast values.
#[derive(Debug, Clone)]
pub struct ContrastStats {
    pub per_image: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n-1 denominator); zero for a single image.
    pub std: f64,
}

impl ContrastStats {
    pub fn aggregate(per_image: Vec<f64>) -> Result<Self> {
        if per_image.is_empty() {
            return Err(Error::invalid("aggregate of zero images"));
        }
        let n = per_image.len() as f64;
        let mean = per_image.iter().sum::<f64>() / n;
        let std = if per_image.len() > 1 {
            (per_image.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Ok(ContrastStats {
            per_image,
            mean,
            std,
        })
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        self.std / (self.per_image.len() as f64).sqrt()
    }
}

/// Histogram equalization over the masked pixels.
///
/// Pixels are clamped to the working range [0, 1] and binned; each pixel maps
/// to the cumulative frequency of its bin, so the output lies in (0, 1] and
/// pixel ordering is preserved. A constant image maps to 1 (the degenerate
/// CDF puts all mass in one bin).
pub fn histogram_equalize(img: &Image, bins: usize) -> Result<Image> {
    if bins < 2 {
        return Err(Error::invalid("bin count must be at least 2"));
    }
    let n = img.valid_count();
    if n == 0 {
        return Err(Error::invalid("empty mask"));
    }
    let bin_of = |v: f64| -> usize {
        let q = (v.clamp(0.0, 1.0) * bins as f64) as usize;
        q.min(bins - 1)
    };
    let mut counts = vec![0usize; bins];
    for (_, _, v) in img.valid_pixels() {
        counts[bin_of(v)] += 1;
    }
    let mut cdf = vec![0.0; bins];
    let mut acc = 0usize;
    for (i, c) in counts.iter().enumerate() {
        acc += c;
        cdf[i] = acc as f64 / n as f64;
    }
    Ok(img.map_valid(|_, _, v| cdf[bin_of(v)]))
}

/// Least-squares planar gain between a live image and a spoof candidate:
/// the (a, b, c) minimizing Σ (spoof - (a·x + b·y + c)·live)² over the shared
/// mask, in the same normalized coordinates the spoof capture uses.
pub fn fit_planar_gain(live: &Image, spoof: &Image) -> Result<PlanarIlluminationField> {
    live.check_same_shape(spoof)?;
    let (w, h) = (live.width(), live.height());
    let mut gram = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    let mut live_energy = 0.0;
    for (px, py, v) in live.valid_pixels() {
        let x = norm_coord(px, w);
        let y = norm_coord(py, h);
        let row = [x * v, y * v, v];
        let target = spoof.get(px, py);
        live_energy += v * v;
        for j in 0..3 {
            rhs[j] += row[j] * target;
            for k in 0..3 {
                gram[(j, k)] += row[j] * row[k];
            }
        }
    }
    if live_energy <= 0.0 {
        return Err(Error::Fit("live image is identically zero".to_string()));
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Fit("degenerate design in planar gain fit".to_string()))?;
    let sol = chol.solve(&rhs);
    Ok(PlanarIlluminationField {
        a: sol[0],
        b: sol[1],
        c: sol[2],
    })
}

/// Pixelwise img × field(x, y).
pub fn apply_gain(img: &Image, field: &PlanarIlluminationField) -> Result<Image> {
    if !field.is_positive() {
        return Err(Error::invalid("gain field must be positive"));
    }
    let (w, h) = (img.width(), img.height());
    Ok(img.map_valid(|x, y, v| v * field.eval(norm_coord(x, w), norm_coord(y, h))))
}
