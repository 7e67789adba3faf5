//! Grayscale linear-intensity raster with an optional validity mask.

use crate::error::{Error, Result};

/// Row-major grid of linear-intensity pixels. Radiometric images (renders,
/// corpus samples) are non-negative; derived rasters such as fit residuals
/// may carry signed values. The mask, when present, marks pixels inside the
/// scene silhouette.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    mask: Option<Vec<bool>>,
}

impl Image {
    pub fn new(
        width: usize,
        height: usize,
        pixels: Vec<f64>,
        mask: Option<Vec<bool>>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if pixels.len() != width * height {
            return Err(Error::invalid(format!(
                "pixel count {} != {width}x{height}",
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("non-finite pixel value"));
        }
        if let Some(m) = &mask {
            if m.len() != width * height {
                return Err(Error::invalid("mask dimensions differ from image"));
            }
        }
        Ok(Image {
            width,
            height,
            pixels,
            mask,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Image {
            width,
            height,
            pixels: vec![value; width * height],
            mask: None,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }
    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        match &self.mask {
            Some(m) => m[y * self.width + x],
            None => true,
        }
    }

    /// Number of valid pixels.
    pub fn valid_count(&self) -> usize {
        match &self.mask {
            Some(m) => m.iter().filter(|b| **b).count(),
            None => self.pixels.len(),
        }
    }

    /// Iterates valid pixels as (x, y, value) in row-major order.
    pub fn valid_pixels(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let w = self.width;
        self.pixels.iter().enumerate().filter_map(move |(i, &v)| {
            let (x, y) = (i % w, i / w);
            if self.is_valid(x, y) {
                Some((x, y, v))
            } else {
                None
            }
        })
    }

    /// Mean over valid pixels; error when the mask is empty.
    pub fn masked_mean(&self) -> Result<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (_, _, v) in self.valid_pixels() {
            sum += v;
            n += 1;
        }
        if n == 0 {
            return Err(Error::invalid("image has no valid pixels"));
        }
        Ok(sum / n as f64)
    }

    /// Maximum over valid pixels; error when the mask is empty.
    pub fn masked_max(&self) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        let mut n = 0usize;
        for (_, _, v) in self.valid_pixels() {
            best = best.max(v);
            n += 1;
        }
        if n == 0 {
            return Err(Error::invalid("image has no valid pixels"));
        }
        Ok(best)
    }

    /// New image with the same dimensions and mask, mapping each valid pixel;
    /// invalid pixels are copied through unchanged.
    pub fn map_valid(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Image {
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.is_valid(x, y) {
                    out.set(x, y, f(x, y, self.get(x, y)));
                }
            }
        }
        out
    }

    /// Checks that another image shares dimensions and the identical mask.
    pub fn check_same_shape(&self, other: &Image) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::invalid(format!(
                "image dimensions differ: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let same_mask = match (&self.mask, &other.mask) {
            (None, None) => true,
            (Some(a), Some(b)) => a == b,
            _ => false,
        };
        if !same_mask {
            return Err(Error::invalid("image masks differ"));
        }
        Ok(())
    }

    /// Round-trips every pixel through f32, the precision of the on-disk
    /// format, so that downstream arithmetic matches what a reader sees.
    pub fn quantize_f32(&self) -> Image {
        let mut out = self.clone();
        for p in &mut out.pixels {
            *p = *p as f32 as f64;
        }
        out
    }

    /// Copy whose mask is eroded by `margin` pixels: a pixel stays valid only
    /// if every pixel within Chebyshev distance `margin` (clipped at the
    /// image border) is valid. Images without a mask are returned unchanged.
    pub fn eroded(&self, margin: usize) -> Image {
        let Some(mask) = &self.mask else {
            return self.clone();
        };
        if margin == 0 {
            return self.clone();
        }
        let (w, h) = (self.width, self.height);
        let mut out = vec![false; w * h];
        for y in 0..h {
            'pixel: for x in 0..w {
                if !mask[y * w + x] {
                    continue;
                }
                let x0 = x.saturating_sub(margin);
                let y0 = y.saturating_sub(margin);
                let x1 = (x + margin).min(w - 1);
                let y1 = (y + margin).min(h - 1);
                for yy in y0..=y1 {
                    for xx in x0..=x1 {
                        if !mask[yy * w + xx] {
                            continue 'pixel;
                        }
                    }
                }
                out[y * w + x] = true;
            }
        }
        let mut img = self.clone();
        img.mask = Some(out);
        img
    }
}

/// Normalized coordinate of a pixel center: index i of n maps to
/// 2(i + 1/2)/n - 1 ∈ (-1, 1). Shared by the renderer, the spoof field, and
/// the planar gain fit so their coordinate frames agree. y grows with the
/// row index.
pub fn norm_coord(i: usize, n: usize) -> f64 {
    2.0 * (i as f64 + 0.5) / n as f64 - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_validates() {
        assert!(Image::new(2, 2, vec![0.0; 3], None).is_err());
        assert!(Image::new(2, 2, vec![f64::NAN; 4], None).is_err());
        assert!(Image::new(2, 2, vec![0.0; 4], Some(vec![true; 3])).is_err());
        assert!(Image::new(0, 2, vec![], None).is_err());
    }

    #[test]
    fn masked_stats() {
        let mask = vec![true, false, true, false];
        let img = Image::new(2, 2, vec![1.0, 9.0, 3.0, 9.0], Some(mask)).unwrap();
        assert_eq!(img.valid_count(), 2);
        assert_eq!(img.masked_mean().unwrap(), 2.0);
        assert_eq!(img.masked_max().unwrap(), 3.0);
        let empty = Image::new(1, 1, vec![1.0], Some(vec![false])).unwrap();
        assert!(empty.masked_mean().is_err());
    }

    #[test]
    fn norm_coord_is_centered() {
        assert!((norm_coord(0, 4) + 0.75).abs() < 1e-15);
        assert!((norm_coord(3, 4) - 0.75).abs() < 1e-15);
        let n = 64;
        let sum: f64 = (0..n).map(|i| norm_coord(i, n)).sum();
        assert!(sum.abs() < 1e-12);
    }
}
