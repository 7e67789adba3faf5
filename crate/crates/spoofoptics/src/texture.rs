//! Procedural albedo textures parameterized by surface normal.

use crate::error::{Error, Result};
use crate::sh::Direction;

/// Hard bounds keeping albedo physically plausible after calibration.
pub const ALBEDO_MIN: f64 = 0.02;
pub const ALBEDO_MAX: f64 = 1.0;

/// One Gaussian-on-the-sphere bump: gain · exp((n·center − 1)/width²).
#[derive(Debug, Clone)]
pub struct Blob {
    pub center: Direction,
    pub width: f64,
    pub gain: f64,
}

/// Albedo as a function of surface normal, valued in (0, 1].
#[derive(Debug, Clone)]
pub enum AlbedoTexture {
    /// Constant albedo.
    White(f64),
    /// Linear ramp along a direction, from `lo` (n·dir = -1) to `hi`.
    Ramp { dir: Direction, lo: f64, hi: f64 },
    /// Sum of smooth bumps, affinely mapped by `offset + scale · raw`.
    Blobs {
        blobs: Vec<Blob>,
        offset: f64,
        scale: f64,
    },
}

impl AlbedoTexture {
    pub fn white() -> Self {
        AlbedoTexture::White(1.0)
    }

    pub fn ramp(dir: Direction, lo: f64, hi: f64) -> Result<Self> {
        if !(0.0 < lo && lo <= hi && hi <= 1.0) {
            return Err(Error::invalid(format!("ramp range ({lo}, {hi}) not in (0, 1]")));
        }
        Ok(AlbedoTexture::Ramp { dir, lo, hi })
    }

    fn raw_blobs(blobs: &[Blob], n: &Direction) -> f64 {
        blobs
            .iter()
            .map(|b| b.gain * ((n.dot(&b.center) - 1.0) / (b.width * b.width)).exp())
            .sum()
    }

    pub fn eval(&self, n: &Direction) -> f64 {
        let v = match self {
            AlbedoTexture::White(a) => *a,
            AlbedoTexture::Ramp { dir, lo, hi } => lo + (hi - lo) * 0.5 * (n.dot(dir) + 1.0),
            AlbedoTexture::Blobs {
                blobs,
                offset,
                scale,
            } => offset + scale * Self::raw_blobs(blobs, n),
        };
        v.clamp(ALBEDO_MIN, ALBEDO_MAX)
    }

    /// Affinely calibrates a blob set so that its values over the supplied
    /// normals have the requested mean and standard deviation, shrinking the
    /// contrast if needed to stay inside the albedo bounds.
    pub fn calibrated_blobs(
        blobs: Vec<Blob>,
        normals: &[Direction],
        target_mean: f64,
        target_std: f64,
    ) -> Result<Self> {
        if normals.is_empty() {
            return Err(Error::invalid("no normals to calibrate texture against"));
        }
        if !(ALBEDO_MIN < target_mean && target_mean < ALBEDO_MAX) || target_std < 0.0 {
            return Err(Error::invalid(format!(
                "texture calibration targets ({target_mean}, {target_std}) out of range"
            )));
        }
        let raw: Vec<f64> = normals.iter().map(|n| Self::raw_blobs(&blobs, n)).collect();
        let n = raw.len() as f64;
        let mean = raw.iter().sum::<f64>() / n;
        let var = raw.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        let mut scale = if std > 1e-12 { target_std / std } else { 0.0 };
        let rmin = raw.iter().cloned().fold(f64::INFINITY, f64::min);
        let rmax = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // Shrink contrast until the extremes fit inside the bounds.
        let lo_margin = target_mean - (ALBEDO_MIN + 0.03);
        let hi_margin = (ALBEDO_MAX - 0.005) - target_mean;
        if scale > 0.0 {
            let drop_lo = scale * (mean - rmin);
            if drop_lo > lo_margin {
                scale *= lo_margin / drop_lo;
            }
            let rise_hi = scale * (rmax - mean);
            if rise_hi > hi_margin {
                scale *= hi_margin / rise_hi;
            }
        }
        let offset = target_mean - scale * mean;
        Ok(AlbedoTexture::Blobs {
            blobs,
            offset,
            scale,
        })
    }
}
