//! Deterministic synthetic live/spoof corpus generation and persistence.
//!
//! Every sample is a pure function of (config, master seed, sample index):
//! per-sample RNG streams are ChaCha8 generators keyed by the master seed,
//! the sample index, and a stream tag (0 = texture, 1 = lighting, 2 = spoof
//! parameters), so generation parallelizes without affecting output. Live
//! renders are quantized to f32 (the on-disk precision) before the spoof is
//! captured from them, which makes every stored spoof bit-reproducible from
//! its stored live image and parameters.

mod manifest;
mod pfm;

pub use manifest::{load_manifest, save_manifest, Manifest, SampleRecord};
pub use pfm::{load_image, mask_path, save_image};

use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::UnitSphere;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::optics::{
    capture_spoof, render_live_distant, PlanarIlluminationField, SphereScene, ToneProfile,
};
use crate::sh::{Direction, ShCoeffs};
use crate::texture::{AlbedoTexture, Blob};
use crate::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextureFamily {
    White,
    Ramp,
    Blobs,
}

impl TextureFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            TextureFamily::White => "white",
            TextureFamily::Ramp => "ramp",
            TextureFamily::Blobs => "blobs",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "white" => Ok(TextureFamily::White),
            "ramp" => Ok(TextureFamily::Ramp),
            "blobs" => Ok(TextureFamily::Blobs),
            other => Err(Error::invalid(format!("unknown texture family '{other}'"))),
        }
    }
}

/// Generation parameters. All sampling ranges are closed intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub samples_per_class: usize,
    pub resolution: usize,
    pub seed: u64,
    /// Range of the light's DC coefficient r₀⁰.
    pub light_dc: (f64, f64),
    /// Degree-1/2 coefficients are drawn uniformly from ±frac·r₀⁰ per
    /// coefficient (frac ≤ 0.4 keeps irradiance positive in practice;
    /// rejected samples are redrawn).
    pub light_band_frac: f64,
    pub texture: TextureFamily,
    /// Mean/std targets of the albedo over the silhouette.
    pub texture_mean: f64,
    pub texture_std: f64,
    pub blob_count: usize,
    pub blob_width: (f64, f64),
    /// |a|/c and |b|/c ranges of the spoof field slopes (signs are random;
    /// combinations with |a|+|b| > 0.9c are redrawn to keep the field
    /// positive with margin).
    pub spoof_slope_a: (f64, f64),
    pub spoof_slope_b: (f64, f64),
    /// Range of the spoof field's uniform component c.
    pub spoof_field_c: (f64, f64),
    /// Print contrast factor range, within (0, 1].
    pub gamma: (f64, f64),
    /// Lighting rejection budget per sample.
    pub max_attempts: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            samples_per_class: 500,
            resolution: 64,
            seed: 7,
            light_dc: (0.38, 0.42),
            light_band_frac: 0.25,
            texture: TextureFamily::Blobs,
            texture_mean: 0.72,
            texture_std: 0.20,
            blob_count: 4,
            blob_width: (0.8, 1.4),
            spoof_slope_a: (0.05, 0.2),
            spoof_slope_b: (0.05, 0.2),
            spoof_field_c: (0.95, 1.05),
            gamma: (0.7, 0.95),
            max_attempts: 100,
        }
    }
}

impl CorpusConfig {
    /// Default config with the given sample count, resolution, and seed.
    pub fn default_with(samples_per_class: usize, resolution: usize, seed: u64) -> Self {
        CorpusConfig {
            samples_per_class,
            resolution,
            seed,
            ..CorpusConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let range_ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 <= r.1;
        if self.resolution < 32 {
            return Err(Error::invalid("resolution must be at least 32"));
        }
        if !range_ok(self.light_dc) || self.light_dc.0 <= 0.0 {
            return Err(Error::invalid("light_dc range must be positive and ordered"));
        }
        if !(0.0..=0.4).contains(&self.light_band_frac) {
            return Err(Error::invalid("light_band_frac must be in [0, 0.4]"));
        }
        if !range_ok(self.blob_width) || self.blob_width.0 <= 0.0 {
            return Err(Error::invalid("blob_width range must be positive"));
        }
        for (name, r) in [("spoof_slope_a", self.spoof_slope_a), ("spoof_slope_b", self.spoof_slope_b)] {
            if !range_ok(r) || r.0 < 0.0 || r.1 > 0.5 {
                return Err(Error::invalid(format!("{name} range must lie in [0, 0.5]")));
            }
        }
        if !range_ok(self.spoof_field_c) || self.spoof_field_c.0 <= 0.0 {
            return Err(Error::invalid("spoof_field_c range must be positive"));
        }
        if !range_ok(self.gamma) || self.gamma.0 <= 0.0 || self.gamma.1 > 1.0 {
            return Err(Error::invalid("gamma range must lie in (0, 1]"));
        }
        if !(0.0 < self.texture_mean && self.texture_mean < 1.0) || self.texture_std < 0.0 {
            return Err(Error::invalid("texture mean/std out of range"));
        }
        if self.max_attempts == 0 {
            return Err(Error::invalid("max_attempts must be positive"));
        }
        Ok(())
    }

    pub fn to_kv_line(&self) -> String {
        [
            format!("samples_per_class={}", self.samples_per_class),
            format!("resolution={}", self.resolution),
            format!("seed={}", self.seed),
            format!("light_dc={:.16e},{:.16e}", self.light_dc.0, self.light_dc.1),
            format!("light_band_frac={:.16e}", self.light_band_frac),
            format!("texture={}", self.texture.as_str()),
            format!("texture_mean={:.16e}", self.texture_mean),
            format!("texture_std={:.16e}", self.texture_std),
            format!("blob_count={}", self.blob_count),
            format!("blob_width={:.16e},{:.16e}", self.blob_width.0, self.blob_width.1),
            format!(
                "spoof_slope_a={:.16e},{:.16e}",
                self.spoof_slope_a.0, self.spoof_slope_a.1
            ),
            format!(
                "spoof_slope_b={:.16e},{:.16e}",
                self.spoof_slope_b.0, self.spoof_slope_b.1
            ),
            format!(
                "spoof_field_c={:.16e},{:.16e}",
                self.spoof_field_c.0, self.spoof_field_c.1
            ),
            format!("gamma={:.16e},{:.16e}", self.gamma.0, self.gamma.1),
            format!("max_attempts={}", self.max_attempts),
        ]
        .join("\t")
    }

    pub fn from_kv_fields(fields: &[&str]) -> Result<Self> {
        let mut cfg = CorpusConfig::default();
        for field in fields {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("bad config field '{field}'")))?;
            let pair = |v: &str| -> Result<(f64, f64)> {
                let (a, b) = v
                    .split_once(',')
                    .ok_or_else(|| Error::invalid(format!("bad range '{v}'")))?;
                Ok((
                    a.parse().map_err(|_| Error::invalid(format!("bad float '{a}'")))?,
                    b.parse().map_err(|_| Error::invalid(format!("bad float '{b}'")))?,
                ))
            };
            match k {
                "samples_per_class" => {
                    cfg.samples_per_class = v
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad count '{v}'")))?
                }
                "resolution" => {
                    cfg.resolution = v
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad resolution '{v}'")))?
                }
                "seed" => {
                    cfg.seed = v
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad seed '{v}'")))?
                }
                "light_dc" => cfg.light_dc = pair(v)?,
                "light_band_frac" => {
                    cfg.light_band_frac = v
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad fraction '{v}'")))?
                }
                "texture" => cfg.texture = TextureFamily::parse(v)?,
                "texture_mean" => {
                    cfg.texture_mean = v
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad float '{v}'")))?
                }
                "texture_std" => {
                    cfg.texture_std = v
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad float '{v}'")))?
                }
                "blob_count" => {
                    cfg.blob_count = v
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad count '{v}'")))?
                }
                "blob_width" => cfg.blob_width = pair(v)?,
                "spoof_slope_a" => cfg.spoof_slope_a = pair(v)?,
                "spoof_slope_b" => cfg.spoof_slope_b = pair(v)?,
                "spoof_field_c" => cfg.spoof_field_c = pair(v)?,
                "gamma" => cfg.gamma = pair(v)?,
                "max_attempts" => {
                    cfg.max_attempts = v
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad count '{v}'")))?
                }
                other => return Err(Error::invalid(format!("unknown config key '{other}'"))),
            }
        }
        Ok(cfg)
    }
}

/// Per-sample RNG stream, keyed by master seed, sample index, and stream tag.
fn sample_rng(master: u64, index: u64, stream: u32) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master.to_le_bytes());
    seed[8..16].copy_from_slice(&index.to_le_bytes());
    seed[16..20].copy_from_slice(&stream.to_le_bytes());
    seed[20..32].copy_from_slice(b"spoofcorpus\0");
    ChaCha8Rng::from_seed(seed)
}

const STREAM_TEXTURE: u32 = 0;
const STREAM_LIGHTING: u32 = 1;
const STREAM_SPOOF: u32 = 2;

fn uniform_in(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    }
}

fn sample_texture(cfg: &CorpusConfig, index: u64, mask_normals: &[Direction]) -> Result<AlbedoTexture> {
    let mut rng = sample_rng(cfg.seed, index, STREAM_TEXTURE);
    match cfg.texture {
        TextureFamily::White => Ok(AlbedoTexture::white()),
        TextureFamily::Ramp => {
            let v: [f64; 3] = UnitSphere.sample(&mut rng);
            let dir = Direction::new(v[0], v[1], v[2])?;
            let lo = (cfg.texture_mean - 1.7 * cfg.texture_std).max(0.05);
            let hi = (cfg.texture_mean + 1.7 * cfg.texture_std).min(0.995);
            AlbedoTexture::ramp(dir, lo, hi)
        }
        TextureFamily::Blobs => {
            let blobs: Vec<Blob> = (0..cfg.blob_count)
                .map(|_| {
                    let v: [f64; 3] = UnitSphere.sample(&mut rng);
                    let center = Direction::new(v[0], v[1], v[2]).expect("unit sample");
                    let width = uniform_in(&mut rng, cfg.blob_width);
                    let gain = rng.random_range(-1.0..1.0);
                    Blob {
                        center,
                        width,
                        gain,
                    }
                })
                .collect();
            AlbedoTexture::calibrated_blobs(blobs, mask_normals, cfg.texture_mean, cfg.texture_std)
        }
    }
}

fn sample_lighting(cfg: &CorpusConfig, rng: &mut ChaCha8Rng) -> ShCoeffs {
    let dc = uniform_in(rng, cfg.light_dc);
    let mut light = ShCoeffs::zeros(2);
    light.set(0, 0, dc).unwrap();
    for l in 1..=2u32 {
        for m in -(l as i32)..=(l as i32) {
            let bound = cfg.light_band_frac * dc;
            let v = if bound > 0.0 {
                rng.random_range(-bound..bound)
            } else {
                0.0
            };
            light.set(l, m, v).unwrap();
        }
    }
    light
}

fn sample_spoof_params(
    cfg: &CorpusConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(PlanarIlluminationField, f64)> {
    let c = uniform_in(rng, cfg.spoof_field_c);
    let mut field = None;
    for _ in 0..cfg.max_attempts {
        let sa = if rng.random_range(0.0..1.0) < 0.5 { -1.0 } else { 1.0 };
        let sb = if rng.random_range(0.0..1.0) < 0.5 { -1.0 } else { 1.0 };
        let a = sa * c * uniform_in(rng, cfg.spoof_slope_a);
        let b = sb * c * uniform_in(rng, cfg.spoof_slope_b);
        if a.abs() + b.abs() <= 0.9 * c {
            field = Some(PlanarIlluminationField::new(a, b, c)?);
            break;
        }
    }
    let field = field.ok_or_else(|| {
        Error::Validity("could not draw a positive spoof field within budget".to_string())
    })?;
    let gamma = uniform_in(rng, cfg.gamma);
    Ok((field, gamma))
}

struct GeneratedPair {
    live: SampleRecord,
    spoof: SampleRecord,
}

fn generate_pair(
    cfg: &CorpusConfig,
    index: u64,
    kernel: &crate::sh::LambertianKernel,
    mask_normals: &[Direction],
    out_dir: &Path,
) -> Result<GeneratedPair> {
    let live_id = format!("live_{index:04}");
    let spoof_id = format!("spoof_{index:04}");
    let wrap = |id: &str, e: Error| Error::Generation {
        id: id.to_string(),
        source: Box::new(e),
    };

    let texture = sample_texture(cfg, index, mask_normals).map_err(|e| wrap(&live_id, e))?;
    let scene = SphereScene::new(1.0, texture, cfg.resolution).map_err(|e| wrap(&live_id, e))?;

    let mut light_rng = sample_rng(cfg.seed, index, STREAM_LIGHTING);
    let mut accepted: Option<(ShCoeffs, Image)> = None;
    for _ in 0..cfg.max_attempts {
        let light = sample_lighting(cfg, &mut light_rng);
        match render_live_distant(&scene, &light, kernel) {
            Ok(img) => {
                accepted = Some((light, img));
                break;
            }
            Err(Error::Validity(_)) => continue,
            Err(e) => return Err(wrap(&live_id, e)),
        }
    }
    let (light, live_raw) = accepted.ok_or_else(|| {
        wrap(
            &live_id,
            Error::Validity(format!(
                "no positive-irradiance lighting found in {} attempts",
                cfg.max_attempts
            )),
        )
    })?;
    // Quantize to the on-disk precision before deriving the spoof.
    let live = live_raw.quantize_f32();

    let mut spoof_rng = sample_rng(cfg.seed, index, STREAM_SPOOF);
    let (field, gamma) = sample_spoof_params(cfg, &mut spoof_rng).map_err(|e| wrap(&spoof_id, e))?;
    let tone = ToneProfile::new(gamma).map_err(|e| wrap(&spoof_id, e))?;
    let spoof = capture_spoof(&live, &field, &tone)
        .map_err(|e| wrap(&spoof_id, e))?
        .quantize_f32();

    let live_path = format!("{live_id}.pfm");
    let spoof_path = format!("{spoof_id}.pfm");
    save_image(&out_dir.join(&live_path), &live).map_err(|e| wrap(&live_id, e))?;
    save_image(&out_dir.join(&spoof_path), &spoof).map_err(|e| wrap(&spoof_id, e))?;

    let mut lighting = [0.0; 9];
    lighting.copy_from_slice(light.coeffs());
    Ok(GeneratedPair {
        live: SampleRecord {
            id: live_id,
            label: Label::Live,
            scene_seed: index,
            source: None,
            lighting,
            field: None,
            gamma: None,
            path: live_path,
        },
        spoof: SampleRecord {
            id: spoof_id,
            label: Label::Spoof,
            scene_seed: index,
            source: Some(format!("live_{index:04}")),
            lighting,
            field: Some((field.a, field.b, field.c)),
            gamma: Some(gamma),
            path: spoof_path,
        },
    })
}

/// Silhouette normals of the configured resolution, row-major.
fn silhouette_normals(resolution: usize) -> Vec<Direction> {
    let mut out = Vec::new();
    for y in 0..resolution {
        for x in 0..resolution {
            if let Some(n) = crate::optics::sphere_normal_at(resolution, x, y) {
                out.push(n);
            }
        }
    }
    out
}

/// Generates the corpus into `out_dir` and writes `manifest.tsv` there.
/// Matched pairs share a scene: `spoof_i` is captured from `live_i`.
pub fn generate_corpus(cfg: &CorpusConfig, out_dir: &Path) -> Result<Manifest> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let kernel = crate::sh::lambertian_kernel_unchecked(3);
    let mask_normals = silhouette_normals(cfg.resolution);
    let pairs: Vec<Result<GeneratedPair>> = (0..cfg.samples_per_class as u64)
        .into_par_iter()
        .map(|i| generate_pair(cfg, i, &kernel, &mask_normals, out_dir))
        .collect();
    let mut lives = Vec::with_capacity(cfg.samples_per_class);
    let mut spoofs = Vec::with_capacity(cfg.samples_per_class);
    for p in pairs {
        let p = p?;
        lives.push(p.live);
        spoofs.push(p.spoof);
    }
    let mut samples = lives;
    samples.append(&mut spoofs);
    let manifest = Manifest {
        config: cfg.clone(),
        samples,
    };
    manifest.validate()?;
    save_manifest(&out_dir.join("manifest.tsv"), &manifest)?;
    Ok(manifest)
}

/// Loads every sample's image, in manifest order.
pub fn load_corpus_images(
    manifest: &Manifest,
    dir: &Path,
) -> Result<Vec<(SampleRecord, Image)>> {
    manifest
        .samples
        .iter()
        .map(|s| Ok((s.clone(), load_image(&dir.join(&s.path))?)))
        .collect()
}

/// Directory of a manifest file.
pub fn manifest_dir(manifest_path: &Path) -> PathBuf {
    manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}
