//! Optics laboratory for photograph-replay ("spoof") attacks on face
//! authentication, at desk scale.
//!
//! The crate simulates live photographs of Lambertian spheres under
//! spherical-harmonic or near point lighting, simulates re-capturing a
//! printed photo of such a scene under a second, spatially varying light,
//! decomposes images into second-order-harmonic shading and albedo, and
//! quantifies the higher-order lighting artifacts and contrast losses that
//! give re-captured photos away. A small feature classifier, a supervised
//! contrastive embedding, and biometric error metrics close the loop from
//! physics to detection rates.
//!
//! Modules:
//! * [`sh`] — real spherical harmonics, sphere quadrature, Funk–Hecke
//!   convolution with the Lambertian clipped-cosine kernel, SH products.
//! * [`optics`] — live renders (distant SH / near point light), the planar
//!   illumination field on a flat photo, and spoof re-capture.
//! * [`decompose`] — least-squares lighting fits, albedo recovery, and the
//!   third-order leakage score.
//! * [`imstats`] — RMS contrast, histogram equalization, planar gain
//!   regression between image pairs.
//! * [`padlab`] — three-stream features, supervised contrastive embedding,
//!   logistic classifier, APCER/BPCER/ACER and TPR@FPR metrics, occlusion
//!   attribution, live-only anomaly prior.
//! * [`corpus`] — deterministic synthetic live/spoof dataset generation and
//!   the PFM/PGM/manifest file formats.
//! * [`selfcheck`] — the identity suite behind the `shcheck` CLI command.

pub mod corpus;
pub mod decompose;
pub mod error;
pub mod image;
pub mod imstats;
pub mod optics;
pub mod padlab;
pub mod selfcheck;
pub mod sh;
pub mod texture;

pub use error::{Error, Result};

/// Ground-truth class of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Live,
    Spoof,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Live => "live",
            Label::Spoof => "spoof",
        }
    }

    pub fn parse(s: &str) -> Result<Label> {
        match s {
            "live" => Ok(Label::Live),
            "spoof" => Ok(Label::Spoof),
            other => Err(Error::invalid(format!("unknown label '{other}'"))),
        }
    }
}
