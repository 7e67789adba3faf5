//! Grayscale portable float map (PFM) images with a sibling portable graymap
//! (PGM) validity mask.
//!
//! PFM layout: `Pf\n<width> <height>\n<scale>\n` followed by 32-bit IEEE
//! floats, bottom row first per the PFM convention; a negative scale declares
//! little-endian data (always written here as -1.0). The mask is stored next
//! to the image as `<stem>.mask.pgm`, a binary P5 graymap with 255 = valid.
//! Pixels quantize to f32 on write, so a written-then-read image reproduces
//! an f32-valued source bit-exactly.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::Image;

fn parse_err(path: &Path, offset: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        context: format!("{} byte {offset}", path.display()),
        msg: msg.into(),
    }
}

/// Mask path convention: `dir/name.pfm` → `dir/name.mask.pgm`.
pub fn mask_path(path: &Path) -> PathBuf {
    path.with_extension("mask.pgm")
}

pub fn save_image(path: &Path, img: &Image) -> Result<()> {
    let mut buf: Vec<u8> = Vec::with_capacity(64 + 4 * img.pixels().len());
    buf.extend_from_slice(b"Pf\n");
    buf.extend_from_slice(format!("{} {}\n", img.width(), img.height()).as_bytes());
    buf.extend_from_slice(b"-1.0\n");
    // Bottom-to-top scanlines.
    for y in (0..img.height()).rev() {
        for x in 0..img.width() {
            buf.extend_from_slice(&(img.get(x, y) as f32).to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&buf)?;

    if let Some(mask) = img.mask() {
        let mp = mask_path(path);
        let mut mbuf: Vec<u8> =
            format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
        for v in mask {
            mbuf.push(if *v { 255 } else { 0 });
        }
        let mut mf = std::fs::File::create(&mp)?;
        mf.write_all(&mbuf)?;
    }
    Ok(())
}

/// Reads one whitespace-terminated token, returning it with the offset just
/// past its terminator.
fn read_token(data: &[u8], mut at: usize, path: &Path) -> Result<(String, usize)> {
    while at < data.len() && data[at].is_ascii_whitespace() {
        at += 1;
    }
    let start = at;
    while at < data.len() && !data[at].is_ascii_whitespace() {
        at += 1;
    }
    if start == at {
        return Err(parse_err(path, start, "unexpected end of header"));
    }
    let tok = std::str::from_utf8(&data[start..at])
        .map_err(|_| parse_err(path, start, "non-ASCII header token"))?
        .to_string();
    // Consume exactly one whitespace terminator.
    if at < data.len() {
        at += 1;
    }
    Ok((tok, at))
}

pub fn load_image(path: &Path) -> Result<Image> {
    let mut data = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut data)?;
    let (magic, at) = read_token(&data, 0, path)?;
    if magic != "Pf" {
        return Err(parse_err(
            path,
            0,
            format!("expected magic 'Pf' (grayscale PFM), found '{magic}'"),
        ));
    }
    let (w_tok, at) = read_token(&data, at, path)?;
    let (h_tok, at) = read_token(&data, at, path)?;
    let width: usize = w_tok
        .parse()
        .map_err(|_| parse_err(path, at, format!("bad width '{w_tok}'")))?;
    let height: usize = h_tok
        .parse()
        .map_err(|_| parse_err(path, at, format!("bad height '{h_tok}'")))?;
    let (scale_tok, at) = read_token(&data, at, path)?;
    let scale: f64 = scale_tok
        .parse()
        .map_err(|_| parse_err(path, at, format!("bad scale '{scale_tok}'")))?;
    if scale == 0.0 {
        return Err(parse_err(path, at, "scale must be non-zero"));
    }
    let little_endian = scale < 0.0;
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| parse_err(path, at, "dimensions overflow"))?;
    if data.len() < at + need {
        return Err(parse_err(
            path,
            data.len(),
            format!("truncated pixel data: need {} bytes from offset {at}", need),
        ));
    }
    let mut pixels = vec![0.0; width * height];
    for row in 0..height {
        let y = height - 1 - row; // stored bottom-up
        for x in 0..width {
            let o = at + 4 * (row * width + x);
            let b = [data[o], data[o + 1], data[o + 2], data[o + 3]];
            let v = if little_endian {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            };
            if !v.is_finite() {
                return Err(parse_err(path, o, "non-finite pixel"));
            }
            pixels[y * width + x] = v as f64;
        }
    }

    let mp = mask_path(path);
    let mask = if mp.exists() {
        Some(load_mask(&mp, width, height)?)
    } else {
        None
    };
    Image::new(width, height, pixels, mask)
}

fn load_mask(path: &Path, width: usize, height: usize) -> Result<Vec<bool>> {
    let mut data = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut data)?;
    let (magic, at) = read_token(&data, 0, path)?;
    if magic != "P5" {
        return Err(parse_err(path, 0, format!("expected magic 'P5', found '{magic}'")));
    }
    let (w_tok, at) = read_token(&data, at, path)?;
    let (h_tok, at) = read_token(&data, at, path)?;
    let (max_tok, at) = read_token(&data, at, path)?;
    let w: usize = w_tok
        .parse()
        .map_err(|_| parse_err(path, at, "bad mask width"))?;
    let h: usize = h_tok
        .parse()
        .map_err(|_| parse_err(path, at, "bad mask height"))?;
    if (w, h) != (width, height) {
        return Err(parse_err(
            path,
            at,
            format!("mask {w}x{h} does not match image {width}x{height}"),
        ));
    }
    if max_tok != "255" {
        return Err(parse_err(path, at, "mask maxval must be 255"));
    }
    if data.len() < at + w * h {
        return Err(parse_err(path, data.len(), "truncated mask data"));
    }
    Ok(data[at..at + w * h].iter().map(|b| *b != 0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn f32_noise_image(seed: u64, w: usize, h: usize, with_mask: bool) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pixels: Vec<f64> = (0..w * h)
            .map(|_| rng.random_range(0.0f32..2.0) as f64)
            .collect();
        let mask = with_mask.then(|| (0..w * h).map(|_| rng.random_range(0..4) > 0).collect());
        Image::new(w, h, pixels, mask).unwrap()
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pfm");
        let img = f32_noise_image(101, 17, 9, true);
        save_image(&path, &img).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn quantized_write_read_write_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.pfm");
        // Arbitrary f64 pixels: one write-read cycle quantizes, after which
        // the representation is a fixed point.
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        let pixels: Vec<f64> = (0..64).map(|_| rng.random_range(0.0..1.0)).collect();
        let img = Image::new(8, 8, pixels, None).unwrap();
        save_image(&path, &img).unwrap();
        let once = load_image(&path).unwrap();
        assert_eq!(once, img.quantize_f32());
        save_image(&path, &once).unwrap();
        let twice = load_image(&path).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn wrong_magic_names_expected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pfm");
        std::fs::write(&path, b"PF\n2 2\n-1.0\n0000000000000000").unwrap();
        match load_image(&path) {
            Err(Error::Parse { msg, .. }) => assert!(msg.contains("'Pf'"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_file_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.pfm");
        std::fs::write(&path, b"Pf\n4 4\n-1.0\nshort").unwrap();
        match load_image(&path) {
            Err(Error::Parse { context, msg }) => {
                assert!(context.contains("byte"), "{context}");
                assert!(msg.contains("truncated"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn big_endian_pfm_is_readable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("be.pfm");
        let mut buf = b"Pf\n2 1\n1.0\n".to_vec();
        buf.extend_from_slice(&1.5f32.to_be_bytes());
        buf.extend_from_slice(&0.25f32.to_be_bytes());
        std::fs::write(&path, buf).unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.get(0, 0), 1.5);
        assert_eq!(img.get(1, 0), 0.25);
    }
}
