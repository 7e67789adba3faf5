//! Physics-based image decomposition: fit low-order SH lighting to an image
//! of known geometry, recover albedo, and score the higher-order residual
//! that a second-order lighting model cannot absorb.
//!
//! Fits are parameterized directly in the irradiance domain (coefficients of
//! the reflected light over surface normals). For degrees 0–2 this is
//! equivalent to fitting a distant light through the Lambertian kernel, whose
//! gains are all non-zero there; at degree 3 the kernel gain vanishes, so
//! degree-3 irradiance has no distant-light preimage — which is exactly what
//! the leakage score measures.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::optics::sphere_normal_at;
use crate::sh::{coeff_count, flat_index, sh_basis_into, Direction, LambertianKernel, ShCoeffs};

/// Shading values below `DEFAULT_FLOOR_FRAC × max(image)` are floored before
/// the albedo division to bound blow-up at the horizon.
pub const DEFAULT_FLOOR_FRAC: f64 = 1e-4;

/// Per-pixel unit normals with a validity mask.
#[derive(Debug, Clone)]
pub struct NormalMap {
    width: usize,
    height: usize,
    normals: Vec<Option<Direction>>,
}

impl NormalMap {
    pub fn new(width: usize, height: usize, normals: Vec<Option<Direction>>) -> Result<Self> {
        if normals.len() != width * height {
            return Err(Error::invalid("normal map dimensions mismatch"));
        }
        Ok(NormalMap {
            width,
            height,
            normals,
        })
    }

    /// Normals of the orthographic unit-sphere view used by the renderers.
    pub fn unit_sphere(resolution: usize) -> Self {
        let mut normals = Vec::with_capacity(resolution * resolution);
        for y in 0..resolution {
            for x in 0..resolution {
                normals.push(sphere_normal_at(resolution, x, y));
            }
        }
        NormalMap {
            width: resolution,
            height: resolution,
            normals,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> Option<&Direction> {
        self.normals[y * self.width + x].as_ref()
    }

    fn check_against(&self, img: &Image) -> Result<()> {
        if self.width != img.width() || self.height != img.height() {
            return Err(Error::invalid(format!(
                "normal map {}x{} does not match image {}x{}",
                self.width,
                self.height,
                img.width(),
                img.height()
            )));
        }
        Ok(())
    }
}

/// Result of a least-squares lighting fit.
#[derive(Debug, Clone)]
pub struct ShFit {
    /// Fitted irradiance coefficients (reflected light over normals).
    pub irradiance: ShCoeffs,
    /// Equivalent distant-light coefficients where the kernel gain is
    /// non-negligible; degrees the kernel annihilates are left at zero.
    pub light: ShCoeffs,
    /// Synthesized irradiance over the per-pixel normals.
    pub shading: Image,
    /// Sum of squared residuals over the mask.
    pub residual_energy: f64,
}

/// Fits irradiance coefficients up to `order` by linear least squares over
/// the valid pixels, under the white-albedo assumption (albedo deviations
/// land in the residual). Returns the fit and the shading image.
pub fn fit_sh_lighting(
    img: &Image,
    normals: &NormalMap,
    kernel: &LambertianKernel,
    order: u32,
) -> Result<ShFit> {
    if order > 3 {
        return Err(Error::invalid(format!("fit order {order} not in 0..=3")));
    }
    if kernel.order() < order {
        return Err(Error::invalid(format!(
            "kernel order {} < fit order {order}",
            kernel.order()
        )));
    }
    normals.check_against(img)?;
    let dim = coeff_count(order);
    let mut valid = 0usize;
    for (x, y, _) in img.valid_pixels() {
        if normals.get(x, y).is_some() {
            valid += 1;
        }
    }
    if valid < dim {
        return Err(Error::invalid(format!(
            "{valid} valid pixels < {dim} coefficients at order {order}"
        )));
    }

    // Normal equations, accumulated in a fixed pixel order.
    let mut gram = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    let mut basis = vec![0.0; dim];
    for (x, y, v) in img.valid_pixels() {
        let Some(n) = normals.get(x, y) else { continue };
        sh_basis_into(order, n, &mut basis);
        for j in 0..dim {
            rhs[j] += basis[j] * v;
            for k in j..dim {
                gram[(j, k)] += basis[j] * basis[k];
            }
        }
    }
    for j in 0..dim {
        for k in 0..j {
            gram[(j, k)] = gram[(k, j)];
        }
    }

    let chol = match gram.clone().cholesky() {
        Some(c) => c,
        None => return Err(rank_deficiency_error(&gram, order)),
    };
    let solution = chol.solve(&rhs);

    let irradiance = ShCoeffs::from_vec(order, solution.iter().cloned().collect())?;

    // Invert the kernel per degree where it has support.
    let k0 = kernel.get(0)?.abs();
    let mut light = ShCoeffs::zeros(order);
    for l in 0..=order {
        let g = kernel.get(l)?;
        if g.abs() > 1e-9 * k0 {
            for m in -(l as i32)..=(l as i32) {
                light.set(l, m, irradiance.get(l, m)? / g)?;
            }
        }
    }

    let mut shading_px = vec![0.0; img.width() * img.height()];
    let mut residual_energy = 0.0;
    for y in 0..img.height() {
        for x in 0..img.width() {
            if !img.is_valid(x, y) {
                continue;
            }
            let Some(n) = normals.get(x, y) else { continue };
            sh_basis_into(order, n, &mut basis);
            let s: f64 = irradiance
                .coeffs()
                .iter()
                .zip(basis.iter())
                .map(|(c, b)| c * b)
                .sum();
            shading_px[y * img.width() + x] = s;
            let r = img.get(x, y) - s;
            residual_energy += r * r;
        }
    }
    let shading = Image::new(
        img.width(),
        img.height(),
        shading_px,
        img.mask().map(|m| m.to_vec()),
    )?;

    Ok(ShFit {
        irradiance,
        light,
        shading,
        residual_energy,
    })
}

fn rank_deficiency_error(gram: &DMatrix<f64>, order: u32) -> Error {
    // Name the deficient subspace: the eigenvector of the smallest eigenvalue.
    let eig = nalgebra::SymmetricEigen::new(gram.clone());
    let mut idx = 0;
    let mut smallest = f64::INFINITY;
    for (i, v) in eig.eigenvalues.iter().enumerate() {
        if *v < smallest {
            smallest = *v;
            idx = i;
        }
    }
    let vec = eig.eigenvectors.column(idx);
    let mut terms: Vec<String> = Vec::new();
    for l in 0..=order {
        for m in -(l as i32)..=(l as i32) {
            let w = vec[flat_index(l, m)];
            if w.abs() > 0.2 {
                terms.push(format!("{w:+.3}·Y_{l}^{m}"));
            }
        }
    }
    Error::Fit(format!(
        "rank-deficient design (eigenvalue {smallest:.3e}); unresolved direction ≈ {}",
        terms.join(" ")
    ))
}

/// Per-pixel `img / max(shading, floor)`, masked as the input.
pub fn recover_albedo(img: &Image, shading: &Image, floor: f64) -> Result<Image> {
    if floor <= 0.0 {
        return Err(Error::invalid("albedo floor must be positive"));
    }
    img.check_same_shape(shading)?;
    Ok(img.map_valid(|x, y, v| v / shading.get(x, y).max(floor)))
}

/// Statistics that expose texture pushed into a recovered albedo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlbedoStats {
    pub mean: f64,
    pub variance: f64,
    /// Mean squared forward-difference magnitude over interior mask pixels.
    pub gradient_energy: f64,
}

/// Mean, variance, and forward-difference gradient energy over the mask.
pub fn albedo_artifact_stats(img: &Image) -> Result<AlbedoStats> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (_, _, v) in img.valid_pixels() {
        sum += v;
        n += 1;
    }
    if n == 0 {
        return Err(Error::invalid("empty mask"));
    }
    let mean = sum / n as f64;
    let mut var = 0.0;
    for (_, _, v) in img.valid_pixels() {
        var += (v - mean) * (v - mean);
    }
    let variance = var / n as f64;

    let mut grad = 0.0;
    let mut g_count = 0usize;
    for y in 0..img.height().saturating_sub(1) {
        for x in 0..img.width().saturating_sub(1) {
            if img.is_valid(x, y) && img.is_valid(x + 1, y) && img.is_valid(x, y + 1) {
                let gx = img.get(x + 1, y) - img.get(x, y);
                let gy = img.get(x, y + 1) - img.get(x, y);
                grad += gx * gx + gy * gy;
                g_count += 1;
            }
        }
    }
    let gradient_energy = if g_count > 0 {
        grad / g_count as f64
    } else {
        0.0
    };
    Ok(AlbedoStats {
        mean,
        variance,
        gradient_energy,
    })
}

/// Third-order leakage: the share of image energy that an order-3 irradiance
/// model explains but an order-2 model cannot,
/// `(residual₂ - residual₃) / Σ img²`. Lives in [0, 1]; zero for any image
/// that second-order lighting explains exactly.
pub fn leakage_score(img: &Image, normals: &NormalMap, kernel: &LambertianKernel) -> Result<f64> {
    let fit2 = fit_sh_lighting(img, normals, kernel, 2)?;
    let fit3 = fit_sh_lighting(img, normals, kernel, 3)?;
    let total: f64 = img.valid_pixels().map(|(_, _, v)| v * v).sum();
    if total <= 0.0 {
        return Ok(0.0);
    }
    Ok(((fit2.residual_energy - fit3.residual_energy) / total).max(0.0))
}

/// Full second-order decomposition of an image.
#[derive(Debug, Clone)]
pub struct DecompositionResult {
    /// Fitted order-2 irradiance coefficients.
    pub lighting: ShCoeffs,
    /// Irradiance synthesized over the normals.
    pub shading: Image,
    /// img / max(shading, floor).
    pub albedo: Image,
    /// img - shading.
    pub residual: Image,
    /// Third-order leakage score.
    pub leakage: f64,
    /// Sum of squared order-2 residuals over the mask.
    pub residual_energy: f64,
    /// Σ img² over the mask.
    pub total_energy: f64,
}

/// Runs the standard order-2 pipeline: fit, albedo recovery with the default
/// floor, residual image, and the leakage score.
pub fn decompose(
    img: &Image,
    normals: &NormalMap,
    kernel: &LambertianKernel,
) -> Result<DecompositionResult> {
    let fit = fit_sh_lighting(img, normals, kernel, 2)?;
    let floor = (DEFAULT_FLOOR_FRAC * img.masked_max()?).max(f64::MIN_POSITIVE);
    let albedo = recover_albedo(img, &fit.shading, floor)?;
    let residual = img.map_valid(|x, y, v| v - fit.shading.get(x, y));
    let leakage = leakage_score(img, normals, kernel)?;
    let total_energy: f64 = img.valid_pixels().map(|(_, _, v)| v * v).sum();
    Ok(DecompositionResult {
        lighting: fit.irradiance,
        shading: fit.shading,
        albedo,
        residual,
        leakage,
        residual_energy: fit.residual_energy,
        total_energy,
    })
}
