//! Real spherical harmonics on the unit sphere.
//!
//! Basis convention used throughout the crate:
//!
//! * Real orthonormal harmonics `Y_l^m` with `∫ Y_l^m Y_l'^m' dω = δ_ll' δ_mm'`.
//! * `m > 0` pairs with `cos(mφ)`, `m < 0` with `sin(|m|φ)`.
//! * The associated Legendre recurrence carries the Condon–Shortley phase
//!   `(-1)^m`; the basis multiplies by `(-1)^m` again to cancel it, so the
//!   low-degree harmonics take the familiar all-positive cartesian forms:
//!   `Y_1^{-1} ∝ y`, `Y_1^0 ∝ z`, `Y_1^1 ∝ x`, `Y_2^{-2} ∝ xy`, ...
//! * Coefficients are stored flat at index `l(l+1) + m`.
//!
//! The zonal axis is `+z`; `θ` is the polar angle from `+z` and `φ` the
//! azimuth measured from `+x` toward `+y`.

use crate::error::{Error, Result};

/// Unit vector on the sphere. `x² + y² + z² = 1` within 1e-12.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    x: f64,
    y: f64,
    z: f64,
}

impl Direction {
    /// Builds a direction from an arbitrary non-zero vector, normalizing it.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n2 = x * x + y * y + z * z;
        if !n2.is_finite() || n2 < 1e-24 {
            return Err(Error::invalid(format!(
                "direction ({x}, {y}, {z}) cannot be normalized"
            )));
        }
        let inv = n2.sqrt().recip();
        Ok(Direction {
            x: x * inv,
            y: y * inv,
            z: z * inv,
        })
    }

    /// Direction from polar angle `theta` (from +z) and azimuth `phi`.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let (st, ct) = (theta.sin(), theta.cos());
        let (sp, cp) = (phi.sin(), phi.cos());
        Direction {
            x: st * cp,
            y: st * sp,
            z: ct,
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// cos θ of this direction (the z component).
    pub fn cos_theta(&self) -> f64 {
        self.z
    }

    /// Azimuth in (-π, π]; arbitrary (0) at the poles.
    pub fn phi(&self) -> f64 {
        self.y.atan2(self.x)
    }
}

/// Nodes and weights of a Gauss–Legendre rule on [-1, 1].
///
/// Newton iteration on the Legendre recurrence; accurate to ~1e-15 for the
/// orders used here.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut rule = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        // Initial guess (Chebyshev-like), then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and derivative via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n, p0 = P_{n-1}
            pp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / pp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.push((x, w));
    }
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    rule
}

/// Quadrature grid on the unit sphere.
///
/// Gauss–Legendre in cos θ crossed with a uniform azimuth rule. With
/// resolution parameter `n` the grid has `n` polar × `2n` azimuthal nodes and
/// integrates spherical polynomials exactly up to total degree `2n - 1`
/// (its *design order*).
#[derive(Debug, Clone)]
pub struct SphereGrid {
    nodes: Vec<(Direction, f64)>,
    design_order: u32,
}

impl SphereGrid {
    pub fn new(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("grid resolution {n} < 2")));
        }
        let n_theta = n as usize;
        let n_phi = 2 * n_theta;
        let gl = gauss_legendre(n_theta);
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        for &(ct, wt) in &gl {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                let d = Direction {
                    x: st * phi.cos(),
                    y: st * phi.sin(),
                    z: ct,
                };
                nodes.push((d, wt * dphi));
            }
        }
        Ok(SphereGrid {
            nodes,
            design_order: 2 * n - 1,
        })
    }

    /// Smallest grid whose design order is at least `order`.
    pub fn with_design_order(order: u32) -> Result<Self> {
        SphereGrid::new((order / 2 + 1).max(2))
    }

    /// Maximum total degree of spherical polynomials integrated exactly.
    pub fn design_order(&self) -> u32 {
        self.design_order
    }

    pub fn nodes(&self) -> &[(Direction, f64)] {
        &self.nodes
    }

    /// ∫ f dω by the grid rule, in a fixed summation order.
    pub fn integrate(&self, mut f: impl FnMut(&Direction) -> f64) -> f64 {
        let mut acc = 0.0;
        for (d, w) in &self.nodes {
            acc += w * f(d);
        }
        acc
    }
}

/// Number of coefficients for a band limit `order`.
pub fn coeff_count(order: u32) -> usize {
    ((order + 1) * (order + 1)) as usize
}

/// Band-limited real function on the sphere as orthonormal SH coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ShCoeffs {
    order: u32,
    c: Vec<f64>,
}

impl ShCoeffs {
    pub fn zeros(order: u32) -> Self {
        ShCoeffs {
            order,
            c: vec![0.0; coeff_count(order)],
        }
    }

    pub fn from_vec(order: u32, c: Vec<f64>) -> Result<Self> {
        if c.len() != coeff_count(order) {
            return Err(Error::invalid(format!(
                "expected {} coefficients for order {order}, got {}",
                coeff_count(order),
                c.len()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite SH coefficient".to_string()));
        }
        Ok(ShCoeffs { order, c })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    fn check_lm(&self, l: u32, m: i32) -> Result<usize> {
        if l > self.order || m.unsigned_abs() > l {
            return Err(Error::invalid(format!(
                "(l={l}, m={m}) out of range for order {}",
                self.order
            )));
        }
        Ok(flat_index(l, m))
    }

    pub fn get(&self, l: u32, m: i32) -> Result<f64> {
        Ok(self.c[self.check_lm(l, m)?])
    }

    pub fn set(&mut self, l: u32, m: i32, v: f64) -> Result<()> {
        let i = self.check_lm(l, m)?;
        self.c[i] = v;
        Ok(())
    }

    /// Evaluates Σ c_lm Y_l^m(d).
    pub fn synthesize(&self, d: &Direction) -> f64 {
        let basis = sh_basis(self.order, d);
        self.c.iter().zip(basis.iter()).map(|(c, b)| c * b).sum()
    }

    /// Σ_m c_lm² for one degree.
    pub fn band_energy(&self, l: u32) -> Result<f64> {
        if l > self.order {
            return Err(Error::invalid(format!(
                "degree {l} out of range for order {}",
                self.order
            )));
        }
        let lo = (l * l) as usize;
        let hi = ((l + 1) * (l + 1)) as usize;
        Ok(self.c[lo..hi].iter().map(|v| v * v).sum())
    }

    /// Σ over all degrees of band_energy (Parseval energy ∫ f² dω).
    pub fn total_energy(&self) -> f64 {
        self.c.iter().map(|v| v * v).sum()
    }

    /// Copy truncated (or zero-extended) to a new band limit.
    pub fn resized(&self, order: u32) -> ShCoeffs {
        let mut out = ShCoeffs::zeros(order);
        let n = out.c.len().min(self.c.len());
        out.c[..n].copy_from_slice(&self.c[..n]);
        out
    }
}

/// Flat storage index for (l, m).
pub fn flat_index(l: u32, m: i32) -> usize {
    ((l * (l + 1)) as i64 + m as i64) as usize
}

/// Evaluates every basis function up to `order` at `d`, flat-indexed.
pub fn sh_basis(order: u32, d: &Direction) -> Vec<f64> {
    let mut out = vec![0.0; coeff_count(order)];
    sh_basis_into(order, d, &mut out);
    out
}

/// As [`sh_basis`], writing into a caller-provided buffer of length
/// `coeff_count(order)`.
pub fn sh_basis_into(order: u32, d: &Direction, out: &mut [f64]) {
    let l_max = order as usize;
    debug_assert_eq!(out.len(), coeff_count(order));
    let ct = d.z;
    let st = (1.0 - ct * ct).max(0.0).sqrt();
    let phi = d.phi();

    // Associated Legendre values P_l^m(cos θ) with the Condon–Shortley phase,
    // packed triangularly: plm[l][m] at l*(l+1)/2 + m.
    let tri = (l_max + 1) * (l_max + 2) / 2;
    let mut plm = vec![0.0; tri];
    let at = |l: usize, m: usize| l * (l + 1) / 2 + m;
    plm[0] = 1.0;
    for m in 1..=l_max {
        // P_m^m = -(2m-1) sinθ P_{m-1}^{m-1}
        plm[at(m, m)] = -((2 * m - 1) as f64) * st * plm[at(m - 1, m - 1)];
    }
    for m in 0..l_max {
        // P_{m+1}^m = (2m+1) cosθ P_m^m
        plm[at(m + 1, m)] = (2 * m + 1) as f64 * ct * plm[at(m, m)];
    }
    for m in 0..=l_max {
        for l in (m + 2)..=l_max {
            let (lf, mf) = (l as f64, m as f64);
            plm[at(l, m)] = ((2.0 * lf - 1.0) * ct * plm[at(l - 1, m)]
                - (lf + mf - 1.0) * plm[at(l - 2, m)])
                / (lf - mf);
        }
    }

    // cos(mφ), sin(mφ) by recurrence.
    let mut cos_m = vec![0.0; l_max + 1];
    let mut sin_m = vec![0.0; l_max + 1];
    cos_m[0] = 1.0;
    if l_max >= 1 {
        cos_m[1] = phi.cos();
        sin_m[1] = phi.sin();
        for m in 2..=l_max {
            cos_m[m] = 2.0 * cos_m[1] * cos_m[m - 1] - cos_m[m - 2];
            sin_m[m] = 2.0 * cos_m[1] * sin_m[m - 1] - sin_m[m - 2];
        }
    }

    let four_pi = 4.0 * std::f64::consts::PI;
    for l in 0..=l_max {
        // m = 0: K = sqrt((2l+1)/4π)
        let k0 = ((2 * l + 1) as f64 / four_pi).sqrt();
        out[flat_index(l as u32, 0)] = k0 * plm[at(l, 0)];
        for m in 1..=l {
            // K_lm = sqrt((2l+1)/(4π) (l-m)!/(l+m)!), ratio as a running product.
            let mut ratio = 1.0;
            for k in (l - m + 1)..=(l + m) {
                ratio /= k as f64;
            }
            let k = ((2 * l + 1) as f64 / four_pi * ratio).sqrt();
            // (-1)^m cancels the Condon–Shortley phase carried by plm.
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let base = std::f64::consts::SQRT_2 * k * sign * plm[at(l, m)];
            out[flat_index(l as u32, m as i32)] = base * cos_m[m];
            out[flat_index(l as u32, -(m as i32))] = base * sin_m[m];
        }
    }
}

/// Value of the real orthonormal spherical harmonic Y_l^m at `d`.
pub fn sh_eval(l: u32, m: i32, d: &Direction) -> Result<f64> {
    if m.unsigned_abs() > l {
        return Err(Error::invalid(format!("invalid (l={l}, m={m}) pair")));
    }
    Ok(sh_basis(l, d)[flat_index(l, m)])
}

/// Projects samples taken at the grid nodes onto the basis:
/// `c_lm = Σ_nodes w · sample · Y_l^m(node)`.
///
/// Requires `grid.design_order() >= 2 * order` so that products of
/// band-limited functions integrate exactly.
pub fn sh_transform(samples: &[f64], order: u32, grid: &SphereGrid) -> Result<ShCoeffs> {
    if samples.len() != grid.nodes().len() {
        return Err(Error::invalid(format!(
            "sample count {} != node count {}",
            samples.len(),
            grid.nodes().len()
        )));
    }
    if grid.design_order() < 2 * order {
        return Err(Error::invalid(format!(
            "grid design order {} < 2·order = {}",
            grid.design_order(),
            2 * order
        )));
    }
    let mut out = ShCoeffs::zeros(order);
    let mut basis = vec![0.0; coeff_count(order)];
    for ((d, w), s) in grid.nodes().iter().zip(samples) {
        sh_basis_into(order, d, &mut basis);
        let ws = w * s;
        for (c, b) in out.c.iter_mut().zip(basis.iter()) {
            *c += ws * b;
        }
    }
    Ok(out)
}

/// Evaluates Σ c_lm Y_l^m(d). Free-function form of [`ShCoeffs::synthesize`].
pub fn sh_synthesize(c: &ShCoeffs, d: &Direction) -> f64 {
    c.synthesize(d)
}

/// Coefficients of the pointwise product f·g, truncated at `l_out`.
///
/// Synthesize–multiply–transform; exact when
/// `grid.design_order() >= order(f) + order(g) + l_out`.
pub fn sh_product(f: &ShCoeffs, g: &ShCoeffs, l_out: u32, grid: &SphereGrid) -> Result<ShCoeffs> {
    let needed = f.order() + g.order() + l_out;
    if grid.design_order() < needed {
        return Err(Error::invalid(format!(
            "grid design order {} < {} required for product transform",
            grid.design_order(),
            needed
        )));
    }
    let samples: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|(d, _)| f.synthesize(d) * g.synthesize(d))
        .collect();
    // The transform precondition (2·l_out) is implied by `needed` unless both
    // inputs are constants; the grid is at least design order 3 anyway.
    sh_transform(&samples, l_out, grid)
}

/// Per-degree gains of the Lambertian clipped-cosine kernel.
///
/// `k[l]` is scaled so that [`funk_hecke_convolve`] maps lighting directly to
/// irradiance: `k[l] = √(4π/(2l+1)) · a_l` where `a_l = ∫ max(0,cosθ) Y_l^0 dω`
/// is the zonal transform coefficient of the clipped cosine. Equivalently
/// `k[l] = 2π ∫₀¹ t P_l(t) dt`, giving k₀ = π, k₁ = 2π/3, k₂ = π/4 and zero
/// for odd l > 1.
#[derive(Debug, Clone)]
pub struct LambertianKernel {
    k: Vec<f64>,
}

impl LambertianKernel {
    pub fn order(&self) -> u32 {
        self.k.len() as u32 - 1
    }

    pub fn get(&self, l: u32) -> Result<f64> {
        self.k
            .get(l as usize)
            .copied()
            .ok_or_else(|| Error::invalid(format!("degree {l} beyond kernel order")))
    }

    pub fn gains(&self) -> &[f64] {
        &self.k
    }
}

/// Computes the Lambertian kernel gains up to `order`.
///
/// The integrand `t P_l(t)` is polynomial on [0, 1] (the clipped cosine is
/// zero below t = 0), so a 1-D Gauss–Legendre rule mapped to [0, 1] with
/// enough nodes is exact; the grid argument only gates that downstream use of
/// the kernel has sufficient quadrature resolution (design order ≥ order + 2).
pub fn lambertian_kernel(order: u32, grid: &SphereGrid) -> Result<LambertianKernel> {
    if grid.design_order() < order + 2 {
        return Err(Error::invalid(format!(
            "grid design order {} < order + 2 = {}",
            grid.design_order(),
            order + 2
        )));
    }
    Ok(lambertian_kernel_unchecked(order))
}

pub(crate) fn lambertian_kernel_unchecked(order: u32) -> LambertianKernel {
    let n = (order as usize + 3) / 2 + 2;
    let gl = gauss_legendre(n);
    let mut k = vec![0.0; order as usize + 1];
    for &(x, w) in &gl {
        // map [-1,1] -> t in [0,1]
        let t = 0.5 * (x + 1.0);
        let wt = 0.5 * w;
        // Legendre P_l(t) by recurrence, accumulate 2π ∫ t P_l(t) dt.
        let mut p0 = 1.0;
        let mut p1 = t;
        k[0] += wt * t * p0;
        if order >= 1 {
            k[1] += wt * t * p1;
        }
        for l in 2..=order as usize {
            let lf = l as f64;
            let p2 = ((2.0 * lf - 1.0) * t * p1 - (lf - 1.0) * p0) / lf;
            k[l] += wt * t * p2;
            p0 = p1;
            p1 = p2;
        }
    }
    for v in &mut k {
        *v *= 2.0 * std::f64::consts::PI;
    }
    LambertianKernel { k }
}

/// Applies the Funk–Hecke theorem: irradiance coefficients are the lighting
/// coefficients scaled per degree by the kernel gain.
pub fn funk_hecke_convolve(light: &ShCoeffs, kernel: &LambertianKernel) -> Result<ShCoeffs> {
    if kernel.order() < light.order() {
        return Err(Error::invalid(format!(
            "kernel order {} < light order {}",
            kernel.order(),
            light.order()
        )));
    }
    let mut out = ShCoeffs::zeros(light.order());
    for l in 0..=light.order() {
        let g = kernel.k[l as usize];
        for m in -(l as i32)..=(l as i32) {
            let i = flat_index(l, m);
            out.c[i] = light.c[i] * g;
        }
    }
    Ok(out)
}

/// Σ_m c_lm² for one degree. Free-function form of [`ShCoeffs::band_energy`].
pub fn band_energy(c: &ShCoeffs, l: u32) -> Result<f64> {
    c.band_energy(l)
}
