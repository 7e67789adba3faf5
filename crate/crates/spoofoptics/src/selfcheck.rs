//! Identity suite behind the `shcheck` CLI command: verifies the harmonic
//! basis, quadrature, Lambertian kernel, Funk–Hecke convolution, and product
//! identities against independent numeric routes, each with an explicit
//! tolerance.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::sh::{
    funk_hecke_convolve, gauss_legendre, lambertian_kernel, sh_eval, sh_product, sh_transform,
    Direction, ShCoeffs, SphereGrid,
};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    /// Worst observed deviation.
    pub deviation: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

fn random_direction(rng: &mut ChaCha8Rng) -> Direction {
    loop {
        let (x, y, z) = (
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if x * x + y * y + z * z > 1e-3 {
            return Direction::new(x, y, z).unwrap();
        }
    }
}

fn random_coeffs(order: u32, rng: &mut ChaCha8Rng) -> ShCoeffs {
    let c = (0..crate::sh::coeff_count(order))
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    ShCoeffs::from_vec(order, c).unwrap()
}

/// Simpson-rule oracle for the kernel gains (independent of the
/// Gauss–Legendre path used by the implementation).
fn kernel_gain_oracle(l: u32) -> f64 {
    let n = 20_000;
    let h = std::f64::consts::FRAC_PI_2 / n as f64;
    let f = |theta: f64| {
        let d = Direction::from_spherical(theta, 0.0);
        theta.cos() * sh_eval(l, 0, &d).unwrap() * theta.sin()
    };
    let mut s = f(0.0) + f(std::f64::consts::FRAC_PI_2);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    let zonal = 2.0 * std::f64::consts::PI * s * h / 3.0;
    (4.0 * std::f64::consts::PI / (2 * l + 1) as f64).sqrt() * zonal
}

/// Direct irradiance integral in a frame rotated to put v̂ at the pole;
/// exact for band-limited lights.
fn irradiance_direct(light: &ShCoeffs, v: &Direction) -> f64 {
    let pick = if v.z().abs() < 0.9 {
        (0.0, 0.0, 1.0)
    } else {
        (1.0, 0.0, 0.0)
    };
    let t1 = Direction::new(
        pick.1 * v.z() - pick.2 * v.y(),
        pick.2 * v.x() - pick.0 * v.z(),
        pick.0 * v.y() - pick.1 * v.x(),
    )
    .unwrap();
    let t2 = Direction::new(
        v.y() * t1.z() - v.z() * t1.y(),
        v.z() * t1.x() - v.x() * t1.z(),
        v.x() * t1.y() - v.y() * t1.x(),
    )
    .unwrap();
    let n_ct = (light.order() as usize + 2) / 2 + 4;
    let n_phi = 2 * light.order() as usize + 4;
    let gl = gauss_legendre(n_ct);
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let mut acc = 0.0;
    for &(x, w) in &gl {
        let ct = 0.5 * (x + 1.0);
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        for j in 0..n_phi {
            let phi = (j as f64 + 0.5) * dphi;
            let u = Direction::new(
                st * phi.cos() * t1.x() + st * phi.sin() * t2.x() + ct * v.x(),
                st * phi.cos() * t1.y() + st * phi.sin() * t2.y() + ct * v.y(),
                st * phi.cos() * t1.z() + st * phi.sin() * t2.z() + ct * v.z(),
            )
            .unwrap();
            acc += 0.5 * w * dphi * light.synthesize(&u) * ct;
        }
    }
    acc
}

/// Runs the full identity suite. Deterministic.
pub fn run_all() -> Vec<CheckResult> {
    let mut results = Vec::new();
    let grid = SphereGrid::new(8).expect("grid");
    let kernel = lambertian_kernel(6, &grid).expect("kernel");

    // Basis anchors.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut dev = 0.0f64;
        for _ in 0..20 {
            let d = random_direction(&mut rng);
            dev = dev.max(
                (sh_eval(0, 0, &d).unwrap() - 0.5 / std::f64::consts::PI.sqrt()).abs(),
            );
        }
        results.push(CheckResult {
            name: "Y00 equals 1/(2*sqrt(pi)) everywhere",
            deviation: dev,
            tolerance: 1e-12,
        });
    }
    {
        let pole = Direction::new(0.0, 0.0, 1.0).unwrap();
        let dev = (sh_eval(1, 0, &pole).unwrap()
            - (3.0 / (4.0 * std::f64::consts::PI)).sqrt())
        .abs();
        results.push(CheckResult {
            name: "Y10 at the pole equals sqrt(3/(4*pi))",
            deviation: dev,
            tolerance: 1e-12,
        });
    }

    // Quadrature.
    {
        let total: f64 = grid.nodes().iter().map(|(_, w)| w).sum();
        results.push(CheckResult {
            name: "grid weights sum to 4*pi",
            deviation: (total - 4.0 * std::f64::consts::PI).abs(),
            tolerance: 1e-9,
        });
    }
    {
        let mut dev = 0.0f64;
        for l1 in 0..=4u32 {
            for m1 in -(l1 as i32)..=(l1 as i32) {
                for l2 in l1..=4u32 {
                    for m2 in -(l2 as i32)..=(l2 as i32) {
                        let dot = grid.integrate(|d| {
                            sh_eval(l1, m1, d).unwrap() * sh_eval(l2, m2, d).unwrap()
                        });
                        let expect = f64::from(l1 == l2 && m1 == m2);
                        dev = dev.max((dot - expect).abs());
                    }
                }
            }
        }
        results.push(CheckResult {
            name: "orthonormality up to degree 4 on the grid",
            deviation: dev,
            tolerance: 1e-9,
        });
    }

    // Transform round trip.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let truth = random_coeffs(4, &mut rng);
        let samples: Vec<f64> = grid.nodes().iter().map(|(d, _)| truth.synthesize(d)).collect();
        let back = sh_transform(&samples, 4, &grid).unwrap();
        let dev = truth
            .coeffs()
            .iter()
            .zip(back.coeffs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        results.push(CheckResult {
            name: "synthesize-transform round trip at order 4",
            deviation: dev,
            tolerance: 1e-9,
        });
    }

    // Kernel.
    {
        let dev = kernel.get(3).unwrap().abs().max(kernel.get(5).unwrap().abs());
        results.push(CheckResult {
            name: "odd kernel gains k3, k5 vanish",
            deviation: dev,
            tolerance: 1e-9,
        });
    }
    {
        let mut dev = 0.0f64;
        for l in [0u32, 2] {
            dev = dev.max((kernel.get(l).unwrap() - kernel_gain_oracle(l)).abs());
        }
        results.push(CheckResult {
            name: "k0, k2 match the 1-D Simpson oracle",
            deviation: dev,
            tolerance: 1e-9,
        });
    }

    // Funk–Hecke against the direct integral.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut dev = 0.0f64;
        for _ in 0..5 {
            let light = random_coeffs(6, &mut rng);
            let irr = funk_hecke_convolve(&light, &kernel).unwrap();
            for _ in 0..10 {
                let v = random_direction(&mut rng);
                let direct = irradiance_direct(&light, &v);
                let fh = irr.synthesize(&v);
                let denom = direct.abs().max(fh.abs()).max(1e-6);
                dev = dev.max((direct - fh).abs() / denom);
            }
        }
        results.push(CheckResult {
            name: "Funk-Hecke irradiance matches the direct integral (relative)",
            deviation: dev,
            tolerance: 1e-3,
        });
    }

    // Odd-light annihilation.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut light = ShCoeffs::zeros(5);
        for l in [3u32, 5] {
            for m in -(l as i32)..=(l as i32) {
                light.set(l, m, rng.random_range(-1.0..1.0)).unwrap();
            }
        }
        let irr = funk_hecke_convolve(&light, &kernel).unwrap();
        results.push(CheckResult {
            name: "odd-degree-only light maps to zero irradiance energy",
            deviation: irr.total_energy(),
            tolerance: 1e-12,
        });
    }

    // Product identity: the half-scale degree-1 zonal times cos2θ is
    // (cosθ + cos3θ)/4 coefficientwise (equivalently, the unit-scale product
    // is (cosθ + cos3θ)/2; the harmonic parts carry equal weight either way).
    {
        let four_pi = 4.0 * std::f64::consts::PI;
        let mut f = ShCoeffs::zeros(1);
        f.set(1, 0, 0.5 * (four_pi / 3.0).sqrt()).unwrap();
        let mut g = ShCoeffs::zeros(2);
        g.set(0, 0, -(2.0 / 3.0) * std::f64::consts::PI.sqrt()).unwrap();
        g.set(2, 0, (4.0 / 3.0) * (four_pi / 5.0).sqrt()).unwrap();
        let p = sh_product(&f, &g, 4, &grid).unwrap();
        let mut dev = 0.0f64;
        for l in 0..=4u32 {
            for m in -(l as i32)..=(l as i32) {
                let expect = match (l, m) {
                    (1, 0) => 0.1 * (four_pi / 3.0).sqrt(),
                    (3, 0) => 0.4 * (four_pi / 7.0).sqrt(),
                    _ => 0.0,
                };
                dev = dev.max((p.get(l, m).unwrap() - expect).abs());
            }
        }
        results.push(CheckResult {
            name: "degree-1 zonal x cos(2t) reproduces (cos(t)+cos(3t))/4",
            deviation: dev,
            tolerance: 1e-8,
        });
    }

    // Parseval.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let fine = SphereGrid::new(10).unwrap();
        let mut dev = 0.0f64;
        for _ in 0..3 {
            let c = random_coeffs(4, &mut rng);
            let quad = fine.integrate(|d| c.synthesize(d).powi(2));
            let energy = c.total_energy();
            dev = dev.max((quad - energy).abs() / energy.max(1e-12));
        }
        results.push(CheckResult {
            name: "Parseval identity on random coefficients (relative)",
            deviation: dev,
            tolerance: 1e-6,
        });
    }

    results
}
