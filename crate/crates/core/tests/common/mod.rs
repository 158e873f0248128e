//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use sitepair::basis::{gauss_legendre, BSplineBasis};
use sitepair::quantities::{derive_pair_parameters, nm_to_bohr, AtomSpecies, PairParameters, TrapSpec};

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix (Sturm count).
fn sturm_count(diag: &[f64], off: f64, x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for (i, &d) in diag.iter().enumerate() {
        q = d - x - if i == 0 { 0.0 } else { off * off / q };
        if q == 0.0 {
            q = 1e-300;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// k-th (0-based) eigenvalue by bisection.
fn tridiagonal_eigenvalue(diag: &[f64], off: f64, k: usize) -> f64 {
    let bound = diag.iter().fold(0.0_f64, |m, d| m.max(d.abs())) + 2.0 * off.abs();
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(lo.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Lowest eigenvalues of −u''/(2m) + V u on (a, b), u(a) = u(b) = 0, with
/// `n` interior points and two Richardson steps (errors O(h⁶)).
pub fn fd_levels(v: impl Fn(f64) -> f64, m: f64, a: f64, b: f64, n: usize, count: usize) -> Vec<f64> {
    let level = |n: usize| -> Vec<f64> {
        let h = (b - a) / (n + 1) as f64;
        let t = 1.0 / (2.0 * m * h * h);
        let diag: Vec<f64> = (1..=n).map(|i| 2.0 * t + v(a + h * i as f64)).collect();
        (0..count).map(|k| tridiagonal_eigenvalue(&diag, -t, k)).collect()
    };
    // h, h/2, h/4 with h = (b − a)/(n + 1).
    let e1 = level(n);
    let e2 = level(2 * n + 1);
    let e4 = level(4 * n + 3);
    (0..count)
        .map(|k| {
            let r1 = (4.0 * e2[k] - e1[k]) / 3.0;
            let r2 = (4.0 * e4[k] - e2[k]) / 3.0;
            (16.0 * r2 - r1) / 15.0
        })
        .collect()
}

/// Points and weights for ∫ d³r: the basis radial rule times r², Gauss-Legendre
/// in cos θ and a uniform rule in φ.
pub fn sphere_grid(basis: &BSplineBasis, na: usize) -> Vec<([f64; 3], f64)> {
    let (ct, wt) = gauss_legendre(na);
    let nphi = 2 * na;
    let wphi = 2.0 * std::f64::consts::PI / nphi as f64;
    let q = basis.quadrature();
    let mut out = Vec::new();
    for (&r, &wi) in q.nodes.iter().zip(&q.weights) {
        for (c, wc) in ct.iter().zip(&wt) {
            let s = (1.0 - c * c).sqrt();
            for k in 0..nphi {
                let phi = wphi * (k as f64 + 0.5);
                out.push(([r * s * phi.cos(), r * s * phi.sin(), r * c], wi * r * r * wc * wphi));
            }
        }
    }
    out
}

/// ⁸⁷Rb-⁴⁰K with depths in units of the Rb recoil energy.
pub fn rbk(wavelength_nm: f64, depth_rb: f64, depth_k: f64, order: u32) -> (TrapSpec, PairParameters) {
    let rb = AtomSpecies::from_catalog("Rb87").unwrap();
    let k = AtomSpecies::from_catalog("K40").unwrap();
    let er = rb.recoil_energy(nm_to_bohr(wavelength_nm));
    let trap = TrapSpec::isotropic(wavelength_nm, depth_rb * er, depth_k * er, order).unwrap();
    let pair = derive_pair_parameters(&rb, &k, &trap).unwrap();
    (trap, pair)
}
