//! Spherical-harmonic algebra: Gaunt coefficients, real harmonics and the
//! expansion of single-axis monomials (n_c)^q into harmonics.
//!
//! Real harmonics carry no Condon-Shortley phase:
//! Y_{l,m>0} ∝ √2 P_l^m cos mφ, Y_{l,0} ∝ P_l, Y_{l,m<0} ∝ √2 P_l^|m| sin |m|φ.

use std::f64::consts::PI;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::basis::gauss_legendre;
use crate::error::{Error, Result};
use crate::quantities::Axis;

/// Largest monomial power supported (sextic lattice).
pub const MAX_POWER: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AngularChannel {
    pub l: u32,
    pub m: i32,
}

impl AngularChannel {
    pub fn new(l: u32, m: i32) -> Result<Self> {
        if m.unsigned_abs() > l {
            return Err(Error::domain(format!("|m| = {} exceeds l = {l}", m.abs())));
        }
        Ok(Self { l, m })
    }

    /// Parity under reflection of each Cartesian axis: bit c set when odd.
    pub fn parity_class(self) -> u8 {
        let am = self.m.unsigned_abs();
        let x_odd = if self.m >= 0 { am % 2 == 1 } else { am % 2 == 0 };
        let y_odd = self.m < 0;
        let z_odd = (self.l + am) % 2 == 1;
        (x_odd as u8) | ((y_odd as u8) << 1) | ((z_odd as u8) << 2)
    }
}

impl std::fmt::Display for AngularChannel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.l, self.m)
    }
}

/// All channels with l ≤ l_max, ordered by l then m.
pub fn channels(l_max: u32) -> Vec<AngularChannel> {
    (0..=l_max)
        .flat_map(|l| (-(l as i32)..=l as i32).map(move |m| AngularChannel { l, m }))
        .collect()
}

fn factorial(n: i64) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Wigner 3j symbol from the Racah formula.
pub fn wigner_3j(j1: i64, j2: i64, j3: i64, m1: i64, m2: i64, m3: i64) -> f64 {
    if m1 + m2 + m3 != 0 || m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
        return 0.0;
    }
    if j3 < (j1 - j2).abs() || j3 > j1 + j2 {
        return 0.0;
    }
    let tri = factorial(j1 + j2 - j3) * factorial(j1 - j2 + j3) * factorial(-j1 + j2 + j3) / factorial(j1 + j2 + j3 + 1);
    let pre = (tri
        * factorial(j1 + m1)
        * factorial(j1 - m1)
        * factorial(j2 + m2)
        * factorial(j2 - m2)
        * factorial(j3 + m3)
        * factorial(j3 - m3))
        .sqrt();
    let kmin = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let kmax = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let mut sum = 0.0;
    for k in kmin..=kmax {
        let den = factorial(k)
            * factorial(j1 + j2 - j3 - k)
            * factorial(j1 - m1 - k)
            * factorial(j2 + m2 - k)
            * factorial(j3 - j2 + m1 + k)
            * factorial(j3 - j1 - m2 + k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / den;
    }
    let phase = if (j1 - j2 - m3).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * pre * sum
}

/// ∫ Y*_{l1 m1} Y_{l2 m2} Y_{l3 m3} dΩ for complex harmonics (Condon-Shortley phase).
pub fn gaunt(l1: u32, m1: i32, l2: u32, m2: i32, l3: u32, m3: i32) -> f64 {
    let (l1, l2, l3) = (l1 as i64, l2 as i64, l3 as i64);
    let (m1, m2, m3) = (m1 as i64, m2 as i64, m3 as i64);
    if m1 != m2 + m3 || (l1 + l2 + l3) % 2 != 0 {
        return 0.0;
    }
    let pre = ((2 * l1 + 1) as f64 * (2 * l2 + 1) as f64 * (2 * l3 + 1) as f64 / (4.0 * PI)).sqrt();
    let phase = if m1 % 2 == 0 { 1.0 } else { -1.0 };
    phase * pre * wigner_3j(l1, l2, l3, 0, 0, 0) * wigner_3j(l1, l2, l3, -m1, m2, m3)
}

/// Associated Legendre P_l^m(x), m ≥ 0, without the Condon-Shortley phase.
pub fn assoc_legendre(l: u32, m: u32, x: f64) -> f64 {
    if m > l {
        return 0.0;
    }
    let s = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    let mut pmm = 1.0;
    for i in 1..=m {
        pmm *= (2 * i - 1) as f64 * s;
    }
    if l == m {
        return pmm;
    }
    let mut pm1 = x * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return pm1;
    }
    let mut pll = 0.0;
    for ll in (m + 2)..=l {
        pll = ((2 * ll - 1) as f64 * x * pm1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
        pmm = pm1;
        pm1 = pll;
    }
    pll
}

fn norm(l: u32, am: u32) -> f64 {
    let ratio = factorial((l - am) as i64) / factorial((l + am) as i64);
    ((2 * l + 1) as f64 / (4.0 * PI) * ratio).sqrt()
}

/// Real spherical harmonic at (cos θ, φ).
pub fn real_ylm(ch: AngularChannel, cos_theta: f64, phi: f64) -> f64 {
    let am = ch.m.unsigned_abs();
    let p = norm(ch.l, am) * assoc_legendre(ch.l, am, cos_theta);
    match ch.m.cmp(&0) {
        std::cmp::Ordering::Equal => p,
        std::cmp::Ordering::Greater => std::f64::consts::SQRT_2 * p * (am as f64 * phi).cos(),
        std::cmp::Ordering::Less => std::f64::consts::SQRT_2 * p * (am as f64 * phi).sin(),
    }
}

/// Real harmonic at a unit direction.
pub fn real_ylm_dir(ch: AngularChannel, dir: [f64; 3]) -> f64 {
    let ct = dir[2].clamp(-1.0, 1.0);
    let phi = dir[1].atan2(dir[0]);
    real_ylm(ch, ct, phi)
}

/// Product grid on the sphere that integrates band-limited functions exactly.
struct SphereGrid {
    cos_theta: Vec<f64>,
    w_theta: Vec<f64>,
    phi: Vec<f64>,
    w_phi: f64,
}

impl SphereGrid {
    /// Exact for products whose total degree does not exceed `degree`.
    fn new(degree: u32) -> Self {
        let n_theta = (degree as usize + 2) / 2 + 1;
        let n_phi = degree as usize + 2;
        let (x, w) = gauss_legendre(n_theta);
        let phi = (0..n_phi).map(|k| 2.0 * PI * (k as f64 + 0.5) / n_phi as f64).collect();
        Self { cos_theta: x, w_theta: w, phi, w_phi: 2.0 * PI / n_phi as f64 }
    }

    fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let mut s = 0.0;
        for (ct, wt) in self.cos_theta.iter().zip(&self.w_theta) {
            for p in &self.phi {
                s += wt * self.w_phi * f(*ct, *p);
            }
        }
        s
    }
}

fn direction_component(axis: Axis, ct: f64, phi: f64) -> f64 {
    let st = ((1.0 - ct) * (1.0 + ct)).max(0.0).sqrt();
    match axis {
        Axis::X => st * phi.cos(),
        Axis::Y => st * phi.sin(),
        Axis::Z => ct,
    }
}

/// ∫ Y_a Y_b Y_c dΩ for real harmonics.
pub fn real_gaunt(a: AngularChannel, b: AngularChannel, c: AngularChannel) -> f64 {
    let grid = SphereGrid::new(a.l + b.l + c.l);
    grid.integrate(|ct, p| real_ylm(a, ct, p) * real_ylm(b, ct, p) * real_ylm(c, ct, p))
}

/// (axis/r)^q = Σ c_{lm} Y_{lm} with real harmonics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialExpansion {
    pub axis: Axis,
    pub power: u32,
    pub terms: Vec<(AngularChannel, f64)>,
}

impl MonomialExpansion {
    pub fn eval(&self, dir: [f64; 3]) -> f64 {
        self.terms.iter().map(|(ch, c)| c * real_ylm_dir(*ch, dir)).sum()
    }
}

pub fn expand_monomial(axis: Axis, q: u32) -> Result<MonomialExpansion> {
    if q > MAX_POWER {
        return Err(Error::AngularDegree { degree: q, max: MAX_POWER });
    }
    let grid = SphereGrid::new(2 * q);
    let mut terms = Vec::new();
    for ch in channels(q) {
        if (ch.l + q) % 2 != 0 {
            continue;
        }
        let c = grid.integrate(|ct, p| direction_component(axis, ct, p).powi(q as i32) * real_ylm(ch, ct, p));
        if c.abs() > 1e-13 {
            terms.push((ch, c));
        }
    }
    Ok(MonomialExpansion { axis, power: q, terms })
}

/// Angular matrices ⟨Y_a| (n_c)^q |Y_b⟩ for all channels up to `l_max`, every
/// axis and powers 0..=max_power, assembled from Gaunt contractions of the
/// monomial expansions.
#[derive(Debug, Clone)]
pub struct AngularTables {
    pub l_max: u32,
    pub max_power: u32,
    pub channels: Vec<AngularChannel>,
    /// Indexed [axis][q].
    tables: Vec<Vec<Mat<f64>>>,
}

impl AngularTables {
    pub fn new(l_max: u32, max_power: u32) -> Result<Self> {
        if max_power > MAX_POWER {
            return Err(Error::AngularDegree { degree: max_power, max: MAX_POWER });
        }
        let chs = channels(l_max);
        let n = chs.len();
        let mut tables = Vec::with_capacity(3);
        for axis in Axis::ALL {
            let mut per_q = Vec::with_capacity(max_power as usize + 1);
            for q in 0..=max_power {
                let exp = expand_monomial(axis, q)?;
                let mut m = Mat::<f64>::zeros(n, n);
                for i in 0..n {
                    for j in 0..=i {
                        let v: f64 = exp.terms.iter().map(|(lm, c)| c * real_gaunt(chs[i], *lm, chs[j])).sum();
                        let v = if v.abs() < 1e-14 { 0.0 } else { v };
                        m[(i, j)] = v;
                        m[(j, i)] = v;
                    }
                }
                per_q.push(m);
            }
            tables.push(per_q);
        }
        Ok(Self { l_max, max_power, channels: chs, tables })
    }

    pub fn get(&self, axis: Axis, q: u32) -> Result<&Mat<f64>> {
        if q > self.max_power {
            return Err(Error::AngularDegree { degree: q, max: self.max_power });
        }
        Ok(&self.tables[axis.index()][q as usize])
    }

    pub fn index_of(&self, ch: AngularChannel) -> Option<usize> {
        self.channels.iter().position(|c| *c == ch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_angular(a: AngularChannel, axis: Axis, q: u32, b: AngularChannel) -> f64 {
        SphereGrid::new(a.l + b.l + q)
            .integrate(|ct, p| real_ylm(a, ct, p) * direction_component(axis, ct, p).powi(q as i32) * real_ylm(b, ct, p))
    }

    #[test]
    fn gaunt_constant() {
        assert!((gaunt(0, 0, 0, 0, 0, 0) - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gaunt_selection_rules() {
        assert_eq!(gaunt(1, 0, 1, 1, 1, -1), 0.0);
        assert_eq!(gaunt(0, 0, 1, 0, 3, 0), 0.0);
        assert_eq!(gaunt(2, 1, 1, 0, 1, 0), 0.0);
    }

    #[test]
    fn gaunt_matches_sphere_quadrature() {
        // All m = 0, so complex and real harmonics coincide.
        let z = |l| AngularChannel { l, m: 0 };
        let q = real_gaunt(z(2), z(1), z(1));
        assert!((gaunt(2, 0, 1, 0, 1, 0) - q).abs() < 1e-12);
        assert!((gaunt(2, 0, 1, 0, 1, 0) - 1.0 / (5.0 * PI).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn real_harmonics_are_orthonormal() {
        let chs = channels(4);
        let grid = SphereGrid::new(8);
        for a in &chs {
            for b in &chs {
                let v = grid.integrate(|ct, p| real_ylm(*a, ct, p) * real_ylm(*b, ct, p));
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((v - e).abs() < 1e-13, "{a} {b}: {v}");
            }
        }
    }

    #[test]
    fn monomial_constant_and_z_square() {
        let e = expand_monomial(Axis::Z, 0).unwrap();
        assert_eq!(e.terms.len(), 1);
        assert!((e.terms[0].1 - (4.0 * PI).sqrt()).abs() < 1e-13);
        let z2 = expand_monomial(Axis::Z, 2).unwrap();
        let c00 = z2.terms.iter().find(|(c, _)| c.l == 0).unwrap().1;
        let c20 = z2.terms.iter().find(|(c, _)| c.l == 2).unwrap().1;
        assert!((c00 - (4.0 * PI).sqrt() / 3.0).abs() < 1e-13);
        assert!((c20 - 4.0 * (PI / 5.0).sqrt() / 3.0).abs() < 1e-13);
        assert!(z2.terms.iter().all(|(c, _)| c.m == 0));
    }

    #[test]
    fn x_linear_is_pure_l1() {
        let e = expand_monomial(Axis::X, 1).unwrap();
        assert!(e.terms.iter().all(|(c, _)| c.l == 1 && c.m == 1));
        // Deterministic pseudo-random directions.
        let mut s = 12345u64;
        let mut rnd = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let ct = 2.0 * rnd() - 1.0;
            let phi = 2.0 * PI * rnd();
            let st = (1.0 - ct * ct).sqrt();
            let dir = [st * phi.cos(), st * phi.sin(), ct];
            assert!((e.eval(dir) - dir[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn parity_and_completeness() {
        for axis in Axis::ALL {
            for q in 0..=6 {
                let e = expand_monomial(axis, q).unwrap();
                assert!(e.terms.iter().all(|(c, _)| (c.l + q) % 2 == 0));
            }
        }
        let mut sum = std::collections::BTreeMap::new();
        for axis in Axis::ALL {
            for (c, v) in expand_monomial(axis, 2).unwrap().terms {
                *sum.entry(c).or_insert(0.0) += v;
            }
        }
        for (c, v) in sum {
            let e = if c.l == 0 { (4.0 * PI).sqrt() } else { 0.0 };
            assert!((v - e).abs() < 1e-13, "{c}: {v}");
        }
    }

    #[test]
    fn too_high_power_rejected() {
        assert!(matches!(expand_monomial(Axis::X, 7), Err(Error::AngularDegree { .. })));
    }

    #[test]
    fn tables_match_direct_quadrature() {
        let t = AngularTables::new(3, 6).unwrap();
        for axis in Axis::ALL {
            for q in [1, 2, 4, 6] {
                let m = t.get(axis, q).unwrap();
                for (i, a) in t.channels.iter().enumerate() {
                    for (j, b) in t.channels.iter().enumerate() {
                        let d = direct_angular(*a, axis, q, *b);
                        assert!((m[(i, j)] - d).abs() < 1e-12, "{axis:?} q={q} {a} {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn parity_class_matches_reflections() {
        for ch in channels(4) {
            let class = ch.parity_class();
            let dir = [0.3, 0.5, 0.81_f64];
            let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
            let d = [dir[0] / n, dir[1] / n, dir[2] / n];
            let v = real_ylm_dir(ch, d);
            for c in 0..3 {
                let mut r = d;
                r[c] = -r[c];
                let sign = if class >> c & 1 == 1 { -1.0 } else { 1.0 };
                assert!((real_ylm_dir(ch, r) - sign * v).abs() < 1e-12, "{ch} axis {c}");
            }
        }
    }

    #[test]
    fn gaunt_exchange_symmetry() {
        for (l2, m2, l3, m3) in [(1, 1, 2, -1), (2, 2, 3, -1), (1, 0, 3, 2)] {
            for l1 in 0..=5u32 {
                for m1 in -(l1 as i32)..=l1 as i32 {
                    assert!((gaunt(l1, m1, l2, m2, l3, m3) - gaunt(l1, m1, l3, m3, l2, m2)).abs() < 1e-14);
                }
            }
        }
    }
}
