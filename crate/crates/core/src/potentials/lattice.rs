//! Taylor expansion of the sin² lattice site split into centre-of-mass,
//! relative and coupling monomials per Cartesian axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantities::{Axis, PairParameters, TrapSpec};

/// Coefficient of u^{2p} in the Taylor series of sin²u.
pub fn sin2_coefficient(p: u32) -> f64 {
    if p == 0 {
        return 0.0;
    }
    let sign = if p % 2 == 1 { 1.0 } else { -1.0 };
    let mut fact = 1.0;
    for k in 1..=(2 * p) {
        fact *= k as f64;
    }
    sign * 2f64.powi(2 * p as i32 - 1) / fact
}

/// Truncated Taylor series of sin²u through order `n`.
pub fn sin2_taylor(u: f64, n: u32) -> f64 {
    (1..=n / 2).map(|p| sin2_coefficient(p) * u.powi(2 * p as i32)).sum()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Checks that a Taylor order is one the pipeline supports.
pub fn check_order(n: u32) -> Result<()> {
    match n {
        2 | 6 => Ok(()),
        4 => Err(Error::UnsupportedOrder {
            order: 4,
            reason: "the quartic truncation is unbounded below and produces unphysical negative-energy continua",
        }),
        _ if n % 2 == 1 => Err(Error::UnsupportedOrder { order: n, reason: "Taylor order must be even" }),
        _ => Err(Error::UnsupportedOrder { order: n, reason: "only harmonic (2) and sextic (6) truncations are supported" }),
    }
}

/// Monomials of one axis: Σ w_a X^a + Σ w_b x^b + Σ w_ab X^a x^b.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AxisPolynomial {
    pub com: Vec<(u32, f64)>,
    pub rel: Vec<(u32, f64)>,
    pub coupling: Vec<(u32, u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatedLatticePolynomial {
    pub order: u32,
    pub axes: [AxisPolynomial; 3],
    pub wave_number: [f64; 3],
    pub depth: [[f64; 3]; 2],
    pub mu1: f64,
    pub mu2: f64,
}

pub fn separate_lattice(trap: &TrapSpec, pair: &PairParameters) -> Result<SeparatedLatticePolynomial> {
    check_order(trap.taylor_order)?;
    trap.validate()?;
    let n = trap.taylor_order;
    let shifts = [pair.mu2, -pair.mu1];
    let mut axes: [AxisPolynomial; 3] = Default::default();
    for axis in Axis::ALL {
        let c = axis.index();
        let k = trap.wave_number(axis);
        let poly = &mut axes[c];
        for p in 1..=n / 2 {
            let deg = 2 * p;
            let t = sin2_coefficient(p) * k.powi(deg as i32);
            for a in 0..=deg {
                let b = deg - a;
                let coef: f64 = (0..2)
                    .map(|j| trap.depth[j][c] * t * binomial(deg, a) * shifts[j].powi(b as i32))
                    .sum();
                if coef == 0.0 {
                    continue;
                }
                match (a, b) {
                    (_, 0) => poly.com.push((a, coef)),
                    (0, _) => poly.rel.push((b, coef)),
                    _ => poly.coupling.push((a, b, coef)),
                }
            }
        }
    }
    Ok(SeparatedLatticePolynomial {
        order: n,
        axes,
        wave_number: [trap.wave_number(Axis::X), trap.wave_number(Axis::Y), trap.wave_number(Axis::Z)],
        depth: trap.depth,
        mu1: pair.mu1,
        mu2: pair.mu2,
    })
}

impl SeparatedLatticePolynomial {
    pub fn axis(&self, axis: Axis) -> &AxisPolynomial {
        &self.axes[axis.index()]
    }

    pub fn com(&self, big_r: [f64; 3]) -> f64 {
        Axis::ALL
            .iter()
            .map(|&ax| self.axis(ax).com.iter().map(|(a, w)| w * big_r[ax.index()].powi(*a as i32)).sum::<f64>())
            .sum()
    }

    pub fn rel(&self, r: [f64; 3]) -> f64 {
        Axis::ALL
            .iter()
            .map(|&ax| self.axis(ax).rel.iter().map(|(b, w)| w * r[ax.index()].powi(*b as i32)).sum::<f64>())
            .sum()
    }

    pub fn coupling(&self, big_r: [f64; 3], r: [f64; 3]) -> f64 {
        Axis::ALL
            .iter()
            .map(|&ax| {
                let c = ax.index();
                self.axis(ax)
                    .coupling
                    .iter()
                    .map(|(a, b, w)| w * big_r[c].powi(*a as i32) * r[c].powi(*b as i32))
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn total(&self, big_r: [f64; 3], r: [f64; 3]) -> f64 {
        self.com(big_r) + self.rel(r) + self.coupling(big_r, r)
    }

    /// Σ_j Σ_c V_c^j Taylor_n(sin²(k_c c_j)) evaluated directly in absolute coordinates.
    pub fn direct(&self, big_r: [f64; 3], r: [f64; 3]) -> f64 {
        let mut v = 0.0;
        for c in 0..3 {
            let x1 = big_r[c] + self.mu2 * r[c];
            let x2 = big_r[c] - self.mu1 * r[c];
            v += self.depth[0][c] * sin2_taylor(self.wave_number[c] * x1, self.order);
            v += self.depth[1][c] * sin2_taylor(self.wave_number[c] * x2, self.order);
        }
        v
    }

    pub fn has_coupling(&self) -> bool {
        self.axes.iter().any(|a| !a.coupling.is_empty())
    }

    /// Highest COM or REL power present.
    pub fn max_power(&self) -> u32 {
        self.order
    }
}
