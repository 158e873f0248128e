//! Model short-range branch for when no tabulated data is available:
//! Born-Mayer repulsion plus Tang-Toennies damped dispersion,
//! V(r) = A e^{−br} − Σₙ f₂ₙ(br) C₂ₙ / r²ⁿ, with A fixed by the requested well depth.

use serde::{Deserialize, Serialize};

use super::curve::{build_interaction, LongRange, PotentialCurve, ShortRangeTable, DEFAULT_JOIN_TOLERANCE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticShortRange {
    pub a: f64,
    pub b: f64,
    pub c6: f64,
    pub c8: f64,
    pub c10: f64,
}

/// Tang-Toennies damping function f_{2n}(x) = 1 − e^{−x} Σ_{k≤2n} x^k/k!.
pub fn tt_damping(n2: u32, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=n2 {
        term *= x / k as f64;
        sum += term;
    }
    1.0 - (-x).exp() * sum
}

impl SyntheticShortRange {
    pub fn value(&self, r: f64) -> f64 {
        let bx = self.b * r;
        let r2 = r * r;
        let r6 = r2 * r2 * r2;
        self.a * (-bx).exp()
            - tt_damping(6, bx) * self.c6 / r6
            - tt_damping(8, bx) * self.c8 / (r6 * r2)
            - tt_damping(10, bx) * self.c10 / (r6 * r2 * r2)
    }

    /// Location and value of the minimum on [2, 60] a₀.
    pub fn minimum(&self) -> (f64, f64) {
        let mut best = (0.0, f64::INFINITY);
        let mut r = 2.0;
        while r < 60.0 {
            let v = self.value(r);
            if v < best.1 {
                best = (r, v);
            }
            r += 0.01;
        }
        let (mut a, mut b) = (best.0 - 0.01, best.0 + 0.01);
        for _ in 0..100 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if self.value(m1) < self.value(m2) {
                b = m2;
            } else {
                a = m1;
            }
        }
        let x = 0.5 * (a + b);
        (x, self.value(x))
    }

    /// Chooses the repulsion amplitude so the well is `depth` hartree deep.
    pub fn with_depth(depth: f64, b: f64, c6: f64, c8: f64, c10: f64) -> Result<Self> {
        if !(depth > 0.0 && b > 0.0) {
            return Err(Error::domain("synthetic model needs positive depth and range parameter"));
        }
        let make = |ln_a: f64| Self { a: ln_a.exp(), b, c6, c8, c10 };
        // Larger A gives a shallower well.
        let (mut lo, mut hi) = (-10.0_f64, 30.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if -make(mid).minimum().1 > depth {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let model = make(0.5 * (lo + hi));
        if (-model.minimum().1 - depth).abs() > 1e-9 * depth {
            return Err(Error::domain(format!("cannot reach well depth {depth} with b = {b}")));
        }
        Ok(model)
    }

    /// Table on [r0, r1] with spacing `step`, on the D_e scale (asymptote `de`).
    pub fn table(&self, r0: f64, r1: f64, step: f64, de: f64) -> Result<ShortRangeTable> {
        let n = ((r1 - r0) / step).round() as usize;
        let r: Vec<f64> = (0..=n).map(|i| r0 + (r1 - r0) * i as f64 / n as f64).collect();
        let v = r.iter().map(|&x| self.value(x) + de).collect();
        ShortRangeTable::new(r, v)
    }
}

/// Parameters of the built-in Rb-K-like curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCurveSpec {
    /// Well depth, hartree.
    pub depth: f64,
    /// Born-Mayer range parameter, 1/a₀.
    pub b: f64,
    pub table_start: f64,
    pub table_step: f64,
    pub r_sr_end: f64,
    pub r_lr_start: f64,
}

impl Default for SyntheticCurveSpec {
    fn default() -> Self {
        Self { depth: 1.14e-3, b: 0.8, table_start: 1.5, table_step: 0.05, r_sr_end: 18.2, r_lr_start: 18.6 }
    }
}

/// Builds a full curve from the model short range and the Rb-K long-range tail.
pub fn synthetic_curve(spec: &SyntheticCurveSpec, lr: Option<LongRange>) -> Result<PotentialCurve> {
    let lr = lr.unwrap_or_else(|| LongRange::rbk(spec.depth));
    let model = SyntheticShortRange::with_depth(spec.depth, spec.b, lr.c6, lr.c8, lr.c10)?;
    let table = model.table(spec.table_start, spec.r_sr_end, spec.table_step, lr.de)?;
    build_interaction(table, lr, spec.r_sr_end, spec.r_lr_start, DEFAULT_JOIN_TOLERANCE)
}
