use serde::{Deserialize, Serialize};

use super::interp::{hermite, natural_spline_slopes, pchip_slopes, Hermite};
use crate::error::{Error, Result};

/// A central potential as seen by the radial solvers.
pub trait RadialPotential: Send + Sync {
    fn value(&self, r: f64) -> f64;

    /// Radius at which the zero-energy solution may start from u = 0.
    fn inner_radius(&self) -> f64;

    /// Radius beyond which the potential is a pure power-law tail (or zero).
    fn range(&self) -> f64;

    /// Radii where the potential jumps, ascending.
    fn discontinuities(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Tabulated short-range branch, radii in a₀ and energies in hartree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortRangeTable {
    pub r: Vec<f64>,
    pub v: Vec<f64>,
}

impl ShortRangeTable {
    pub fn new(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if r.len() != v.len() {
            return Err(Error::domain("short-range table: radius and value columns differ in length"));
        }
        if r.len() < 4 {
            return Err(Error::domain("short-range table needs at least four points"));
        }
        if r.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::domain("short-range table contains non-finite entries"));
        }
        if let Some(i) = r.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::domain(format!(
                "short-range table radii must be strictly increasing (r[{}] = {} >= r[{}] = {})",
                i,
                r[i],
                i + 1,
                r[i + 1]
            )));
        }
        Ok(Self { r, v })
    }

    pub fn r_min(&self) -> f64 {
        self.r[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }
}

/// Long-range form D_e − C₆/r⁶ − C₈/r⁸ − C₁₀/r¹⁰ − C r^α e^{−βr}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongRange {
    pub de: f64,
    pub c6: f64,
    pub c8: f64,
    pub c10: f64,
    pub ex_c: f64,
    pub ex_alpha: f64,
    pub ex_beta: f64,
}

impl LongRange {
    /// Rb-K triplet tail: C₆ and exchange constants as published, C₈ and C₁₀
    /// from combination-rule estimates.
    pub fn rbk(de: f64) -> Self {
        Self { de, c6: 4292.0, c8: 4.92e5, c10: 6.1e7, ex_c: 0.002_313_82, ex_alpha: 5.256_03, ex_beta: 1.118_92 }
    }

    pub fn dispersion(&self, r: f64) -> f64 {
        let r2 = r * r;
        let r6 = r2 * r2 * r2;
        -self.c6 / r6 - self.c8 / (r6 * r2) - self.c10 / (r6 * r2 * r2)
    }

    pub fn exchange(&self, r: f64) -> f64 {
        -self.ex_c * r.powf(self.ex_alpha) * (-self.ex_beta * r).exp()
    }

    /// Value on the D_e scale (asymptote D_e).
    pub fn value(&self, r: f64) -> f64 {
        self.de + self.dispersion(r) + self.exchange(r)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let disp = 6.0 * self.c6 / r.powi(7) + 8.0 * self.c8 / r.powi(9) + 10.0 * self.c10 / r.powi(11);
        let ex = self.exchange(r) * (self.ex_alpha / r - self.ex_beta);
        disp + ex
    }
}

/// Radially windowed displacement of the repulsive wall: r ↦ r − s·w(r)
/// with w = 1 below `r_a` and a quintic smoothstep down to 0 at `r_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallShift {
    pub s: f64,
    pub r_a: f64,
    pub r_b: f64,
}

impl WallShift {
    pub fn weight(&self, r: f64) -> f64 {
        if r <= self.r_a {
            1.0
        } else if r >= self.r_b {
            0.0
        } else {
            let t = (r - self.r_a) / (self.r_b - self.r_a);
            1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
        }
    }

    /// Largest |s| keeping r − s·w(r) strictly increasing.
    pub fn max_shift(r_a: f64, r_b: f64) -> f64 {
        (r_b - r_a) / 1.875
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Bridge {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    d0: f64,
    d1: f64,
}

/// Merged interaction curve, referenced to its dissociation threshold
/// (V → 0 as r → ∞).
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialCurve {
    table: ShortRangeTable,
    interp: Hermite,
    lr: LongRange,
    r_sr_end: f64,
    r_lr_start: f64,
    merge_offset: f64,
    bridge: Option<Bridge>,
    /// Exponential continuation below the table: v0·exp(−b (r − r0)).
    extrap: (f64, f64, f64),
    shift: Option<WallShift>,
    r_min_pot: f64,
    v_min: f64,
    r_turn: f64,
}

/// Largest allowed jump at a join without a bridge region, hartree.
pub const DEFAULT_JOIN_TOLERANCE: f64 = 1e-9;

/// Merges the tabulated short-range branch with the analytic long-range form.
///
/// The short-range branch is offset by −δ/2 with δ = V_SR(r_SR_end) − V_LR(r_LR_start),
/// closing half of the gap; the remaining gap is bridged by a cubic Hermite
/// segment on [r_SR_end, r_LR_start].
pub fn build_interaction(
    table: ShortRangeTable,
    lr: LongRange,
    r_sr_end: f64,
    r_lr_start: f64,
    join_tolerance: f64,
) -> Result<PotentialCurve> {
    if !(r_sr_end > table.r_min() && r_sr_end <= table.r_max() * (1.0 + 1e-12)) {
        return Err(Error::domain(format!(
            "r_SR_end = {r_sr_end} must lie inside the table range [{}, {}]",
            table.r_min(),
            table.r_max()
        )));
    }
    if r_lr_start < r_sr_end {
        return Err(Error::domain(format!("join radii inverted: r_LR_start = {r_lr_start} < r_SR_end = {r_sr_end}")));
    }
    for (name, v) in [("D_e", lr.de), ("C6", lr.c6), ("C8", lr.c8), ("C10", lr.c10)] {
        if !v.is_finite() {
            return Err(Error::domain(format!("long-range parameter {name} is not finite")));
        }
    }

    // Slopes: monotone in the wall up to the table minimum, natural spline elsewhere.
    let i_min = table
        .v
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let mut d = natural_spline_slopes(&table.r, &table.v);
    if i_min >= 1 {
        let p = pchip_slopes(&table.r[..=i_min], &table.v[..=i_min]);
        d[..=i_min].copy_from_slice(&p);
    }
    let raw = Hermite { x: table.r.clone(), y: table.v.clone(), d };

    let delta = raw.value(r_sr_end) - lr.value(r_lr_start);
    let merge_offset = -0.5 * delta;
    if r_lr_start == r_sr_end && (0.5 * delta).abs() > join_tolerance {
        return Err(Error::domain(format!(
            "discontinuity {:.3e} hartree at the join exceeds tolerance {join_tolerance:.1e}; separate the join radii",
            0.5 * delta.abs()
        )));
    }
    let shift = merge_offset - lr.de;
    let interp = Hermite { x: raw.x.clone(), y: raw.y.iter().map(|v| v + shift).collect(), d: raw.d.clone() };

    let bridge = (r_lr_start > r_sr_end).then(|| Bridge {
        x0: r_sr_end,
        x1: r_lr_start,
        y0: interp.value(r_sr_end),
        y1: lr.value(r_lr_start) - lr.de,
        d0: interp.derivative(r_sr_end),
        d1: lr.derivative(r_lr_start),
    });

    let r0 = table.r[0];
    let v0 = interp.y[0];
    let d0 = interp.d[0];
    let b = if v0 > 0.0 && d0 < 0.0 { -d0 / v0 } else { f64::NAN };

    let mut curve = PotentialCurve {
        table,
        interp,
        lr,
        r_sr_end,
        r_lr_start,
        merge_offset,
        bridge,
        extrap: (r0, v0, b),
        shift: None,
        r_min_pot: f64::NAN,
        v_min: f64::NAN,
        r_turn: f64::NAN,
    };
    curve.locate_features()?;
    Ok(curve)
}

impl PotentialCurve {
    fn base_value(&self, r: f64) -> f64 {
        let (r0, v0, b) = self.extrap;
        if r < r0 {
            if b.is_finite() {
                v0 * (-b * (r - r0)).exp()
            } else {
                v0 + self.interp.d[0] * (r - r0)
            }
        } else if r <= self.r_sr_end {
            self.interp.value(r)
        } else if let (Some(br), true) = (&self.bridge, r < self.r_lr_start) {
            hermite(br.x0, br.x1, br.y0, br.y1, br.d0, br.d1, r).0
        } else {
            self.lr.dispersion(r) + self.lr.exchange(r)
        }
    }

    fn locate_features(&mut self) -> Result<()> {
        // Minimum: best table node, then golden-section refinement on neighbouring intervals.
        let (mut best_r, mut best_v) = (self.table.r[0], f64::INFINITY);
        for &r in &self.table.r {
            let v = self.base_value(r);
            if v < best_v {
                best_v = v;
                best_r = r;
            }
        }
        let i = self.table.r.iter().position(|&r| r == best_r).unwrap();
        let lo = self.table.r[i.saturating_sub(1)];
        let hi = if i + 1 < self.table.r.len() { self.table.r[i + 1] } else { self.r_lr_start.max(best_r + 1.0) };
        let (rm, vm) = golden_min(|r| self.base_value(r), lo, hi);
        if vm >= 0.0 {
            return Err(Error::domain("interaction curve has no attractive well"));
        }
        self.r_min_pot = rm;
        self.v_min = vm;
        // Inner zero crossing of the wall.
        let (mut a, mut b) = (self.table.r[0], rm);
        if self.base_value(a) <= 0.0 {
            return Err(Error::domain("short-range table does not start inside the repulsive wall"));
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if self.base_value(m) > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        self.r_turn = 0.5 * (a + b);
        Ok(())
    }

    /// Radius of the potential minimum.
    pub fn r_e(&self) -> f64 {
        self.r_min_pot
    }

    /// Well depth below threshold (positive).
    pub fn depth(&self) -> f64 {
        -self.v_min
    }

    /// Zero-energy classical turning point on the inner wall.
    pub fn inner_turning_point(&self) -> f64 {
        self.r_turn
    }

    pub fn merge_offset(&self) -> f64 {
        self.merge_offset
    }

    pub fn long_range(&self) -> &LongRange {
        &self.lr
    }

    pub fn table(&self) -> &ShortRangeTable {
        &self.table
    }

    pub fn join_radii(&self) -> (f64, f64) {
        (self.r_sr_end, self.r_lr_start)
    }

    pub fn wall_shift(&self) -> Option<WallShift> {
        self.shift
    }

    /// Shift parameter s currently applied (0 when unshifted).
    pub fn shift(&self) -> f64 {
        self.shift.map_or(0.0, |w| w.s)
    }

    /// Default shift window: full displacement inside the zero-energy turning
    /// point, tapering to zero at the potential minimum.
    pub fn default_window(&self) -> (f64, f64) {
        (self.r_turn, self.r_min_pot)
    }

    /// Curve with the repulsive wall displaced by `s` a₀ (s > 0 pushes it outward).
    /// The shift replaces any previous one.
    pub fn shift_inner_wall(&self, s: f64) -> Result<PotentialCurve> {
        let (a, b) = self.default_window();
        self.shift_inner_wall_window(s, a, b)
    }

    pub fn shift_inner_wall_window(&self, s: f64, r_a: f64, r_b: f64) -> Result<PotentialCurve> {
        if !s.is_finite() {
            return Err(Error::domain("wall shift must be finite"));
        }
        if !(r_a < r_b) || r_b > self.r_min_pot * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "shift window [{r_a}, {r_b}] must be non-empty and end at or before the minimum r_e = {}",
                self.r_min_pot
            )));
        }
        let limit = WallShift::max_shift(r_a, r_b);
        if s.abs() >= limit {
            return Err(Error::domain(format!(
                "|s| = {} a0 would fold the wall (limit {limit:.4} a0 for window [{r_a:.3}, {r_b:.3}])",
                s.abs()
            )));
        }
        let mut out = self.clone();
        out.shift = (s != 0.0).then_some(WallShift { s, r_a, r_b });
        Ok(out)
    }

    /// Radius where the wall reaches `factor` times the well depth; used as
    /// the start of outward integrations.
    pub fn wall_radius(&self, factor: f64) -> f64 {
        let target = factor * self.depth();
        let (mut a, mut b) = (1e-3, self.r_turn + self.shift().max(0.0));
        if self.value(a) < target {
            return a;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if self.value(m) > target {
                a = m;
            } else {
                b = m;
            }
        }
        a
    }

    /// Samples (r, V) on a uniform grid for inspection.
    pub fn sample(&self, r0: f64, r1: f64, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let r = r0 + (r1 - r0) * i as f64 / (n.max(2) - 1) as f64;
                (r, self.value(r))
            })
            .collect()
    }
}

impl RadialPotential for PotentialCurve {
    fn value(&self, r: f64) -> f64 {
        match self.shift {
            Some(w) if r < w.r_b => self.base_value(r - w.s * w.weight(r)),
            _ => self.base_value(r),
        }
    }

    fn inner_radius(&self) -> f64 {
        self.wall_radius(50.0)
    }

    fn range(&self) -> f64 {
        self.r_lr_start
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-12 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Attractive square well of depth `depth` and range `radius`.
#[derive(Debug, Clone, Copy)]
pub struct SquareWell {
    pub depth: f64,
    pub radius: f64,
}

impl RadialPotential for SquareWell {
    fn value(&self, r: f64) -> f64 {
        if r < self.radius {
            -self.depth
        } else {
            0.0
        }
    }
    fn inner_radius(&self) -> f64 {
        0.0
    }
    fn range(&self) -> f64 {
        self.radius
    }
    fn discontinuities(&self) -> Vec<f64> {
        vec![self.radius]
    }
}

/// Impenetrable sphere of radius `radius`.
#[derive(Debug, Clone, Copy)]
pub struct HardSphere {
    pub radius: f64,
}

impl RadialPotential for HardSphere {
    fn value(&self, _r: f64) -> f64 {
        0.0
    }
    fn inner_radius(&self) -> f64 {
        self.radius
    }
    fn range(&self) -> f64 {
        self.radius
    }
}

/// V ≡ 0.
#[derive(Debug, Clone, Copy)]
pub struct NoInteraction;

impl RadialPotential for NoInteraction {
    fn value(&self, _r: f64) -> f64 {
        0.0
    }
    fn inner_radius(&self) -> f64 {
        0.0
    }
    fn range(&self) -> f64 {
        0.0
    }
}
