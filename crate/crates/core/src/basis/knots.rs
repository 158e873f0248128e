use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the breakpoints were laid out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KnotKind {
    Linear,
    Geometric,
    /// Linear up to `split`, geometric beyond.
    Composite { split: f64 },
    Custom,
}

/// Breakpoints plus spline order. The full knot vector repeats each endpoint
/// `order` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotSequence {
    breakpoints: Vec<f64>,
    order: usize,
    kind: KnotKind,
}

impl KnotSequence {
    pub fn from_breakpoints(breakpoints: Vec<f64>, order: usize) -> Result<Self> {
        Self::build(breakpoints, order, KnotKind::Custom)
    }

    fn build(breakpoints: Vec<f64>, order: usize, kind: KnotKind) -> Result<Self> {
        if order < 2 {
            return Err(Error::domain(format!("spline order must be at least 2, got {order}")));
        }
        if breakpoints.len() < 2 {
            return Err(Error::domain("knot sequence needs at least two breakpoints"));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::domain("non-finite breakpoint"));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("breakpoints must be strictly increasing"));
        }
        Ok(Self { breakpoints, order, kind })
    }

    /// `intervals` equal intervals on [r0, r1].
    pub fn linear(r0: f64, r1: f64, intervals: usize, order: usize) -> Result<Self> {
        if intervals == 0 || r1 <= r0 {
            return Err(Error::domain(format!("bad linear knot range [{r0}, {r1}] with {intervals} intervals")));
        }
        let h = (r1 - r0) / intervals as f64;
        let mut b: Vec<f64> = (0..=intervals).map(|i| r0 + h * i as f64).collect();
        b[intervals] = r1;
        Self::build(b, order, KnotKind::Linear)
    }

    /// `intervals` intervals on [r0, r1] whose widths grow geometrically from `first_width`.
    pub fn geometric(r0: f64, r1: f64, intervals: usize, first_width: f64, order: usize) -> Result<Self> {
        let b = geometric_points(r0, r1, intervals, first_width)?;
        Self::build(b, order, KnotKind::Geometric)
    }

    /// Linear on [0, split] and geometric on [split, r_max], the first geometric
    /// width matching the linear spacing.
    pub fn composite(split: f64, r_max: f64, linear_intervals: usize, geometric_intervals: usize, order: usize) -> Result<Self> {
        if !(split > 0.0 && split < r_max) {
            return Err(Error::domain(format!("composite split {split} must lie strictly inside (0, {r_max})")));
        }
        if linear_intervals == 0 || geometric_intervals == 0 {
            return Err(Error::domain("composite knot sequence needs intervals on both sides"));
        }
        let h = split / linear_intervals as f64;
        let mut b: Vec<f64> = (0..=linear_intervals).map(|i| h * i as f64).collect();
        b[linear_intervals] = split;
        let tail = geometric_points(split, r_max, geometric_intervals, h)?;
        b.extend_from_slice(&tail[1..]);
        Self::build(b, order, KnotKind::Composite { split })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn kind(&self) -> &KnotKind {
        &self.kind
    }

    pub fn start(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn intervals(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// Full knot vector with endpoint multiplicity equal to the order.
    pub fn knot_vector(&self) -> Vec<f64> {
        let k = self.order;
        let mut t = Vec::with_capacity(self.breakpoints.len() + 2 * (k - 1));
        t.extend(std::iter::repeat(self.start()).take(k - 1));
        t.extend_from_slice(&self.breakpoints);
        t.extend(std::iter::repeat(self.end()).take(k - 1));
        t
    }

    /// Number of B-splines on the full knot vector.
    pub fn spline_count(&self) -> usize {
        self.breakpoints.len() + self.order - 2
    }

    /// Inserts the midpoint of every interval.
    pub fn refined(&self) -> Self {
        let mut b = Vec::with_capacity(2 * self.breakpoints.len());
        for w in self.breakpoints.windows(2) {
            b.push(w[0]);
            b.push(0.5 * (w[0] + w[1]));
        }
        b.push(self.end());
        Self { breakpoints: b, order: self.order, kind: self.kind.clone() }
    }
}

fn geometric_points(r0: f64, r1: f64, n: usize, h: f64) -> Result<Vec<f64>> {
    if n == 0 || r1 <= r0 || !(h > 0.0) {
        return Err(Error::domain(format!("bad geometric knot range [{r0}, {r1}], {n} intervals, first width {h}")));
    }
    let len = r1 - r0;
    if h >= len {
        return Err(Error::domain("first geometric width exceeds the range"));
    }
    // total(q) = h (q^n - 1)/(q - 1) is increasing in q; bisect on ln q.
    let total = |q: f64| {
        if (q - 1.0).abs() < 1e-12 {
            h * n as f64
        } else {
            h * (q.powi(n as i32) - 1.0) / (q - 1.0)
        }
    };
    let (mut lo, mut hi) = (-20.0_f64, 20.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid.exp()) < len {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = (0.5 * (lo + hi)).exp();
    let mut pts = Vec::with_capacity(n + 1);
    let mut r = r0;
    let mut w = h;
    pts.push(r0);
    for _ in 0..n {
        r += w;
        w *= q;
        pts.push(r);
    }
    pts[n] = r1;
    Ok(pts)
}
