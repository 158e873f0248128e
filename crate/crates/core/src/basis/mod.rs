//! B-spline radial bases with cached Gauss-Legendre quadrature.
//!
//! Radial functions are represented in reduced form u(r) = r R(r) = Σ cᵢ Bᵢ(r),
//! so every matrix here is ∫ Bᵢ(r) w(r) Bⱼ(r) dr. The first and last spline are
//! dropped to impose u = 0 at both ends of the domain.

mod banded;
mod knots;
mod quadrature;

pub use banded::{BandedCholesky, SymBanded};
pub use knots::{KnotKind, KnotSequence};
pub use quadrature::{gauss_legendre, QuadratureRule};

use crate::error::{Error, Result};

/// Retained splines of a knot sequence together with cached values at the
/// quadrature nodes.
#[derive(Debug, Clone)]
pub struct BSplineBasis {
    knots: KnotSequence,
    t: Vec<f64>,
    order: usize,
    quad: QuadratureRule,
    /// Full index of the first non-zero spline at each node.
    first: Vec<usize>,
    vals: Vec<f64>,
    ders: Vec<f64>,
}

impl BSplineBasis {
    /// Basis with the default quadrature of `order + 4` points per interval.
    pub fn new(knots: KnotSequence) -> Result<Self> {
        let pts = knots.order() + 4;
        Self::with_quadrature(knots, pts)
    }

    pub fn with_quadrature(knots: KnotSequence, points_per_interval: usize) -> Result<Self> {
        let order = knots.order();
        if knots.spline_count() < 3 {
            return Err(Error::domain("knot sequence too short to retain any spline"));
        }
        let t = knots.knot_vector();
        let quad = QuadratureRule::new(knots.breakpoints(), points_per_interval);
        let mut basis = Self { knots, t, order, quad, first: vec![], vals: vec![], ders: vec![] };
        let n = basis.quad.nodes.len();
        let mut first = Vec::with_capacity(n);
        let mut vals = Vec::with_capacity(n * order);
        let mut ders = Vec::with_capacity(n * order);
        let nodes = basis.quad.nodes.clone();
        for (q, &r) in nodes.iter().enumerate() {
            // Nodes are interior to their interval, so the span is known.
            let span = order - 1 + q / points_per_interval;
            let d = basis.ders_basis_funs(span, r, 1);
            first.push(span + 1 - order);
            vals.extend_from_slice(&d[0]);
            ders.extend_from_slice(&d[1]);
        }
        basis.first = first;
        basis.vals = vals;
        basis.ders = ders;
        Ok(basis)
    }

    pub fn knots(&self) -> &KnotSequence {
        &self.knots
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of retained splines.
    pub fn len(&self) -> usize {
        self.full_count() - 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn full_count(&self) -> usize {
        self.knots.spline_count()
    }

    pub fn r_min(&self) -> f64 {
        self.knots.start()
    }

    pub fn r_max(&self) -> f64 {
        self.knots.end()
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    fn find_span(&self, x: f64) -> usize {
        let n = self.full_count();
        if x >= self.t[n] {
            return n - 1;
        }
        // Largest s in [order-1, n-1] with t[s] <= x.
        let (mut lo, mut hi) = (self.order - 1, n);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.t[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Values and derivatives up to `nd` of the `order` splines that are non-zero on `span`.
    fn ders_basis_funs(&self, span: usize, x: f64, nd: usize) -> Vec<Vec<f64>> {
        let p = self.order - 1;
        let t = &self.t;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let mut out = vec![vec![0.0; p + 1]; nd + 1];
        for j in 0..=p {
            out[0][j] = ndu[j][p];
        }
        let mut a = vec![vec![0.0; p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=nd.min(p) {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if (r as isize - 1) <= pk as isize { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                out[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut f = p as f64;
        for k in 1..=nd.min(p) {
            for v in out[k].iter_mut() {
                *v *= f;
            }
            f *= (p - k) as f64;
        }
        out
    }

    fn check_domain(&self, r: f64) -> Result<()> {
        if !(r >= self.r_min() && r <= self.r_max()) {
            return Err(Error::domain(format!(
                "r = {r} outside basis domain [{}, {}]",
                self.r_min(),
                self.r_max()
            )));
        }
        Ok(())
    }

    /// d-th derivative (d ≤ 2) of spline `index` of the full set, boundary splines included.
    pub fn evaluate_full(&self, index: usize, r: f64, d: usize) -> Result<f64> {
        self.check_domain(r)?;
        if d > 2 {
            return Err(Error::domain(format!("derivative order {d} not supported")));
        }
        let span = self.find_span(r);
        let first = span + 1 - self.order;
        if index < first || index > span {
            return Ok(0.0);
        }
        let ders = self.ders_basis_funs(span, r, d);
        Ok(ders[d][index - first])
    }

    /// d-th derivative of retained spline `index`.
    pub fn evaluate(&self, index: usize, r: f64, d: usize) -> Result<f64> {
        if index >= self.len() {
            return Err(Error::domain(format!("spline index {index} out of range ({} retained)", self.len())));
        }
        self.evaluate_full(index + 1, r, d)
    }

    /// Retained-index offset and values of the splines non-zero at r.
    /// The offset may be -1 when the first full spline (dropped) is among them.
    pub fn nonzero(&self, r: f64, d: usize) -> Result<(isize, Vec<f64>)> {
        self.check_domain(r)?;
        let span = self.find_span(r);
        let ders = self.ders_basis_funs(span, r, d);
        Ok((span as isize + 1 - self.order as isize - 1, ders[d].clone()))
    }

    /// u(r) = Σ cᵢ Bᵢ(r) (or its d-th derivative) for retained coefficients.
    pub fn combine(&self, coeffs: &[f64], r: f64, d: usize) -> Result<f64> {
        let (off, vals) = self.nonzero(r, d)?;
        let n = self.len() as isize;
        Ok(vals
            .iter()
            .enumerate()
            .filter_map(|(a, v)| {
                let i = off + a as isize;
                (i >= 0 && i < n).then(|| v * coeffs[i as usize])
            })
            .sum())
    }

    /// Visits every quadrature node with (r, weight, retained offset, values, first derivatives).
    pub fn for_each_node(&self, mut f: impl FnMut(f64, f64, isize, &[f64], &[f64])) {
        let k = self.order;
        for q in 0..self.quad.nodes.len() {
            f(
                self.quad.nodes[q],
                self.quad.weights[q],
                self.first[q] as isize - 1,
                &self.vals[q * k..(q + 1) * k],
                &self.ders[q * k..(q + 1) * k],
            );
        }
    }

    fn accumulate(&self, entry: impl Fn(usize, f64, &[f64], &[f64], usize, usize) -> f64) -> SymBanded {
        let n = self.len() as isize;
        let mut m = SymBanded::zeros(self.len(), self.order - 1);
        let k = self.order;
        for q in 0..self.quad.nodes.len() {
            let off = self.first[q] as isize - 1;
            let v = &self.vals[q * k..(q + 1) * k];
            let dv = &self.ders[q * k..(q + 1) * k];
            let w = self.quad.weights[q];
            for a in 0..k {
                let i = off + a as isize;
                if i < 0 || i >= n {
                    continue;
                }
                for b in 0..=a {
                    let j = off + b as isize;
                    if j < 0 {
                        continue;
                    }
                    m.add(i as usize, j as usize, w * entry(q, self.quad.nodes[q], v, dv, a, b));
                }
            }
        }
        m
    }

    /// ∫ Bᵢ w(r) Bⱼ dr. Errors if w is non-finite at any node.
    pub fn radial_matrix(&self, w: impl Fn(f64) -> f64) -> Result<SymBanded> {
        let wv: Vec<f64> = self.quad.nodes.iter().map(|&r| w(r)).collect();
        if let Some((q, &v)) = wv.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteWeight { radius: self.quad.nodes[q], value: v });
        }
        Ok(self.accumulate(|q, _, v, _, a, b| wv[q] * v[a] * v[b]))
    }

    pub fn overlap(&self) -> SymBanded {
        self.accumulate(|_, _, v, _, a, b| v[a] * v[b])
    }

    /// ∫ Bᵢ' Bⱼ' dr.
    pub fn derivative_overlap(&self) -> SymBanded {
        self.accumulate(|_, _, _, dv, a, b| dv[a] * dv[b])
    }

    /// ∫ Bᵢ rᵖ Bⱼ dr for integer p (negative allowed).
    pub fn moment(&self, p: i32) -> SymBanded {
        self.accumulate(|_, r, v, _, a, b| r.powi(p) * v[a] * v[b])
    }

    /// Quadrature nodes of the basis.
    pub fn nodes(&self) -> &[f64] {
        &self.quad.nodes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(order: usize) -> BSplineBasis {
        let k = KnotSequence::from_breakpoints(vec![0.0, 0.5, 1.3, 2.0, 2.1, 3.5, 5.0], order).unwrap();
        BSplineBasis::new(k).unwrap()
    }

    #[test]
    fn partition_of_unity() {
        for order in [2, 4, 8] {
            let b = basis(order);
            for &r in &[0.0, 0.01, 0.5, 1.0, 2.05, 4.99, 5.0] {
                let s: f64 = (0..b.full_count()).map(|i| b.evaluate_full(i, r, 0).unwrap()).sum();
                let ds: f64 = (0..b.full_count()).map(|i| b.evaluate_full(i, r, 1).unwrap()).sum();
                assert!((s - 1.0).abs() < 1e-13, "order {order} r {r}: {s}");
                assert!(ds.abs() < 1e-10, "order {order} r {r}: {ds}");
            }
        }
    }

    #[test]
    fn retained_splines_vanish_at_endpoints() {
        let b = basis(6);
        for i in 0..b.len() {
            assert_eq!(b.evaluate(i, 0.0, 0).unwrap(), 0.0);
            assert!(b.evaluate(i, 5.0, 0).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let b = basis(8);
        let h = 1e-5;
        for i in 0..b.len() {
            for &r in &[0.3, 1.7, 2.08, 4.0] {
                let d1 = b.evaluate(i, r, 1).unwrap();
                let fd = (b.evaluate(i, r + h, 0).unwrap() - b.evaluate(i, r - h, 0).unwrap()) / (2.0 * h);
                assert!((d1 - fd).abs() < 1e-5 * (1.0 + d1.abs()), "i={i} r={r}");
                let d2 = b.evaluate(i, r, 2).unwrap();
                let fd2 = (b.evaluate(i, r + h, 1).unwrap() - b.evaluate(i, r - h, 1).unwrap()) / (2.0 * h);
                assert!((d2 - fd2).abs() < 1e-4 * (1.0 + d2.abs()), "i={i} r={r}");
            }
        }
    }

    #[test]
    fn outside_domain_is_error() {
        let b = basis(4);
        assert!(b.evaluate(0, -0.1, 0).is_err());
        assert!(b.evaluate(0, 5.1, 0).is_err());
        assert!(b.evaluate(0, 1.0, 3).is_err());
    }

    #[test]
    fn overlap_is_positive_definite_and_matches_radial_matrix() {
        let b = basis(8);
        let s = b.overlap();
        assert!(s.cholesky().unwrap().min_pivot() > 0.0);
        let s2 = b.radial_matrix(|_| 1.0).unwrap();
        assert_eq!(s, s2);
    }

    #[test]
    fn monomial_moments_are_exact() {
        // Σᵢⱼ ∫ Bᵢ r² Bⱼ over the full set equals ∫ r² = L³/3; retained set checked
        // against closed form through coefficients of the constant function.
        let k = KnotSequence::linear(0.0, 3.0, 6, 5).unwrap();
        let b = BSplineBasis::new(k).unwrap();
        let m = b.radial_matrix(|r| r * r).unwrap();
        let m2 = b.moment(2);
        for i in 0..b.len() {
            for j in 0..b.len() {
                assert!((m.get(i, j) - m2.get(i, j)).abs() < 1e-15);
            }
        }
        // ∫ x·r²·x over a quadratic combination: use u(r) = r(3-r), which lies in the
        // retained space for order ≥ 3 on a linear knot set.
        let n = b.len();
        let s = b.overlap();
        let rhs: Vec<f64> = {
            let mut v = vec![0.0; n];
            b.for_each_node(|r, w, off, vals, _| {
                for (a, bv) in vals.iter().enumerate() {
                    let i = off + a as isize;
                    if i >= 0 && (i as usize) < n {
                        v[i as usize] += w * bv * r * (3.0 - r);
                    }
                }
            });
            v
        };
        let c = s.cholesky().unwrap().solve(&rhs);
        let integral = m.bilinear(&c, &c);
        // ∫₀³ r² (r(3-r))² dr = 3^7 (1/5 - 2/6 + 1/7)
        let exact = 3f64.powi(7) * (1.0 / 5.0 - 1.0 / 3.0 + 1.0 / 7.0);
        assert!((integral - exact).abs() < 1e-10 * exact, "{integral} vs {exact}");
    }

    #[test]
    fn nonfinite_weight_reports_radius() {
        let b = basis(4);
        match b.radial_matrix(|r| if r > 2.0 { f64::NAN } else { 1.0 }) {
            Err(Error::NonFiniteWeight { radius, .. }) => assert!(radius > 2.0 && radius < 2.1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn combine_reproduces_single_spline() {
        let b = basis(7);
        let mut c = vec![0.0; b.len()];
        c[3] = 1.0;
        for &r in &[0.2, 1.0, 2.05, 3.0] {
            let u = b.combine(&c, r, 0).unwrap();
            assert!((u - b.evaluate(3, r, 0).unwrap()).abs() < 1e-15);
        }
    }
}
