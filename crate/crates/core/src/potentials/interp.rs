//! Piecewise cubic Hermite interpolation of tabulated data.

/// Cubic Hermite interpolant through (x, y) with prescribed slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermite {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub d: Vec<f64>,
}

impl Hermite {
    fn interval(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let i = self.interval(t);
        hermite(self.x[i], self.x[i + 1], self.y[i], self.y[i + 1], self.d[i], self.d[i + 1], t).0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let i = self.interval(t);
        hermite(self.x[i], self.x[i + 1], self.y[i], self.y[i + 1], self.d[i], self.d[i + 1], t).1
    }
}

/// Value and derivative of the cubic Hermite segment on [x0, x1].
pub fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> (f64, f64) {
    let h = x1 - x0;
    let s = (t - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let v = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dv = ((6.0 * s2 - 6.0 * s) * y0 + (3.0 * s2 - 4.0 * s + 1.0) * h * d0 + (-6.0 * s2 + 6.0 * s) * y1
        + (3.0 * s2 - 2.0 * s) * h * d1)
        / h;
    (v, dv)
}

/// Slopes of the natural cubic spline through the data.
pub fn natural_spline_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 2 {
        let s = (y[1] - y[0]) / (x[1] - x[0]);
        return vec![s, s];
    }
    // Solve for second derivatives M with M0 = Mn = 0.
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut r = vec![0.0; n];
    b[0] = 1.0;
    b[n - 1] = 1.0;
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        a[i] = h0;
        b[i] = 2.0 * (h0 + h1);
        c[i] = h1;
        r[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
    }
    for i in 1..n {
        let m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        r[i] -= m * r[i - 1];
    }
    let mut m2 = vec![0.0; n];
    m2[n - 1] = r[n - 1] / b[n - 1];
    for i in (0..n - 1).rev() {
        m2[i] = (r[i] - c[i] * m2[i + 1]) / b[i];
    }
    let mut d = vec![0.0; n];
    for i in 0..n - 1 {
        let h = x[i + 1] - x[i];
        d[i] = (y[i + 1] - y[i]) / h - h * (2.0 * m2[i] + m2[i + 1]) / 6.0;
    }
    let h = x[n - 1] - x[n - 2];
    d[n - 1] = (y[n - 1] - y[n - 2]) / h + h * (m2[n - 2] + 2.0 * m2[n - 1]) / 6.0;
    d
}

/// Fritsch-Carlson monotone slopes (PCHIP).
pub fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        return vec![del[0], del[0]];
    }
    for i in 1..n - 1 {
        if del[i - 1] * del[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], del[0], del[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_spline_reproduces_lines() {
        let x = [0.0, 0.5, 1.7, 2.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let d = natural_spline_slopes(&x, &y);
        assert!(d.iter().all(|s| (s - 3.0).abs() < 1e-13));
    }

    #[test]
    fn pchip_keeps_monotone_data_monotone() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| if *v < 5.0 { 0.0 } else { 1.0 }).collect();
        let h = Hermite { d: pchip_slopes(&x, &y), x: x.clone(), y };
        let mut prev = f64::NEG_INFINITY;
        for k in 0..900 {
            let t = k as f64 * 0.01;
            let v = h.value(t);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn hermite_derivative_consistent() {
        let (v0, d0) = hermite(1.0, 2.0, 0.3, -0.2, 1.0, 0.5, 1.3);
        let (v1, _) = hermite(1.0, 2.0, 0.3, -0.2, 1.0, 0.5, 1.3 + 1e-7);
        assert!(((v1 - v0) / 1e-7 - d0).abs() < 1e-6);
    }
}
