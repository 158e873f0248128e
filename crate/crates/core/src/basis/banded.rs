use faer::Mat;

use crate::error::{Error, Result};

/// Symmetric matrix stored as its lower band: `band[i][d]` holds entry (i, i-d).
#[derive(Debug, Clone, PartialEq)]
pub struct SymBanded {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, band: vec![0.0; n * (bw + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let d = i - j;
        (d <= self.bw).then_some(i * (self.bw + 1) + d)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.band[s])
    }

    /// Adds to the (i, j) entry, which also means (j, i). Panics outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside band");
        self.band[s] += v;
    }

    pub fn scaled(&self, f: f64) -> Self {
        Self { band: self.band.iter().map(|v| v * f).collect(), ..self.clone() }
    }

    /// `self + f * other`; bandwidths must agree.
    pub fn axpy(&mut self, f: f64, other: &Self) {
        assert_eq!((self.n, self.bw), (other.n, other.bw));
        for (a, b) in self.band.iter_mut().zip(&other.band) {
            *a += f * b;
        }
    }

    pub fn to_dense(&self) -> Mat<f64> {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for d in 0..=self.bw.min(i) {
                let v = self.band[i * (self.bw + 1) + d];
                let j = i - d;
                y[i] += v * x[j];
                if d > 0 {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }

    /// x^T A y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.matvec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Largest relative asymmetry is zero by construction; kept for diagnostics.
    pub fn max_abs(&self) -> f64 {
        self.band.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Banded Cholesky factor A = L Lᵀ.
    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let (n, bw) = (self.n, self.bw);
        let mut l = vec![0.0; n * (bw + 1)];
        let at = |i: usize, d: usize| i * (bw + 1) + d;
        for j in 0..n {
            let mut s = self.band[at(j, 0)];
            for k in j.saturating_sub(bw)..j {
                let v = l[at(j, j - k)];
                s -= v * v;
            }
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::Conditioning { index: j, pivot: s });
            }
            let djj = s.sqrt();
            l[at(j, 0)] = djj;
            for i in (j + 1)..(j + 1 + bw).min(n) {
                let mut s = self.band[at(i, i - j)];
                for k in i.saturating_sub(bw)..j {
                    s -= l[at(i, i - k)] * l[at(j, j - k)];
                }
                l[at(i, i - j)] = s / djj;
            }
        }
        let min_pivot = (0..n).map(|j| l[at(j, 0)]).fold(f64::INFINITY, f64::min);
        Ok(BandedCholesky { n, bw, l, min_pivot })
    }
}

/// Lower-triangular banded Cholesky factor.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
    min_pivot: f64,
}

impl BandedCholesky {
    #[inline]
    fn at(&self, i: usize, d: usize) -> f64 {
        self.l[i * (self.bw + 1) + d]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Smallest diagonal entry of L.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Overwrites `x` with L⁻¹ x.
    pub fn solve_lower(&self, x: &mut [f64]) {
        for i in 0..self.n {
            let mut s = x[i];
            for d in 1..=self.bw.min(i) {
                s -= self.at(i, d) * x[i - d];
            }
            x[i] = s / self.at(i, 0);
        }
    }

    /// Overwrites `x` with L⁻ᵀ x.
    pub fn solve_upper(&self, x: &mut [f64]) {
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for d in 1..=self.bw.min(self.n - 1 - i) {
                s -= self.at(i + d, d) * x[i + d];
            }
            x[i] = s / self.at(i, 0);
        }
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_lower(&mut x);
        self.solve_upper(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SymBanded {
        let mut a = SymBanded::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        a
    }

    #[test]
    fn cholesky_solves() {
        let a = laplacian(10);
        let b: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let x = a.cholesky().unwrap().solve(&b);
        let r = a.matvec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_matrix_reports_pivot() {
        let mut a = laplacian(4);
        a.add(2, 2, -10.0);
        match a.cholesky() {
            Err(Error::Conditioning { index, pivot }) => {
                assert_eq!(index, 2);
                assert!(pivot < 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn triangular_solves_are_inverses() {
        let mut a = SymBanded::zeros(7, 3);
        for i in 0..7 {
            for d in 0..=3.min(i) {
                a.add(i, i - d, if d == 0 { 10.0 } else { 1.0 / (d as f64 + 1.0) });
            }
        }
        let ch = a.cholesky().unwrap();
        let v: Vec<f64> = (0..7).map(|i| i as f64 - 3.0).collect();
        let mut w = v.clone();
        ch.solve_lower(&mut w);
        ch.solve_upper(&mut w);
        let back = a.matvec(&w);
        for (x, y) in back.iter().zip(&v) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
