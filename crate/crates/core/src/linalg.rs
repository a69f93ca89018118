//! Direct solvers for the assembled systems: symmetric banded Cholesky for
//! the finite-element problems and the Thomas algorithm for the simulator's
//! tridiagonal pressure systems.

use crate::error::{Error, Result};

/// Symmetric positive-definite band matrix, lower band stored row-wise:
/// `data[i * (hbw + 1) + d]` holds A[i, i - d].
#[derive(Debug, Clone)]
pub struct SymBand {
    n: usize,
    hbw: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn new(n: usize, hbw: usize) -> Self {
        Self { n, hbw, data: vec![0.0; n * (hbw + 1)] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let d = r - c;
        assert!(d <= self.hbw, "entry ({i}, {j}) outside band {}", self.hbw);
        self.data[r * (self.hbw + 1) + d] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let d = r - c;
        if d > self.hbw {
            0.0
        } else {
            self.data[r * (self.hbw + 1) + d]
        }
    }

    /// Stored lower-band entries (i, j <= i, value), zeros included.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (0..=self.hbw.min(i)).map(move |d| (i, i - d, self.data[i * (self.hbw + 1) + d]))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.hbw);
            for j in lo..=i {
                let a = self.data[i * (self.hbw + 1) + (i - j)];
                y[i] += a * x[j];
                if i != j {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// In-place LL^T factorization; fails on a nonpositive pivot, which for
    /// the penalty formulation signals an insufficient penalty parameter.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let w = self.hbw + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.hbw);
            for j in lo..=i {
                let mut sum = self.data[i * w + (i - j)];
                let kmin = lo.max(j.saturating_sub(self.hbw));
                for k in kmin..j {
                    sum -= self.data[i * w + (i - k)] * self.data[j * w + (j - k)];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(Error::Fem(format!(
                            "matrix not positive definite at pivot {i} ({sum:.3e})"
                        )));
                    }
                    self.data[i * w + 0] = sum.sqrt();
                } else {
                    self.data[i * w + (i - j)] = sum / self.data[j * w + 0];
                }
            }
        }
        Ok(BandCholesky { n: self.n, hbw: self.hbw, data: self.data })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    hbw: usize,
    data: Vec<f64>,
}

impl BandCholesky {
    pub fn solve(&self, b: &mut [f64]) {
        let w = self.hbw + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.hbw);
            let mut sum = b[i];
            for k in lo..i {
                sum -= self.data[i * w + (i - k)] * b[k];
            }
            b[i] = sum / self.data[i * w + 0];
        }
        for i in (0..self.n).rev() {
            let hi = (i + self.hbw).min(self.n - 1);
            let mut sum = b[i];
            for k in i + 1..=hi {
                sum -= self.data[k * w + (k - i)] * b[k];
            }
            b[i] = sum / self.data[i * w + 0];
        }
    }
}

/// Thomas algorithm for a tridiagonal system; `lower[0]` and
/// `upper[n-1]` are ignored.
pub fn solve_tridiag(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    if diag[0] == 0.0 {
        return Err(Error::Fem("zero pivot in tridiagonal solve".into()));
    }
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        if m == 0.0 {
            return Err(Error::Fem(format!("zero pivot in tridiagonal solve at row {i}")));
        }
        if i < n - 1 {
            c[i] = upper[i] / m;
        }
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}
