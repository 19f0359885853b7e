//! Householder QR and ordinary least squares.
//!
//! Lag-augmented regressions on near-unit-root data are badly conditioned,
//! so everything here goes through QR rather than the normal equations.

use crate::error::{Error, Result};
use crate::numeric::matrix::{dot, Matrix};

/// Relative singular-value threshold below which a design is rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Householder QR factorization of an `m x k` design (`m >= k`).
///
/// Storage is column-major. Column `j` holds the Householder vector in rows
/// `j..m` and the strict upper triangle of `R` above the diagonal.
#[derive(Debug, Clone)]
pub struct Qr {
    m: usize,
    k: usize,
    a: Vec<f64>,
    beta: Vec<f64>,
    rdiag: Vec<f64>,
}

impl Qr {
    pub fn new(x: &Matrix) -> Result<Self> {
        let (m, k) = (x.rows(), x.cols());
        let mut a = vec![0.0; m * k];
        for i in 0..m {
            for (j, &v) in x.row(i).iter().enumerate() {
                a[j * m + i] = v;
            }
        }
        Self::from_column_major(m, k, a)
    }

    /// Factorizes a design given as `k` contiguous columns of length `m`.
    pub fn from_column_major(m: usize, k: usize, mut a: Vec<f64>) -> Result<Self> {
        if a.len() != m * k {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {m}x{k} design",
                a.len()
            )));
        }
        if k == 0 || m < k {
            return Err(Error::InsufficientSample(format!(
                "{m} observations for {k} regressors"
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::DomainError("non-finite regressor".into()));
        }
        let mut beta = vec![0.0; k];
        let mut rdiag = vec![0.0; k];
        for j in 0..k {
            let (head, tail) = a.split_at_mut((j + 1) * m);
            let col = &mut head[j * m + j..];
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                beta[j] = 0.0;
                rdiag[j] = 0.0;
                continue;
            }
            let alpha = if col[0] > 0.0 { -norm } else { norm };
            col[0] -= alpha;
            let vtv = col.iter().map(|v| v * v).sum::<f64>();
            let b = 2.0 / vtv;
            beta[j] = b;
            rdiag[j] = alpha;
            for l in 0..(k - j - 1) {
                let other = &mut tail[l * m + j..(l + 1) * m];
                let s = b * dot(col, other);
                if s != 0.0 {
                    for (o, &v) in other.iter_mut().zip(col.iter()) {
                        *o -= s * v;
                    }
                }
            }
        }
        Ok(Self { m, k, a, beta, rdiag })
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.k
    }

    /// Entry `(i, j)` of `R`, `i <= j`.
    #[inline]
    pub fn r(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.rdiag[j]
        } else if i < j {
            self.a[j * self.m + i]
        } else {
            0.0
        }
    }

    pub fn r_matrix(&self) -> Matrix {
        let mut r = Matrix::zeros(self.k, self.k);
        for i in 0..self.k {
            for j in i..self.k {
                r[(i, j)] = self.r(i, j);
            }
        }
        r
    }

    /// Overwrites `y` with `Q' y`.
    pub fn apply_qt(&self, y: &mut [f64]) {
        assert_eq!(y.len(), self.m);
        for j in 0..self.k {
            if self.beta[j] == 0.0 {
                continue;
            }
            let v = &self.a[j * self.m + j..(j + 1) * self.m];
            let s = self.beta[j] * dot(v, &y[j..]);
            for (yy, &vv) in y[j..].iter_mut().zip(v) {
                *yy -= s * vv;
            }
        }
    }

    /// Overwrites `z` with `Q z`.
    pub fn apply_q(&self, z: &mut [f64]) {
        assert_eq!(z.len(), self.m);
        for j in (0..self.k).rev() {
            if self.beta[j] == 0.0 {
                continue;
            }
            let v = &self.a[j * self.m + j..(j + 1) * self.m];
            let s = self.beta[j] * dot(v, &z[j..]);
            for (zz, &vv) in z[j..].iter_mut().zip(v) {
                *zz -= s * vv;
            }
        }
    }

    /// Inverse of the upper-triangular factor.
    pub fn r_inverse(&self) -> Matrix {
        let k = self.k;
        let mut inv = Matrix::zeros(k, k);
        for j in 0..k {
            inv[(j, j)] = 1.0 / self.rdiag[j];
            for i in (0..j).rev() {
                let mut s = 0.0;
                for l in i + 1..=j {
                    s += self.r(i, l) * inv[(l, j)];
                }
                inv[(i, j)] = -s / self.rdiag[i];
            }
        }
        inv
    }

    /// Checks the smallest-to-largest singular value ratio against
    /// [`RANK_TOLERANCE`] and returns `R^{-1}` on success.
    ///
    /// The Frobenius bound `1 / (|R| |R^{-1}|)` is a lower bound on the ratio
    /// accurate to a factor of `k`; the exact SVD is only computed when that
    /// bound is inconclusive.
    pub fn checked_r_inverse(&self) -> Result<Matrix> {
        let max_diag = self.rdiag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let min_diag = self.rdiag.iter().fold(f64::INFINITY, |m, d| m.min(d.abs()));
        // sigma_min <= min |r_jj| and sigma_max >= max |r_jj|.
        if max_diag == 0.0 || min_diag < RANK_TOLERANCE * max_diag {
            return Err(Error::RankDeficient {
                ratio: if max_diag == 0.0 { 0.0 } else { min_diag / max_diag },
            });
        }
        let rinv = self.r_inverse();
        let r = self.r_matrix();
        let bound = 1.0 / (r.frobenius_norm() * rinv.frobenius_norm());
        if !(bound.is_finite()) || bound < RANK_TOLERANCE {
            let sv = r.singular_values();
            let ratio = sv.last().copied().unwrap_or(0.0) / sv[0];
            if !(ratio >= RANK_TOLERANCE) {
                return Err(Error::RankDeficient { ratio });
            }
        }
        Ok(rinv)
    }

    /// Solves `R b = (Q'y)[..k]` for a vector already transformed by `Q'`.
    pub fn back_substitute(&self, qty: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut b = qty[..k].to_vec();
        for i in (0..k).rev() {
            let mut s = b[i];
            for j in i + 1..k {
                s -= self.r(i, j) * b[j];
            }
            b[i] = s / self.rdiag[i];
        }
        b
    }

    /// Least-squares coefficients and residuals for one response.
    pub fn solve(&self, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        let coef = self.back_substitute(&qty);
        for v in &mut qty[..self.k] {
            *v = 0.0;
        }
        self.apply_q(&mut qty);
        (coef, qty)
    }
}

/// Result of an ordinary least squares fit.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `(X'X)^{-1}`, used by sandwich covariance formulas.
    pub regressor_cross_product_inverse: Matrix,
    pub effective_sample: usize,
}

/// Multi-response least squares on a shared design.
#[derive(Debug, Clone)]
pub struct MultiOlsFit {
    /// `k x r` coefficient matrix, column `j` for response `j`.
    pub coefficients: Matrix,
    /// `m x r` residual matrix.
    pub residuals: Matrix,
    pub regressor_cross_product_inverse: Matrix,
    pub effective_sample: usize,
}

/// `(X'X)^{-1} = R^{-1} R^{-T}`.
pub fn cross_product_inverse(rinv: &Matrix) -> Matrix {
    let k = rinv.rows();
    let mut out = Matrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            // R^{-1} is upper triangular: row i is zero before column i.
            let s: f64 = (j..k).map(|l| rinv[(i, l)] * rinv[(j, l)]).sum();
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    out
}

/// Ordinary least squares of `y` on the columns of `x`.
pub fn ols(y: &[f64], x: &Matrix) -> Result<OlsFit> {
    if y.len() != x.rows() {
        return Err(Error::DimensionMismatch(format!(
            "response has {} observations, design has {}",
            y.len(),
            x.rows()
        )));
    }
    let qr = Qr::new(x)?;
    let rinv = qr.checked_r_inverse()?;
    let (coefficients, residuals) = qr.solve(y);
    Ok(OlsFit {
        coefficients,
        residuals,
        regressor_cross_product_inverse: cross_product_inverse(&rinv),
        effective_sample: x.rows(),
    })
}

/// Least squares of every column of `y` on the columns of `x`.
pub fn ols_multi(y: &Matrix, x: &Matrix) -> Result<MultiOlsFit> {
    if y.rows() != x.rows() {
        return Err(Error::DimensionMismatch(format!(
            "response has {} observations, design has {}",
            y.rows(),
            x.rows()
        )));
    }
    let qr = Qr::new(x)?;
    let rinv = qr.checked_r_inverse()?;
    let (m, k, r) = (x.rows(), x.cols(), y.cols());
    let mut coefficients = Matrix::zeros(k, r);
    let mut residuals = Matrix::zeros(m, r);
    for j in 0..r {
        let (b, e) = qr.solve(&y.column(j));
        for i in 0..k {
            coefficients[(i, j)] = b[i];
        }
        for t in 0..m {
            residuals[(t, j)] = e[t];
        }
    }
    Ok(MultiOlsFit {
        coefficients,
        residuals,
        regressor_cross_product_inverse: cross_product_inverse(&rinv),
        effective_sample: m,
    })
}
