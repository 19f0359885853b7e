//! VAR(p) coefficients, companion form, impulse responses and simulation of
//! the data generating processes used in the experiments.

mod dgp;
mod factorized;
mod simulate;

pub use dgp::{ar1_dgp, bivariate_var4_coefficients, bivariate_var4_dgp, CoefficientFile, InnovationFile, VarDgp};
pub use factorized::{compose_factorized, FactorizedDgp};
pub use simulate::{propagate, simulate, simulate_with_rng, InitialCondition, InnovationSpec, SimulatedSample, OVERFLOW_GUARD};

use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Autoregressive coefficients `A = (A_1, ..., A_p)` of an `n`-variable VAR.
#[derive(Debug, Clone, PartialEq)]
pub struct VarCoefficients {
    n: usize,
    lag_blocks: Vec<Matrix>,
    intercept: Option<Vec<f64>>,
}

impl VarCoefficients {
    pub fn new(lag_blocks: Vec<Matrix>, intercept: Option<Vec<f64>>) -> Result<Self> {
        let n = lag_blocks
            .first()
            .ok_or_else(|| Error::InvalidSpec("a VAR needs at least one lag".into()))?
            .rows();
        if lag_blocks.iter().any(|b| b.rows() != n || b.cols() != n) {
            return Err(Error::DimensionMismatch("every lag block must be n x n".into()));
        }
        if let Some(c) = &intercept {
            if c.len() != n {
                return Err(Error::DimensionMismatch("intercept length differs from n".into()));
            }
        }
        Ok(Self {
            n,
            lag_blocks,
            intercept,
        })
    }

    pub fn zeros(n: usize, p: usize) -> Self {
        assert!(n >= 1 && p >= 1);
        Self {
            n,
            lag_blocks: vec![Matrix::zeros(n, n); p],
            intercept: None,
        }
    }

    /// Univariate AR(1) `y_t = rho y_{t-1} + u_t`.
    pub fn ar1(rho: f64) -> Self {
        Self::univariate(&[rho])
    }

    /// Univariate AR(p) with the given lag coefficients.
    pub fn univariate(coefs: &[f64]) -> Self {
        let blocks = coefs
            .iter()
            .map(|&a| Matrix::new(1, 1, vec![a]).unwrap())
            .collect();
        Self::new(blocks, None).expect("non-empty coefficient list")
    }

    /// Builds coefficients from the `n x np` matrix `[A_1 ... A_p]`.
    pub fn from_stacked(stacked: &Matrix, intercept: Option<Vec<f64>>) -> Result<Self> {
        let n = stacked.rows();
        if n == 0 || stacked.cols() % n != 0 || stacked.cols() == 0 {
            return Err(Error::DimensionMismatch("stacked coefficients must be n x np".into()));
        }
        let p = stacked.cols() / n;
        let blocks = (0..p).map(|l| stacked.block(0, l * n, n, n)).collect();
        Self::new(blocks, intercept)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.lag_blocks.len()
    }

    /// Lag block `A_lag`, 1-based.
    pub fn lag(&self, lag: usize) -> &Matrix {
        &self.lag_blocks[lag - 1]
    }

    pub fn lag_blocks(&self) -> &[Matrix] {
        &self.lag_blocks
    }

    pub fn lag_blocks_mut(&mut self) -> &mut [Matrix] {
        &mut self.lag_blocks
    }

    pub fn intercept(&self) -> Option<&[f64]> {
        self.intercept.as_deref()
    }

    pub fn with_intercept(mut self, intercept: Option<Vec<f64>>) -> Self {
        self.intercept = intercept;
        self
    }

    /// The `n x np` matrix `[A_1 ... A_p]`.
    pub fn stacked(&self) -> Matrix {
        let (n, p) = (self.n, self.p());
        let mut out = Matrix::zeros(n, n * p);
        for (l, b) in self.lag_blocks.iter().enumerate() {
            out.set_block(0, l * n, b);
        }
        out
    }

    /// Keeps only the first `p` lag blocks.
    pub fn truncated(&self, p: usize) -> Self {
        assert!(p >= 1 && p <= self.p());
        Self {
            n: self.n,
            lag_blocks: self.lag_blocks[..p].to_vec(),
            intercept: self.intercept.clone(),
        }
    }

    pub fn companion(&self) -> CompanionMatrix {
        companion(self)
    }

    pub fn spectral_radius(&self) -> f64 {
        self.companion().matrix().spectral_radius()
    }

    pub fn impulse_responses(&self, max_horizon: usize) -> ImpulseResponseSet {
        impulse_responses(self, max_horizon)
    }
}

/// `np x np` companion matrix: `[A_1 ... A_p]` on top, identity blocks on
/// the first sub-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanionMatrix(Matrix);

impl CompanionMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// True when rows `n..np` are exactly `[I_{n(p-1)} | 0]`.
    pub fn has_companion_structure(&self, n: usize) -> bool {
        let m = &self.0;
        let np = m.rows();
        (n..np).all(|i| (0..np).all(|j| m[(i, j)] == if j + n == i { 1.0 } else { 0.0 }))
    }
}

pub fn companion(coeffs: &VarCoefficients) -> CompanionMatrix {
    let (n, p) = (coeffs.n(), coeffs.p());
    let mut m = Matrix::zeros(n * p, n * p);
    for (l, b) in coeffs.lag_blocks().iter().enumerate() {
        m.set_block(0, l * n, b);
    }
    for i in n..n * p {
        m[(i, i - n)] = 1.0;
    }
    CompanionMatrix(m)
}

/// Reduced-form responses `J A^h J'` for `h = 0..=H`. Row `i` of the
/// horizon-`h` matrix is the response of variable `i` to each innovation.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponseSet {
    responses: Vec<Matrix>,
}

impl ImpulseResponseSet {
    pub fn max_horizon(&self) -> usize {
        self.responses.len() - 1
    }

    pub fn at(&self, h: usize) -> &Matrix {
        &self.responses[h]
    }

    /// `nu' beta_i(A, h)`.
    pub fn response(&self, variable: usize, weights: &[f64], h: usize) -> f64 {
        crate::numeric::matrix::dot(self.responses[h].row(variable), weights)
    }
}

/// Iterates `Psi_h = sum_l A_l Psi_{h-l}` from `Psi_0 = I`; equal to
/// `J A^h J'` without forming companion powers.
pub fn impulse_responses(coeffs: &VarCoefficients, max_horizon: usize) -> ImpulseResponseSet {
    let n = coeffs.n();
    let mut responses: Vec<Matrix> = Vec::with_capacity(max_horizon + 1);
    responses.push(Matrix::identity(n));
    for h in 1..=max_horizon {
        let mut psi = Matrix::zeros(n, n);
        for l in 1..=coeffs.p().min(h) {
            let term = coeffs.lag(l).matmul(&responses[h - l]);
            psi = psi.add(&term);
        }
        responses.push(psi);
    }
    ImpulseResponseSet { responses }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ar1_companion_is_coefficient() {
        let c = companion(&VarCoefficients::ar1(0.5));
        assert_eq!(c.matrix().as_slice(), &[0.5]);
    }

    #[test]
    fn ar2_companion_layout() {
        let c = companion(&VarCoefficients::univariate(&[0.5, 0.25]));
        assert_eq!(c.matrix().as_slice(), &[0.5, 0.25, 1.0, 0.0]);
        assert!(c.has_companion_structure(1));
    }

    #[test]
    fn ar1_responses_are_powers() {
        let irf = impulse_responses(&VarCoefficients::ar1(0.5), 3);
        assert_eq!(irf.at(3)[(0, 0)], 0.125);
        assert_eq!(irf.at(0)[(0, 0)], 1.0);
    }

    #[test]
    fn horizon_zero_is_identity() {
        let blocks = vec![
            Matrix::from_rows(&[vec![0.3, 0.1, 0.0], vec![0.2, 0.5, -0.1], vec![0.0, 0.1, 0.4]]).unwrap(),
            Matrix::from_rows(&[vec![0.1, 0.0, 0.0], vec![0.0, -0.2, 0.1], vec![0.05, 0.0, 0.1]]).unwrap(),
        ];
        let irf = impulse_responses(&VarCoefficients::new(blocks, None).unwrap(), 5);
        assert_eq!(irf.at(0), &Matrix::identity(3));
    }

    #[test]
    fn stacked_round_trip() {
        let c = bivariate_var4_coefficients(0.7);
        let back = VarCoefficients::from_stacked(&c.stacked(), None).unwrap();
        assert_eq!(back, c);
    }
}
