use crate::error::{Error, Result};
use crate::numeric::Matrix;
use crate::var::VarCoefficients;

/// A VAR whose lag polynomial factors as `A(L) = B(L) (I - diag(rho) L)`,
/// with `B(L) = I - B_1 L - ... - B_{p-1} L^{p-1}` stable and its companion
/// powers bounded by `C (1 - eps)^l`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedDgp {
    pub roots: Vec<f64>,
    /// `B_1 ... B_{p-1}`; empty when `B(L) = I`.
    pub stationary_blocks: Vec<Matrix>,
    /// `(C, eps)`.
    pub decay_constants: (f64, f64),
}

impl FactorizedDgp {
    pub fn new(roots: Vec<f64>, stationary_blocks: Vec<Matrix>, decay_constants: (f64, f64)) -> Result<Self> {
        let n = roots.len();
        if n == 0 {
            return Err(Error::InvalidSpec("at least one root is required".into()));
        }
        if stationary_blocks.iter().any(|b| b.rows() != n || b.cols() != n) {
            return Err(Error::DimensionMismatch("stationary blocks must be n x n".into()));
        }
        let (c, eps) = decay_constants;
        if !(c > 0.0) || !(eps > 0.0 && eps < 1.0) {
            return Err(Error::DomainError("need C > 0 and eps in (0, 1)".into()));
        }
        Ok(Self {
            roots,
            stationary_blocks,
            decay_constants,
        })
    }

    pub fn n(&self) -> usize {
        self.roots.len()
    }

    /// Order `p` of the composed polynomial.
    pub fn order(&self) -> usize {
        self.stationary_blocks.len() + 1
    }

    /// Companion matrix of `B(L)`; the `n x n` zero matrix when `B(L) = I`.
    pub fn stationary_companion(&self) -> Matrix {
        if self.stationary_blocks.is_empty() {
            return Matrix::zeros(self.n(), self.n());
        }
        VarCoefficients::new(self.stationary_blocks.clone(), None)
            .expect("validated blocks")
            .companion()
            .into_matrix()
    }

    /// Checks `||B^l|| <= C (1 - eps)^l` (Frobenius norm) for `l = 1..=max_power`.
    pub fn satisfies_decay_bound(&self, max_power: usize) -> bool {
        let (c, eps) = self.decay_constants;
        let b = self.stationary_companion();
        let mut power = b.clone();
        for l in 1..=max_power {
            if power.frobenius_norm() > c * (1.0 - eps).powi(l as i32) * (1.0 + 1e-12) {
                return false;
            }
            power = power.matmul(&b);
        }
        true
    }

    /// `rho_i^*(A, eps) = max(|rho_i|, 1 - eps/2)`.
    pub fn dominant_rate(&self, i: usize) -> f64 {
        self.roots[i].abs().max(1.0 - self.decay_constants.1 / 2.0)
    }

    /// `C_1 = 1 + 2 C (1 - eps) / eps`.
    pub fn response_bound_constant(&self) -> f64 {
        let (c, eps) = self.decay_constants;
        1.0 + 2.0 * c * (1.0 - eps) / eps
    }

    pub fn compose(&self) -> VarCoefficients {
        compose_factorized(self)
    }
}

/// Expands `B(L) (I - D L)`: `A_1 = D + B_1`, `A_l = B_l - B_{l-1} D`,
/// `A_p = -B_{p-1} D`.
pub fn compose_factorized(dgp: &FactorizedDgp) -> VarCoefficients {
    let n = dgp.n();
    let d = Matrix::diagonal(&dgp.roots);
    let b = &dgp.stationary_blocks;
    let p = b.len() + 1;
    let mut blocks = Vec::with_capacity(p);
    for l in 1..=p {
        let mut a = Matrix::zeros(n, n);
        if l == 1 {
            a = a.add(&d);
        }
        if l <= b.len() {
            a = a.add(&b[l - 1]);
        }
        if l >= 2 {
            a = a.sub(&b[l - 2].matmul(&d));
        }
        blocks.push(a);
    }
    VarCoefficients::new(blocks, None).expect("square blocks")
}
