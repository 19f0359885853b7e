use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::rng::standard_normal;
use crate::numeric::{Matrix, RngStream};
use crate::var::VarCoefficients;

/// Any `|y_t|` above this aborts the simulation.
pub const OVERFLOW_GUARD: f64 = 1e100;

/// Innovation law for `u_t`.
#[derive(Debug, Clone, PartialEq)]
pub enum InnovationSpec {
    /// `u_t ~ N(0, covariance)` i.i.d.
    IidGaussian { covariance: Matrix, loading: Matrix },
    /// `u_t = loading * v_t`, with each component of `v_t` an ARCH(1)
    /// process `v = tau * eps`, `tau^2 = alpha0 + alpha1 v_{t-1}^2`.
    Arch1 { alpha0: f64, alpha1: f64, loading: Matrix },
}

impl InnovationSpec {
    pub fn iid_gaussian(covariance: Matrix) -> Result<Self> {
        if !covariance.is_symmetric(1e-12) {
            return Err(Error::InvalidSpec("innovation covariance must be symmetric".into()));
        }
        let loading = covariance
            .cholesky()
            .ok_or_else(|| Error::InvalidSpec("innovation covariance must be positive definite".into()))?;
        Ok(Self::IidGaussian { covariance, loading })
    }

    pub fn standard(n: usize) -> Self {
        Self::iid_gaussian(Matrix::identity(n)).expect("identity is positive definite")
    }

    pub fn arch1(alpha0: f64, alpha1: f64, loading: Matrix) -> Result<Self> {
        if !(alpha0 > 0.0) || !(0.0..1.0).contains(&alpha1) {
            return Err(Error::InvalidSpec("ARCH(1) needs alpha0 > 0 and 0 <= alpha1 < 1".into()));
        }
        if !loading.is_square() || !loading.is_finite() {
            return Err(Error::InvalidSpec("ARCH loading must be a finite square matrix".into()));
        }
        Ok(Self::Arch1 { alpha0, alpha1, loading })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::IidGaussian { loading, .. } | Self::Arch1 { loading, .. } => loading.rows(),
        }
    }

    /// Draws `t` consecutive innovations as a `t x n` matrix.
    pub fn draw<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> Matrix {
        let n = self.dim();
        let mut out = Matrix::zeros(t, n);
        let mut v = vec![0.0; n];
        match self {
            Self::IidGaussian { loading, .. } => {
                for s in 0..t {
                    v.iter_mut().for_each(|x| *x = standard_normal(rng));
                    out.row_mut(s).copy_from_slice(&lower_mul(loading, &v));
                }
            }
            Self::Arch1 { alpha0, alpha1, loading } => {
                // Start from the unconditional variance alpha0 / (1 - alpha1).
                let mut prev_sq = vec![alpha0 / (1.0 - alpha1); n];
                for s in 0..t {
                    for (x, ps) in v.iter_mut().zip(prev_sq.iter_mut()) {
                        let tau = (alpha0 + alpha1 * *ps).sqrt();
                        *x = tau * standard_normal(rng);
                        *ps = *x * *x;
                    }
                    out.row_mut(s).copy_from_slice(&loading.mul_vec(&v));
                }
            }
        }
        out
    }
}

fn lower_mul(l: &Matrix, v: &[f64]) -> Vec<f64> {
    (0..l.rows())
        .map(|i| (0..=i).map(|j| l[(i, j)] * v[j]).sum())
        .collect()
}

/// How pre-sample values `y_0, ..., y_{1-p}` are set.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// All zero.
    Zero,
    /// A `p x n` block of pre-sample values, oldest first.
    Given(Matrix),
    /// Start from zero and discard this many leading observations.
    BurnIn(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSample {
    /// `T x n` observations.
    pub data: Matrix,
    /// `T x n` innovations that generated `data`.
    pub innovations: Matrix,
    pub burn_in: usize,
}

/// Runs `y_t = c + sum_l A_l y_{t-l} + u_t` over the rows of `innovations`.
pub fn propagate(coeffs: &VarCoefficients, innovations: &Matrix, init: &InitialCondition) -> Result<Matrix> {
    let (n, p) = (coeffs.n(), coeffs.p());
    if innovations.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} innovation columns for a {n}-variable VAR",
            innovations.cols()
        )));
    }
    let t_len = innovations.rows();
    // Pre-sample rows occupy the first p rows of the buffer.
    let mut buf = vec![0.0; (p + t_len) * n];
    if let InitialCondition::Given(block) = init {
        if block.rows() != p || block.cols() != n {
            return Err(Error::DimensionMismatch("initial block must be p x n".into()));
        }
        buf[..p * n].copy_from_slice(block.as_slice());
    }
    let stacked = coeffs.stacked();
    let intercept = coeffs.intercept();
    for s in 0..t_len {
        let row = p + s;
        for i in 0..n {
            let mut acc = innovations[(s, i)] + intercept.map_or(0.0, |c| c[i]);
            let a_row = stacked.row(i);
            for l in 1..=p {
                let past = &buf[(row - l) * n..(row - l + 1) * n];
                let a = &a_row[(l - 1) * n..l * n];
                for (x, y) in a.iter().zip(past) {
                    acc += x * y;
                }
            }
            if !(acc.abs() <= OVERFLOW_GUARD) {
                return Err(Error::ExplosiveOverflow { t: s + 1 });
            }
            buf[row * n + i] = acc;
        }
    }
    Matrix::new(t_len, n, buf.split_off(p * n))
}

/// Simulates `t` observations; see [`simulate_with_rng`].
pub fn simulate(
    coeffs: &VarCoefficients,
    innovations: &InnovationSpec,
    t: usize,
    init: &InitialCondition,
    stream: RngStream,
) -> Result<SimulatedSample> {
    simulate_with_rng(coeffs, innovations, t, init, &mut stream.rng())
}

pub fn simulate_with_rng<R: Rng + ?Sized>(
    coeffs: &VarCoefficients,
    innovations: &InnovationSpec,
    t: usize,
    init: &InitialCondition,
    rng: &mut R,
) -> Result<SimulatedSample> {
    if t < coeffs.p() + 1 {
        return Err(Error::InsufficientSample(format!(
            "T = {t} is below p + 1 = {}",
            coeffs.p() + 1
        )));
    }
    if innovations.dim() != coeffs.n() {
        return Err(Error::DimensionMismatch("innovation dimension differs from n".into()));
    }
    let burn_in = match init {
        InitialCondition::BurnIn(b) => *b,
        _ => 0,
    };
    let u = innovations.draw(t + burn_in, rng);
    let data = propagate(coeffs, &u, init)?;
    if burn_in == 0 {
        return Ok(SimulatedSample {
            data,
            innovations: u,
            burn_in,
        });
    }
    let n = coeffs.n();
    Ok(SimulatedSample {
        data: data.block(burn_in, 0, t, n),
        innovations: u.block(burn_in, 0, t, n),
        burn_in,
    })
}
