//! Plug-in VAR impulse response estimators with delta-method intervals.

use serde::{Deserialize, Serialize};

use crate::bootstrap::pope_bias_correct;
use crate::error::{Error, Result};
use crate::lp::check_level;
use crate::numeric::matrix::dot;
use crate::numeric::stats::normal_critical_value;
use crate::numeric::{ols_multi, Matrix};
use crate::report::{EstimateReport, Method, ReportFlags};
use crate::var::VarCoefficients;

/// Covariance of the VAR coefficients fed to the delta method.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientCovariance {
    /// Heteroskedasticity-robust, including cross-equation blocks.
    #[default]
    Ehw,
    /// `Sigma_u (x) (X'X)^{-1}`.
    Homoskedastic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArSpec {
    /// Lags in the fitted VAR: `p`, or `p + 1` with lag augmentation.
    pub lags_estimated: usize,
    pub horizon: usize,
    pub response_weights: Vec<f64>,
    pub response_variable: usize,
    /// Drop the last lag block before computing responses.
    pub lag_augmented: bool,
    #[serde(default)]
    pub covariance: CoefficientCovariance,
    /// Evaluate responses and the Jacobian at Pope bias-corrected
    /// coefficients (left uncorrected when the fit is not stable).
    #[serde(default)]
    pub bias_correct: bool,
    /// Scale the coefficient covariance by `m / (m - k)`.
    #[serde(default)]
    pub small_sample_scaling: bool,
}

impl ArSpec {
    pub fn textbook(horizon: usize, response_variable: usize, response_weights: Vec<f64>, p: usize) -> Self {
        Self {
            lags_estimated: p,
            horizon,
            response_weights,
            response_variable,
            lag_augmented: false,
            covariance: CoefficientCovariance::Ehw,
            bias_correct: true,
            small_sample_scaling: true,
        }
    }

    /// Fits a VAR(`p + 1`) and keeps the first `p` blocks.
    pub fn lag_augmented(horizon: usize, response_variable: usize, response_weights: Vec<f64>, p: usize) -> Self {
        Self {
            lags_estimated: p + 1,
            lag_augmented: true,
            bias_correct: false,
            small_sample_scaling: false,
            ..Self::textbook(horizon, response_variable, response_weights, p)
        }
    }

    pub fn with_horizon(&self, horizon: usize) -> Self {
        Self { horizon, ..self.clone() }
    }

    /// Lag blocks used for the impulse responses.
    pub fn response_lags(&self) -> usize {
        if self.lag_augmented {
            self.lags_estimated - 1
        } else {
            self.lags_estimated
        }
    }

    pub fn method(&self) -> Method {
        if self.lag_augmented {
            Method::ArLa
        } else {
            Method::Ar
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.lags_estimated == 0 || (self.lag_augmented && self.lags_estimated < 2) {
            return Err(Error::InvalidSpec("too few estimated lags".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidSpec("horizon must be at least 1".into()));
        }
        if self.response_variable >= n {
            return Err(Error::InvalidSpec(format!(
                "response variable {} out of range for {n} series",
                self.response_variable
            )));
        }
        if self.response_weights.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} shock weights for {n} series",
                self.response_weights.len()
            )));
        }
        if self.response_weights.iter().all(|&w| w == 0.0) || self.response_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidSpec("shock weights must be finite and not all zero".into()));
        }
        Ok(())
    }
}

/// OLS fit of a VAR(`q`) with intercept over `t = q+1, ..., T`.
#[derive(Debug, Clone)]
pub struct VarFit {
    pub coefficients: VarCoefficients,
    /// `(T - q) x n`.
    pub residuals: Matrix,
    /// `(T - q) x (1 + nq)`: `[1, y_{t-1}', ..., y_{t-q}']`.
    pub design: Matrix,
    pub design_cross_product_inverse: Matrix,
}

impl VarFit {
    pub fn effective_sample(&self) -> usize {
        self.residuals.rows()
    }

    /// `sum u_t u_t' / T_eff`.
    pub fn residual_covariance(&self) -> Matrix {
        self.residuals
            .tr_matmul(&self.residuals)
            .scale(1.0 / self.effective_sample() as f64)
    }
}

pub fn fit_var(data: &Matrix, q: usize) -> Result<VarFit> {
    let (t_len, n) = (data.rows(), data.cols());
    if q == 0 {
        return Err(Error::InvalidSpec("a VAR needs at least one lag".into()));
    }
    let m = t_len.saturating_sub(q);
    let k = 1 + n * q;
    if m < k + 5 {
        return Err(Error::InsufficientSample(format!(
            "{m} observations for a VAR({q}) with {k} regressors per equation"
        )));
    }
    let mut design = Matrix::zeros(m, k);
    let mut y = Matrix::zeros(m, n);
    for r in 0..m {
        let t = q + r;
        let row = design.row_mut(r);
        row[0] = 1.0;
        for l in 1..=q {
            row[1 + (l - 1) * n..1 + l * n].copy_from_slice(data.row(t - l));
        }
        y.row_mut(r).copy_from_slice(data.row(t));
    }
    let fit = ols_multi(&y, &design)?;
    let mut stacked = Matrix::zeros(n, n * q);
    for i in 0..n {
        for c in 0..n * q {
            stacked[(i, c)] = fit.coefficients[(1 + c, i)];
        }
    }
    let intercept = (0..n).map(|i| fit.coefficients[(0, i)]).collect();
    Ok(VarFit {
        coefficients: VarCoefficients::from_stacked(&stacked, Some(intercept))?,
        residuals: fit.residuals,
        design,
        design_cross_product_inverse: fit.regressor_cross_product_inverse,
    })
}

/// `d(nu' beta_i(A, h)) / dA` for the `n x np` stacked coefficients,
/// row-major (`a * np + c`).
#[derive(Debug, Clone, PartialEq)]
pub struct IrfJacobian {
    pub gradient: Vec<f64>,
}

impl IrfJacobian {
    pub fn is_zero(&self) -> bool {
        self.gradient.iter().all(|&g| g == 0.0)
    }
}

/// Product rule on `e_i' J A^h J' nu`:
/// `sum_{j<h} (e_i' J A^j)' (A^{h-1-j} J' nu)`, restricted to the top `n`
/// rows of the companion matrix.
pub fn irf_jacobian(coeffs: &VarCoefficients, h: usize, nu: &[f64], i: usize) -> IrfJacobian {
    let (n, p) = (coeffs.n(), coeffs.p());
    let np = n * p;
    assert!(h >= 1 && nu.len() == n && i < n);
    let comp = coeffs.companion().into_matrix();
    let mut left = vec![0.0; np];
    left[i] = 1.0;
    let mut lefts = Vec::with_capacity(h);
    for _ in 0..h {
        lefts.push(left[..n].to_vec());
        left = comp.vec_mul(&left);
    }
    let mut right = vec![0.0; np];
    right[..n].copy_from_slice(nu);
    let mut gradient = vec![0.0; n * np];
    // Pair l_j with r_{h-1-j}: r runs forward while j runs backward.
    for j in (0..h).rev() {
        let l = &lefts[j];
        for a in 0..n {
            if l[a] == 0.0 {
                continue;
            }
            for c in 0..np {
                gradient[a * np + c] += l[a] * right[c];
            }
        }
        if j > 0 {
            right = comp.mul_vec(&right);
        }
    }
    IrfJacobian { gradient }
}

/// Point estimate and delta-method standard error from a fitted VAR.
pub(crate) fn ar_point_se(fit: &VarFit, spec: &ArSpec) -> (f64, f64, ReportFlags) {
    let n = fit.coefficients.n();
    let q = fit.coefficients.p();
    let p = spec.response_lags();
    let corrected = spec
        .bias_correct
        .then(|| pope_bias_correct(&fit.coefficients, &fit.residual_covariance(), fit.effective_sample()).ok())
        .flatten();
    let coeffs = corrected.as_ref().unwrap_or(&fit.coefficients).truncated(p);
    let nu = &spec.response_weights;
    let i = spec.response_variable;
    let point = coeffs.impulse_responses(spec.horizon).response(i, nu, spec.horizon);
    let jac = irf_jacobian(&coeffs, spec.horizon, nu, i);
    let flags = ReportFlags {
        singular_jacobian: jac.is_zero(),
        nonstationary_fit: spec.bias_correct && corrected.is_none(),
        ..ReportFlags::default()
    };
    // Gradient over each equation's full regressor vector (intercept first,
    // dropped blocks zero).
    let k = 1 + n * q;
    let np = n * p;
    let g: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            let mut v = vec![0.0; k];
            v[1..1 + np].copy_from_slice(&jac.gradient[a * np..(a + 1) * np]);
            v
        })
        .collect();
    let xtx_inv = &fit.design_cross_product_inverse;
    let w: Vec<Vec<f64>> = g.iter().map(|ga| xtx_inv.mul_vec(ga)).collect();
    let var = match spec.covariance {
        CoefficientCovariance::Ehw => {
            let mut s = 0.0;
            for t in 0..fit.design.rows() {
                let x = fit.design.row(t);
                let u = fit.residuals.row(t);
                let score: f64 = (0..n).map(|a| u[a] * dot(&w[a], x)).sum();
                s += score * score;
            }
            s
        }
        CoefficientCovariance::Homoskedastic => {
            let sigma = fit.residual_covariance();
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    s += sigma[(a, b)] * dot(&g[a], &w[b]);
                }
            }
            s
        }
    };
    let m = fit.design.rows() as f64;
    let var = if spec.small_sample_scaling { var * m / (m - k as f64) } else { var };
    (point, var.max(0.0).sqrt(), flags)
}

/// VAR impulse response estimate with a normal delta-method interval.
pub fn ar_estimate(data: &Matrix, spec: &ArSpec, level: f64) -> Result<EstimateReport> {
    check_level(level)?;
    spec.validate(data.cols())?;
    let fit = fit_var(data, spec.lags_estimated)?;
    let (point, se, flags) = ar_point_se(&fit, spec);
    let half = normal_critical_value(level) * se;
    Ok(EstimateReport {
        point,
        se,
        interval: (point - half, point + half),
        level,
        effective_sample: fit.effective_sample(),
        method: spec.method(),
        horizon: spec.horizon,
        degrees_of_freedom_used: None,
        flags,
    })
}
