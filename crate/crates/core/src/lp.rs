//! Local projection estimators.
//!
//! The horizon-`h` projection regresses `y_{i,t+h}` on an intercept, lags
//! `y_{t-1}, ..., y_{t-L}` and `y_t`, over `t = p+1, ..., T-h`. With lag
//! augmentation `L = p`, otherwise `L = p - 1`. The impulse response is
//! `nu' beta`, with `beta` the coefficient block on `y_t`.
//!
//! Everything is computed from one Householder QR of the design
//! `W = [controls | y_t]`. With `R22` the trailing `n x n` block of `R` and
//! `Q2` the matching columns of `Q`, the residualized regressor is
//! `u_t = R22' Q2_t` and the per-observation weight
//! `s_t = nu' (sum u u')^{-1} u_t = nu' R22^{-1} Q2_t` gives
//! `nu' beta = sum_t s_t y_{t+h}` and the EHW variance `sum_t s_t^2 xi_t^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::stats::{normal_critical_value, student_t_critical_value};
use crate::numeric::{Matrix, Qr};
use crate::report::{EstimateReport, Method, ReportFlags};
use crate::var::VarCoefficients;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeKind {
    Ehw,
    Homoskedastic,
    EwcHar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSpec {
    pub horizon: usize,
    pub response_variable: usize,
    pub response_weights: Vec<f64>,
    pub lag_augmented: bool,
    /// VAR order `p`.
    pub control_lags: usize,
    pub intercept: bool,
    /// `None` picks EHW with lag augmentation and EWC otherwise.
    pub se_kind: Option<SeKind>,
}

impl LpSpec {
    pub fn lag_augmented(horizon: usize, response_variable: usize, response_weights: Vec<f64>, p: usize) -> Self {
        Self {
            horizon,
            response_variable,
            response_weights,
            lag_augmented: true,
            control_lags: p,
            intercept: true,
            se_kind: None,
        }
    }

    pub fn non_augmented(horizon: usize, response_variable: usize, response_weights: Vec<f64>, p: usize) -> Self {
        Self {
            lag_augmented: false,
            ..Self::lag_augmented(horizon, response_variable, response_weights, p)
        }
    }

    pub fn with_se_kind(mut self, se_kind: SeKind) -> Self {
        self.se_kind = Some(se_kind);
        self
    }

    pub fn with_horizon(&self, horizon: usize) -> Self {
        Self { horizon, ..self.clone() }
    }

    pub fn se_kind(&self) -> SeKind {
        self.se_kind.unwrap_or(if self.lag_augmented {
            SeKind::Ehw
        } else {
            SeKind::EwcHar
        })
    }

    /// Number of lagged `y` blocks used as controls.
    pub fn lag_blocks(&self) -> usize {
        if self.lag_augmented {
            self.control_lags
        } else {
            self.control_lags - 1
        }
    }

    pub fn method(&self) -> Method {
        if self.lag_augmented {
            Method::LpLa
        } else {
            Method::Lp
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidSpec("horizon must be at least 1".into()));
        }
        if self.control_lags == 0 {
            return Err(Error::InvalidSpec("lag count must be at least 1".into()));
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

    /// Observations used by the projection on a sample of length `t`.
    pub fn effective_sample(&self, t: usize) -> Option<usize> {
        t.checked_sub(self.horizon + self.control_lags).filter(|&m| m > 0)
    }
}

/// By-products of a projection that the standard error formulas need.
#[derive(Debug, Clone, PartialEq)]
pub struct LpInternals {
    /// `T_eff x n`: residuals of `y_t` on the intercept and lag controls.
    pub residualized_regressor: Matrix,
    /// Projection residuals.
    pub lp_residuals: Vec<f64>,
    /// `sum u_t u_t' / T_eff`.
    pub sigma_hat: Matrix,
    /// Coefficients of `y_t` on the lag controls; `None` without lag controls.
    pub var_fit: Option<VarCoefficients>,
    /// Full coefficient block on `y_t` in the projection.
    pub coefficient_block: Vec<f64>,
}

/// Point, standard error and HAR degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LpCore {
    pub point: f64,
    pub se: f64,
    pub dof: Option<usize>,
    pub effective_sample: usize,
}

impl LpCore {
    pub fn critical_value(&self, level: f64) -> f64 {
        match self.dof {
            Some(d) => student_t_critical_value(level, d),
            None => normal_critical_value(level),
        }
    }
}

pub(crate) struct Projection {
    qr: Qr,
    rinv: Matrix,
    coef: Vec<f64>,
    residuals: Vec<f64>,
    /// Columns before the `y_t` block.
    k1: usize,
    m: usize,
}

/// Column-major projection design `[1, y_{t-1}, ..., y_{t-L}, y_t]` and
/// response `y_{i,t+h}`.
#[derive(Debug, Clone)]
pub(crate) struct LpDesign {
    a: Vec<f64>,
    y: Vec<f64>,
    m: usize,
    k: usize,
    /// Columns before the `y_t` block.
    k1: usize,
}

impl LpDesign {
    pub fn build(data: &Matrix, spec: &LpSpec) -> Result<Self> {
        let (t_len, n) = (data.rows(), data.cols());
        spec.validate(n)?;
        let p = spec.control_lags;
        let h = spec.horizon;
        let m = spec.effective_sample(t_len).ok_or_else(|| {
            Error::InsufficientSample(format!("T = {t_len} leaves no observations at h = {h}, p = {p}"))
        })?;
        if m < n * (p + 1) + 5 {
            return Err(Error::InsufficientSample(format!(
                "T - h - p = {m} is below n(p+1) + 5 = {}",
                n * (p + 1) + 5
            )));
        }
        let icpt = usize::from(spec.intercept);
        let lags = spec.lag_blocks();
        let k1 = icpt + n * lags;
        let k = k1 + n;
        let src = data.as_slice();
        let mut a = vec![0.0; m * k];
        if icpt == 1 {
            a[..m].fill(1.0);
        }
        // Column for lag l (0 = y_t) of variable j.
        let col_of = |l: usize, j: usize| if l == 0 { k1 + j } else { icpt + (l - 1) * n + j };
        for l in 0..=lags {
            for j in 0..n {
                let c = col_of(l, j);
                let dst = &mut a[c * m..(c + 1) * m];
                for (r, d) in dst.iter_mut().enumerate() {
                    *d = src[(p + r - l) * n + j];
                }
            }
        }
        let i = spec.response_variable;
        let y: Vec<f64> = (0..m).map(|r| src[(p + r + h) * n + i]).collect();
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::DomainError("non-finite response".into()));
        }
        Ok(Self { a, y, m, k, k1 })
    }

    pub fn observations(&self) -> usize {
        self.m
    }

    /// Design made of the rows `idx` (with repetition).
    pub fn select(&self, idx: &[usize]) -> Self {
        let m = idx.len();
        let mut a = vec![0.0; m * self.k];
        for c in 0..self.k {
            let src = &self.a[c * self.m..(c + 1) * self.m];
            for (d, &r) in a[c * m..(c + 1) * m].iter_mut().zip(idx) {
                *d = src[r];
            }
        }
        Self {
            a,
            y: idx.iter().map(|&r| self.y[r]).collect(),
            m,
            k: self.k,
            k1: self.k1,
        }
    }

    pub fn project(self) -> Result<Projection> {
        let qr = Qr::from_column_major(self.m, self.k, self.a)?;
        let rinv = qr.checked_r_inverse()?;
        let (coef, residuals) = qr.solve(&self.y);
        Ok(Projection {
            qr,
            rinv,
            coef,
            residuals,
            k1: self.k1,
            m: self.m,
        })
    }
}

fn project(data: &Matrix, spec: &LpSpec) -> Result<Projection> {
    LpDesign::build(data, spec)?.project()
}

impl Projection {
    /// `s_t = nu' R22^{-1} Q2_t` for every observation.
    fn weights(&self, nu: &[f64]) -> Vec<f64> {
        let n = nu.len();
        let mut z = vec![0.0; self.m];
        for j in 0..n {
            z[self.k1 + j] = (0..=j).map(|i| nu[i] * self.rinv[(self.k1 + i, self.k1 + j)]).sum();
        }
        self.qr.apply_q(&mut z);
        z
    }

    fn point(&self, nu: &[f64]) -> f64 {
        crate::numeric::matrix::dot(&self.coef[self.k1..], nu)
    }

    pub fn core(&self, spec: &LpSpec) -> Result<LpCore> {
        let nu = &spec.response_weights;
        let s = self.weights(nu);
        let xi = &self.residuals;
        let m = self.m;
        let (se, dof) = match spec.se_kind() {
            SeKind::Ehw => (s.iter().zip(xi).map(|(a, b)| a * a * b * b).sum::<f64>().sqrt(), None),
            SeKind::Homoskedastic => {
                let sigma2 = xi.iter().map(|e| e * e).sum::<f64>() / m as f64;
                (
                    (sigma2 * s.iter().map(|a| a * a).sum::<f64>()).sqrt(),
                    None,
                )
            }
            SeKind::EwcHar => {
                let scores: Vec<f64> = s.iter().zip(xi).map(|(a, b)| m as f64 * a * b).collect();
                let (se, dof) = ewc_har_se(&scores, 1.0, m)?;
                (se, Some(dof))
            }
        };
        Ok(LpCore {
            point: self.point(nu),
            se,
            dof,
            effective_sample: m,
        })
    }

    fn internals(&self, n: usize, lags: usize, intercept: bool) -> LpInternals {
        let (m, k1) = (self.m, self.k1);
        let mut u = Matrix::zeros(m, n);
        for j in 0..n {
            let mut z = vec![0.0; m];
            for i in 0..=j {
                z[k1 + i] = self.qr.r(k1 + i, k1 + j);
            }
            self.qr.apply_q(&mut z);
            for (t, v) in z.into_iter().enumerate() {
                u[(t, j)] = v;
            }
        }
        let sigma_hat = u.tr_matmul(&u).scale(1.0 / m as f64);
        // Coefficients of y_t on the controls: R11^{-1} R12.
        let var_fit = (lags > 0).then(|| {
            let icpt = usize::from(intercept);
            let mut c = Matrix::zeros(k1, n);
            for j in 0..n {
                for r in 0..k1 {
                    c[(r, j)] = (r..k1).map(|l| self.rinv[(r, l)] * self.qr.r(l, k1 + j)).sum();
                }
            }
            let blocks = (0..lags)
                .map(|l| {
                    let mut a = Matrix::zeros(n, n);
                    for i in 0..n {
                        for j in 0..n {
                            a[(i, j)] = c[(icpt + l * n + j, i)];
                        }
                    }
                    a
                })
                .collect();
            let intercept = intercept.then(|| c.row(0).to_vec());
            VarCoefficients::new(blocks, intercept).expect("n x n blocks")
        });
        LpInternals {
            residualized_regressor: u,
            lp_residuals: self.residuals.clone(),
            sigma_hat,
            var_fit,
            coefficient_block: self.coef[k1..].to_vec(),
        }
    }
}

/// Point estimate and standard error only; used inside bootstrap loops.
pub(crate) fn lp_core(data: &Matrix, spec: &LpSpec) -> Result<LpCore> {
    project(data, spec)?.core(spec)
}

/// Delta-method report from a computed core.
pub(crate) fn delta_report(core: LpCore, spec: &LpSpec, level: f64) -> EstimateReport {
    let half = core.critical_value(level) * core.se;
    EstimateReport {
        point: core.point,
        se: core.se,
        interval: (core.point - half, core.point + half),
        level,
        effective_sample: core.effective_sample,
        method: spec.method(),
        horizon: spec.horizon,
        degrees_of_freedom_used: core.dof,
        flags: ReportFlags::default(),
    }
}

pub(crate) fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("confidence level {level} is not in (0, 1)")))
    }
}

/// Local projection estimate with a delta-method interval at `level`.
///
/// Normal critical values for EHW and homoskedastic standard errors;
/// Student-t with the EWC degrees of freedom for HAR.
pub fn lp_estimate(data: &Matrix, spec: &LpSpec, level: f64) -> Result<(EstimateReport, LpInternals)> {
    check_level(level)?;
    let proj = project(data, spec)?;
    let core = proj.core(spec)?;
    let internals = proj.internals(data.cols(), spec.lag_blocks(), spec.intercept);
    Ok((delta_report(core, spec, level), internals))
}

/// `T_eff^{-1} {nu' S^{-1} (sum xi_t^2 u_t u_t') S^{-1} nu}^{1/2}` with
/// `S` the residual covariance `sigma_hat`.
pub fn ehw_se(internals: &LpInternals, nu: &[f64]) -> Result<f64> {
    let u = &internals.residualized_regressor;
    let n = u.cols();
    if nu.len() != n {
        return Err(Error::DimensionMismatch("shock weights differ from n".into()));
    }
    let s_inv = internals
        .sigma_hat
        .cholesky()
        .and_then(|_| internals.sigma_hat.inverse())
        .ok_or(Error::SingularSigma)?;
    let g = s_inv.mul_vec(nu);
    let mut meat = Matrix::zeros(n, n);
    for (t, xi) in internals.lp_residuals.iter().enumerate() {
        let row = u.row(t);
        for a in 0..n {
            for b in 0..n {
                meat[(a, b)] += xi * xi * row[a] * row[b];
            }
        }
    }
    let quad = crate::numeric::matrix::dot(&g, &meat.mul_vec(&g));
    Ok(quad.max(0.0).sqrt() / u.rows() as f64)
}

/// `ceil(0.4 T^{2/3})`.
pub fn ewc_dof(t_eff: usize) -> usize {
    (0.4 * (t_eff as f64).powf(2.0 / 3.0)).ceil() as usize
}

/// `dof^{-1} sum_{j=1}^{dof} Lambda_j^2` with
/// `Lambda_j = sqrt(2/T) sum_t cos(pi j (t - 1/2) / T) z_t`.
pub fn ewc_long_run_variance(scores: &[f64], dof: usize) -> f64 {
    let t_len = scores.len();
    let mut lambda = vec![0.0; dof];
    let step = std::f64::consts::PI / t_len as f64;
    for (t, &z) in scores.iter().enumerate() {
        // cos(j x) by the Chebyshev recurrence.
        let c1 = (step * (t as f64 + 0.5)).cos();
        let (mut prev, mut cur) = (1.0, c1);
        for l in lambda.iter_mut() {
            *l += cur * z;
            let next = 2.0 * c1 * cur - prev;
            prev = cur;
            cur = next;
        }
    }
    let scale = 2.0 / t_len as f64;
    lambda.iter().map(|l| l * l * scale).sum::<f64>() / dof as f64
}

/// EWC standard error `sqrt(Omega / T_eff) / regressor_scale` and its
/// degrees of freedom.
pub fn ewc_har_se(scores: &[f64], regressor_scale: f64, t_eff: usize) -> Result<(f64, usize)> {
    if scores.len() != t_eff {
        return Err(Error::DimensionMismatch(format!(
            "{} scores for an effective sample of {t_eff}",
            scores.len()
        )));
    }
    let dof = ewc_dof(t_eff);
    if dof < 1 || dof > t_eff {
        return Err(Error::InsufficientSample(format!("EWC needs 1 <= dof <= T_eff, got dof {dof}")));
    }
    let omega = ewc_long_run_variance(scores, dof);
    Ok(((omega / t_eff as f64).sqrt() / regressor_scale, dof))
}
