//! Wild recursive VAR bootstrap, pairs bootstrap and the analytic VAR bias
//! correction used to build the bootstrap DGP.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ar::{ar_point_se, fit_var, ArSpec, VarFit};
use crate::error::{Error, Result};
use crate::lp::{check_level, lp_core, LpDesign, LpSpec};
use crate::numeric::rng::standard_normal;
use crate::numeric::stats::quantile_sorted;
use crate::numeric::{Matrix, RngStream};
use crate::report::{EstimateReport, Method, ReportFlags};
use crate::var::{VarCoefficients, OVERFLOW_GUARD};

pub const DEFAULT_DRAWS: usize = 2000;
pub const MIN_DRAWS: usize = 50;
/// Share of failed draws above which a bootstrap errors out.
pub const MAX_FAILED_SHARE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BootstrapKind {
    WildRecursive,
    Pairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalKind {
    PercentileT,
    Efron,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiplierLaw {
    #[default]
    StandardNormal,
    Rademacher,
}

impl MultiplierLaw {
    fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            MultiplierLaw::StandardNormal => standard_normal(rng),
            MultiplierLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapSpec {
    pub draws: usize,
    pub kind: BootstrapKind,
    pub interval: IntervalKind,
    pub bias_correct: bool,
    pub multiplier: MultiplierLaw,
}

impl Default for BootstrapSpec {
    fn default() -> Self {
        Self {
            draws: DEFAULT_DRAWS,
            kind: BootstrapKind::WildRecursive,
            interval: IntervalKind::PercentileT,
            bias_correct: true,
            multiplier: MultiplierLaw::StandardNormal,
        }
    }
}

impl BootstrapSpec {
    pub fn with_draws(draws: usize) -> Self {
        Self {
            draws,
            ..Self::default()
        }
    }

    pub fn efron(self) -> Self {
        Self {
            interval: IntervalKind::Efron,
            ..self
        }
    }

    pub fn pairs(self) -> Self {
        Self {
            kind: BootstrapKind::Pairs,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.draws < MIN_DRAWS {
            return Err(Error::InvalidSpec(format!(
                "{} bootstrap draws; at least {MIN_DRAWS} are required",
                self.draws
            )));
        }
        Ok(())
    }

    /// Interval choices valid for a local projection target.
    fn validate_for_lp(&self) -> Result<()> {
        self.validate()?;
        if self.kind == BootstrapKind::WildRecursive && self.interval == IntervalKind::Efron {
            return Err(Error::InvalidSpec(
                "recursive bootstrap draws are centered at the VAR response; use percentile-t".into(),
            ));
        }
        Ok(())
    }

    fn validate_for_arla(&self) -> Result<()> {
        self.validate()?;
        if self.kind != BootstrapKind::WildRecursive || self.interval != IntervalKind::Efron {
            return Err(Error::InvalidSpec(
                "the lag-augmented AR interval is a wild recursive Efron interval".into(),
            ));
        }
        Ok(())
    }

    fn too_many_failures(&self, failed: usize) -> bool {
        failed as f64 > MAX_FAILED_SHARE * self.draws as f64
    }
}

/// Per-draw statistics that survived, in draw order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BootstrapDraws {
    /// Studentized statistics; empty for Efron intervals.
    pub t_stats: Vec<f64>,
    pub point_stats: Vec<f64>,
    /// Standard errors; empty for Efron intervals.
    pub se_stats: Vec<f64>,
    /// Value the statistics are centered at.
    pub center: f64,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootOutcome {
    pub report: EstimateReport,
    pub draws: BootstrapDraws,
}

/// `[point - se Q_{1-a/2}, point - se Q_{a/2}]`.
pub fn percentile_t_interval(point: f64, se: f64, t_stats: &[f64], level: f64) -> Result<(f64, f64)> {
    let mut sorted = t_stats.to_vec();
    sorted.sort_by(f64::total_cmp);
    let alpha = 1.0 - level;
    let lo_q = quantile_sorted(&sorted, alpha / 2.0)?;
    let hi_q = quantile_sorted(&sorted, 1.0 - alpha / 2.0)?;
    Ok((point - se * hi_q, point - se * lo_q))
}

/// `[Q_{a/2}, Q_{1-a/2}]` of the bootstrap point estimates.
pub fn efron_interval(point_stats: &[f64], level: f64) -> Result<(f64, f64)> {
    let mut sorted = point_stats.to_vec();
    sorted.sort_by(f64::total_cmp);
    let alpha = 1.0 - level;
    Ok((
        quantile_sorted(&sorted, alpha / 2.0)?,
        quantile_sorted(&sorted, 1.0 - alpha / 2.0)?,
    ))
}

fn bootstrap_sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    crate::numeric::stats::variance(x).sqrt()
}

// ---------------------------------------------------------------------------
// Bias correction

/// Covariance `G = sum_k A^k S A'^k` of a stable companion system, by
/// doubling: `G <- G + A_k G A_k'`, `A_k <- A_k^2`.
fn lyapunov_doubling(a: &Matrix, s: &Matrix) -> Matrix {
    let mut g = s.clone();
    let mut ak = a.clone();
    for _ in 0..100 {
        let step = ak.matmul(&g).matmul(&ak.transpose());
        g = g.add(&step);
        if step.max_abs() <= 1e-15 * g.max_abs() {
            break;
        }
        ak = ak.matmul(&ak);
    }
    g
}

fn to_complex(m: &Matrix) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| Complex::new(m[(i, j)], 0.0))
}

/// Analytic first-order bias correction of a stationary VAR fit.
///
/// `bias = -(1/T) S [(I - A')^{-1} + A'(I - A'^2)^{-1}
///        + sum_l lambda_l (I - lambda_l A')^{-1}] G^{-1}` on the companion
/// form, with `S` the companion innovation covariance, `G` the companion
/// variance and `lambda_l` the companion eigenvalues. The corrected
/// coefficients are `A - bias`; if they are not stable the correction is
/// scaled by `1, 0.99, 0.98, ...` until they are. The intercept is kept.
///
/// Returns `NonstationaryInput` when the fit itself is not stable.
pub fn pope_bias_correct(fit: &VarCoefficients, residual_cov: &Matrix, t: usize) -> Result<VarCoefficients> {
    let (n, p) = (fit.n(), fit.p());
    let np = n * p;
    if residual_cov.rows() != n || residual_cov.cols() != n {
        return Err(Error::DimensionMismatch("residual covariance must be n x n".into()));
    }
    if t == 0 {
        return Err(Error::EmptyInput);
    }
    let a = fit.companion().into_matrix();
    let radius = a.spectral_radius();
    if !(radius < 1.0) {
        return Err(Error::NonstationaryInput { radius });
    }
    let mut s = Matrix::zeros(np, np);
    s.set_block(0, 0, residual_cov);
    let g_inv = lyapunov_doubling(&a, &s).inverse().ok_or(Error::SingularSigma)?;
    let at = a.transpose();
    let eye = Matrix::identity(np);
    let inv = |m: Matrix| m.inverse().ok_or(Error::SingularSigma);
    let mut bracket = inv(eye.sub(&at))?;
    bracket = bracket.add(&at.matmul(&inv(eye.sub(&at.matmul(&at)))?));
    let at_c = to_complex(&at);
    let eye_c = DMatrix::<Complex<f64>>::identity(np, np);
    let mut eig_sum = DMatrix::<Complex<f64>>::zeros(np, np);
    for (re, im) in a.eigenvalues() {
        let lambda = Complex::new(re, im);
        let m = (&eye_c - &at_c * lambda).try_inverse().ok_or(Error::SingularSigma)?;
        eig_sum += m * lambda;
    }
    for i in 0..np {
        for j in 0..np {
            bracket[(i, j)] += eig_sum[(i, j)].re;
        }
    }
    let bias = s.matmul(&bracket).matmul(&g_inv).scale(-1.0 / t as f64);
    let top = a.block(0, 0, n, np);
    let bias_top = bias.block(0, 0, n, np);
    let mut delta = 1.0;
    loop {
        let corrected = top.sub(&bias_top.scale(delta));
        let coeffs = VarCoefficients::from_stacked(&corrected, fit.intercept().map(<[f64]>::to_vec))?;
        if coeffs.spectral_radius() < 1.0 || delta <= 0.0 {
            return Ok(coeffs);
        }
        delta = ((delta - 0.01) * 100.0).round() / 100.0;
    }
}

// ---------------------------------------------------------------------------
// Wild recursive bootstrap

/// The recursive bootstrap DGP: a (bias-corrected) VAR(p) fit with
/// intercept, its residuals and the original data for initial blocks.
#[derive(Debug, Clone)]
pub struct WildRecursive {
    data: Matrix,
    coefficients: VarCoefficients,
    residuals: Matrix,
    multiplier: MultiplierLaw,
    stream: RngStream,
    nonstationary_fit: bool,
}

impl WildRecursive {
    pub fn new(data: &Matrix, p: usize, bias_correct: bool, multiplier: MultiplierLaw, stream: RngStream) -> Result<Self> {
        let fit: VarFit = fit_var(data, p)?;
        let mut nonstationary_fit = false;
        let coefficients = if bias_correct {
            match pope_bias_correct(&fit.coefficients, &fit.residual_covariance(), fit.effective_sample()) {
                Ok(c) => c,
                Err(Error::NonstationaryInput { .. }) => {
                    nonstationary_fit = true;
                    fit.coefficients.clone()
                }
                Err(e) => return Err(e),
            }
        } else {
            fit.coefficients.clone()
        };
        Ok(Self {
            data: data.clone(),
            coefficients,
            residuals: fit.residuals,
            multiplier,
            stream,
            nonstationary_fit,
        })
    }

    pub fn p(&self) -> usize {
        self.coefficients.p()
    }

    /// Coefficients that generate the bootstrap samples.
    pub fn coefficients(&self) -> &VarCoefficients {
        &self.coefficients
    }

    pub fn nonstationary_fit(&self) -> bool {
        self.nonstationary_fit
    }

    /// Pseudo-true response `nu' beta_i(A*, h)` in the bootstrap DGP.
    pub fn center(&self, i: usize, nu: &[f64], h: usize) -> f64 {
        self.coefficients.impulse_responses(h).response(i, nu, h)
    }

    /// Start of the initial block and the residual multipliers of draw `b`.
    pub fn randomness(&self, b: u64) -> (usize, Vec<f64>) {
        let mut rng = self.stream.substream(b).rng();
        let t_len = self.data.rows();
        let p = self.p();
        let start = rng.random_range(0..=t_len - p);
        let mult = (0..t_len - p).map(|_| self.multiplier.sample(&mut rng)).collect();
        (start, mult)
    }

    /// Bootstrap sample `b` (`T x n`).
    pub fn draw(&self, b: u64) -> Result<Matrix> {
        let (start, mult) = self.randomness(b);
        let (t_len, n, p) = (self.data.rows(), self.data.cols(), self.p());
        let mut y = vec![0.0; t_len * n];
        y[..p * n].copy_from_slice(&self.data.as_slice()[start * n..(start + p) * n]);
        let stacked = self.coefficients.stacked();
        let c = self.coefficients.intercept().expect("fitted with intercept");
        for t in p..t_len {
            let u = self.residuals.row(t - p);
            let w = mult[t - p];
            for i in 0..n {
                let a_row = stacked.row(i);
                let mut acc = c[i] + w * u[i];
                for l in 1..=p {
                    let past = &y[(t - l) * n..(t - l + 1) * n];
                    acc += crate::numeric::matrix::dot(&a_row[(l - 1) * n..l * n], past);
                }
                if !(acc.abs() <= OVERFLOW_GUARD) {
                    return Err(Error::ExplosiveOverflow { t: t + 1 });
                }
                y[t * n + i] = acc;
            }
        }
        Matrix::new(t_len, n, y)
    }
}

/// A statistic evaluated on every wild recursive draw.
#[derive(Debug, Clone, PartialEq)]
pub enum BootTarget {
    /// Percentile-t interval for a local projection (augmented or not).
    LpPercentileT(LpSpec),
    /// Efron interval for a lag-augmented AR response.
    ArLaEfron(ArSpec),
}

enum TargetState {
    Lp {
        spec: LpSpec,
        point: f64,
        se: f64,
        effective_sample: usize,
        draws: BootstrapDraws,
    },
    ArLa {
        spec: ArSpec,
        point: f64,
        effective_sample: usize,
        draws: BootstrapDraws,
    },
    Failed(Error),
}

/// Runs one set of wild recursive draws around a VAR(`p`) and evaluates
/// every target on each draw, so samples are shared across horizons and
/// methods.
///
/// The outer error covers the bootstrap DGP; per-target failures (sample
/// estimate or too many failed draws) are reported individually.
pub fn wild_recursive_batch(
    data: &Matrix,
    p: usize,
    boot: &BootstrapSpec,
    level: f64,
    stream: RngStream,
    targets: &[BootTarget],
) -> Result<Vec<Result<BootOutcome>>> {
    check_level(level)?;
    boot.validate()?;
    let engine = WildRecursive::new(data, p, boot.bias_correct, boot.multiplier, stream)?;
    let mut states: Vec<TargetState> = targets
        .iter()
        .map(|t| match t {
            BootTarget::LpPercentileT(spec) => match lp_core(data, spec) {
                Ok(core) => TargetState::Lp {
                    point: core.point,
                    se: core.se,
                    effective_sample: core.effective_sample,
                    draws: BootstrapDraws {
                        center: engine.center(spec.response_variable, &spec.response_weights, spec.horizon),
                        ..BootstrapDraws::default()
                    },
                    spec: spec.clone(),
                },
                Err(e) => TargetState::Failed(e),
            },
            BootTarget::ArLaEfron(spec) => {
                let sample = spec
                    .validate(data.cols())
                    .and_then(|_| fit_var(data, spec.lags_estimated));
                match sample {
                    Ok(fit) => {
                        let (point, _, _) = ar_point_se(&fit, spec);
                        TargetState::ArLa {
                            point,
                            effective_sample: fit.effective_sample(),
                            draws: BootstrapDraws {
                                center: engine.center(spec.response_variable, &spec.response_weights, spec.horizon),
                                ..BootstrapDraws::default()
                            },
                            spec: spec.clone(),
                        }
                    }
                    Err(e) => TargetState::Failed(e),
                }
            }
        })
        .collect();

    let mut var_fits: Vec<(usize, Option<VarFit>)> = Vec::new();
    for b in 0..boot.draws as u64 {
        let sample = engine.draw(b);
        var_fits.clear();
        for state in states.iter_mut() {
            match state {
                TargetState::Lp { spec, draws, .. } => {
                    let stat = sample
                        .as_ref()
                        .map_err(Clone::clone)
                        .and_then(|s| lp_core(s, spec))
                        .ok()
                        .filter(|c| c.se > 0.0 && c.se.is_finite() && c.point.is_finite());
                    match stat {
                        Some(c) => {
                            draws.point_stats.push(c.point);
                            draws.se_stats.push(c.se);
                            draws.t_stats.push((c.point - draws.center) / c.se);
                        }
                        None => draws.failed += 1,
                    }
                }
                TargetState::ArLa { spec, draws, .. } => {
                    let Ok(s) = sample.as_ref() else {
                        draws.failed += 1;
                        continue;
                    };
                    let q = spec.lags_estimated;
                    let pos = match var_fits.iter().position(|(lag, _)| *lag == q) {
                        Some(pos) => pos,
                        None => {
                            var_fits.push((q, fit_var(s, q).ok()));
                            var_fits.len() - 1
                        }
                    };
                    match &var_fits[pos].1 {
                        Some(fit) => {
                            let point = ar_point_se(fit, spec).0;
                            if point.is_finite() {
                                draws.point_stats.push(point);
                            } else {
                                draws.failed += 1;
                            }
                        }
                        None => draws.failed += 1,
                    }
                }
                TargetState::Failed(_) => {}
            }
        }
    }

    let flags = |failed: usize| ReportFlags {
        nonstationary_fit: engine.nonstationary_fit(),
        failed_draws: failed,
        draws: boot.draws,
        ..ReportFlags::default()
    };
    Ok(states
        .into_iter()
        .map(|state| match state {
            TargetState::Failed(e) => Err(e),
            TargetState::Lp {
                spec,
                point,
                se,
                effective_sample,
                draws,
            } => {
                if boot.too_many_failures(draws.failed) {
                    return Err(Error::TooManyFailedDraws {
                        failed: draws.failed,
                        total: boot.draws,
                    });
                }
                let interval = percentile_t_interval(point, se, &draws.t_stats, level)?;
                Ok(BootOutcome {
                    report: EstimateReport {
                        point,
                        se,
                        interval,
                        level,
                        effective_sample,
                        method: if spec.lag_augmented {
                            Method::LpLaBootstrap
                        } else {
                            Method::LpBootstrap
                        },
                        horizon: spec.horizon,
                        degrees_of_freedom_used: None,
                        flags: flags(draws.failed),
                    },
                    draws,
                })
            }
            TargetState::ArLa {
                spec,
                point,
                effective_sample,
                draws,
            } => {
                if boot.too_many_failures(draws.failed) {
                    return Err(Error::TooManyFailedDraws {
                        failed: draws.failed,
                        total: boot.draws,
                    });
                }
                let interval = efron_interval(&draws.point_stats, level)?;
                Ok(BootOutcome {
                    report: EstimateReport {
                        point,
                        se: bootstrap_sd(&draws.point_stats),
                        interval,
                        level,
                        effective_sample,
                        method: Method::ArLaEfron,
                        horizon: spec.horizon,
                        degrees_of_freedom_used: None,
                        flags: flags(draws.failed),
                    },
                    draws,
                })
            }
        })
        .collect())
}

/// Percentile-t interval for a local projection from the wild recursive
/// bootstrap around a VAR with the projection's lag order. A pairs
/// `boot.kind` is forwarded to [`lp_pairs_bootstrap`].
pub fn lp_percentile_t(
    data: &Matrix,
    spec: &LpSpec,
    boot: &BootstrapSpec,
    level: f64,
    stream: RngStream,
) -> Result<EstimateReport> {
    if boot.kind == BootstrapKind::Pairs {
        return lp_pairs_bootstrap(data, spec, boot, level, stream);
    }
    boot.validate_for_lp()?;
    Ok(lp_percentile_t_draws(data, spec, boot, level, stream)?.report)
}

/// [`lp_percentile_t`] returning the stored draws as well.
pub fn lp_percentile_t_draws(
    data: &Matrix,
    spec: &LpSpec,
    boot: &BootstrapSpec,
    level: f64,
    stream: RngStream,
) -> Result<BootOutcome> {
    boot.validate_for_lp()?;
    let targets = [BootTarget::LpPercentileT(spec.clone())];
    wild_recursive_batch(data, spec.control_lags, boot, level, stream, &targets)?
        .pop()
        .expect("one target")
}

/// Efron interval for the lag-augmented AR response, from wild recursive
/// draws around the VAR(`lags_estimated - 1`) fit.
pub fn arla_efron(data: &Matrix, spec: &ArSpec, boot: &BootstrapSpec, level: f64, stream: RngStream) -> Result<EstimateReport> {
    boot.validate_for_arla()?;
    if !spec.lag_augmented {
        return Err(Error::InvalidSpec("the Efron AR interval needs lag augmentation".into()));
    }
    let targets = [BootTarget::ArLaEfron(spec.clone())];
    Ok(wild_recursive_batch(data, spec.response_lags(), boot, level, stream, &targets)?
        .pop()
        .expect("one target")?
        .report)
}

// ---------------------------------------------------------------------------
// Pairs bootstrap

/// Pairs bootstrap of a local projection: resample `(y_{t+h}, x_t)` rows
/// i.i.d. with replacement. Efron and percentile-t intervals are both
/// valid; percentile-t centers at the sample estimate.
pub fn lp_pairs_bootstrap(
    data: &Matrix,
    spec: &LpSpec,
    boot: &BootstrapSpec,
    level: f64,
    stream: RngStream,
) -> Result<EstimateReport> {
    Ok(lp_pairs_with_indices(data, spec, boot, level, |b, idx| {
        let mut rng = stream.substream(b).rng();
        let m = idx.len();
        for v in idx.iter_mut() {
            *v = rng.random_range(0..m);
        }
    })?
    .report)
}

/// [`lp_pairs_bootstrap`] with the row indices of draw `b` supplied by `fill`.
pub fn lp_pairs_with_indices<F>(data: &Matrix, spec: &LpSpec, boot: &BootstrapSpec, level: f64, mut fill: F) -> Result<BootOutcome>
where
    F: FnMut(u64, &mut [usize]),
{
    check_level(level)?;
    boot.validate_for_lp()?;
    let design = LpDesign::build(data, spec)?;
    let sample = design.clone().project()?.core(spec)?;
    let mut draws = BootstrapDraws {
        center: sample.point,
        ..BootstrapDraws::default()
    };
    let mut idx = vec![0usize; design.observations()];
    for b in 0..boot.draws as u64 {
        fill(b, &mut idx);
        let stat = design
            .select(&idx)
            .project()
            .and_then(|proj| proj.core(spec))
            .ok()
            .filter(|c| c.point.is_finite() && c.se.is_finite());
        match stat {
            Some(c) if boot.interval == IntervalKind::Efron => draws.point_stats.push(c.point),
            Some(c) if c.se > 0.0 => {
                draws.point_stats.push(c.point);
                draws.se_stats.push(c.se);
                draws.t_stats.push((c.point - sample.point) / c.se);
            }
            _ => draws.failed += 1,
        }
    }
    if boot.too_many_failures(draws.failed) {
        return Err(Error::TooManyFailedDraws {
            failed: draws.failed,
            total: boot.draws,
        });
    }
    let interval = match boot.interval {
        IntervalKind::Efron => efron_interval(&draws.point_stats, level)?,
        IntervalKind::PercentileT => percentile_t_interval(sample.point, sample.se, &draws.t_stats, level)?,
    };
    Ok(BootOutcome {
        report: EstimateReport {
            point: sample.point,
            se: sample.se,
            interval,
            level,
            effective_sample: sample.effective_sample,
            method: Method::LpLaPairs,
            horizon: spec.horizon,
            degrees_of_freedom_used: sample.dof,
            flags: ReportFlags {
                failed_draws: draws.failed,
                draws: boot.draws,
                ..ReportFlags::default()
            },
        },
        draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{derive_stream, rng::purpose};
    use crate::var::{simulate, InitialCondition, InnovationSpec};

    fn ar1(rho: f64, t: usize, seed: u64) -> Matrix {
        simulate(
            &VarCoefficients::ar1(rho),
            &InnovationSpec::standard(1),
            t,
            &InitialCondition::Zero,
            derive_stream(seed, 0, purpose::SIMULATION),
        )
        .unwrap()
        .data
    }

    fn var4(rho: f64, seed: u64) -> Matrix {
        let dgp = crate::var::bivariate_var4_dgp(rho).unwrap();
        simulate(
            &dgp.coefficients,
            &dgp.innovations,
            240,
            &InitialCondition::Zero,
            derive_stream(seed, 0, purpose::SIMULATION),
        )
        .unwrap()
        .data
    }

    #[test]
    fn symmetric_t_stats_reduce_to_delta_form() {
        let q = 1.7;
        let t: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { q } else { -q }).collect();
        let (lo, hi) = percentile_t_interval(0.4, 0.2, &t, 0.9).unwrap();
        assert!((lo - (0.4 - 0.2 * q)).abs() < 1e-15);
        assert!((hi - (0.4 + 0.2 * q)).abs() < 1e-15);
    }

    #[test]
    fn identical_draws_give_zero_width_efron_interval() {
        let (lo, hi) = efron_interval(&[0.3; 200], 0.9).unwrap();
        assert_eq!((lo, hi), (0.3, 0.3));
    }

    #[test]
    fn ar1_bias_formula() {
        // -(1 + 3 rho) / T for an AR(1).
        let rho = 0.6;
        let c = VarCoefficients::ar1(rho).with_intercept(Some(vec![0.0]));
        let out = pope_bias_correct(&c, &Matrix::identity(1), 100).unwrap();
        let expected = rho + (1.0 + 3.0 * rho) / 100.0;
        assert!((out.lag(1)[(0, 0)] - expected).abs() < 1e-12);
        assert_eq!(out.intercept(), Some(&[0.0][..]));
    }

    #[test]
    fn correction_vanishes_for_white_noise_at_large_t() {
        let c = VarCoefficients::ar1(0.0);
        let out = pope_bias_correct(&c, &Matrix::identity(1), 100_000).unwrap();
        assert!((out.lag(1)[(0, 0)]).abs() < 1e-3);
    }

    #[test]
    fn unit_root_fit_passes_through() {
        let c = VarCoefficients::ar1(1.0);
        assert!(matches!(
            pope_bias_correct(&c, &Matrix::identity(1), 100),
            Err(Error::NonstationaryInput { .. })
        ));
    }

    #[test]
    fn correction_is_shrunk_to_stay_stable() {
        // rho + (1 + 3 rho)/T crosses one for rho = 0.98, T = 50.
        let c = VarCoefficients::ar1(0.98);
        let out = pope_bias_correct(&c, &Matrix::identity(1), 50).unwrap();
        let r = out.lag(1)[(0, 0)];
        assert!(r < 1.0 && r > 0.98, "{r}");
    }

    #[test]
    fn lyapunov_matches_ar1_variance() {
        let a = Matrix::new(1, 1, vec![0.9]).unwrap();
        let g = lyapunov_doubling(&a, &Matrix::identity(1));
        assert!((g[(0, 0)] - 1.0 / (1.0 - 0.81)).abs() < 1e-10);
    }

    #[test]
    fn multivariate_correction_agrees_with_finite_sum_formula() {
        // Complex eigenvalue pair: the bracket must still be real.
        let c = VarCoefficients::new(
            vec![
                Matrix::from_rows(&[vec![0.5, -0.4], vec![0.4, 0.5]]).unwrap(),
                Matrix::from_rows(&[vec![0.1, 0.0], vec![0.0, 0.1]]).unwrap(),
            ],
            Some(vec![0.0, 0.0]),
        )
        .unwrap();
        let out = pope_bias_correct(&c, &Matrix::identity(2), 200).unwrap();
        assert!(out.spectral_radius() < 1.0);
        // Same bracket from power series: sum_k [A'^k + A'^{2k+1} + sum_l lambda_l^{k+1} A'^k].
        let a = c.companion().into_matrix();
        let at = a.transpose();
        let eig = a.eigenvalues();
        let mut bracket = Matrix::zeros(4, 4);
        let mut pow = Matrix::identity(4);
        for k in 0..400 {
            let trace_term: f64 = eig
                .iter()
                .map(|&(re, im)| Complex::new(re, im).powu(k as u32 + 1).re)
                .sum();
            bracket = bracket.add(&pow.scale(1.0 + trace_term));
            pow = pow.matmul(&at);
        }
        let mut odd = at.clone();
        let at2 = at.matmul(&at);
        for _ in 0..400 {
            bracket = bracket.add(&odd);
            odd = odd.matmul(&at2);
        }
        let mut s = Matrix::zeros(4, 4);
        s.set_block(0, 0, &Matrix::identity(2));
        let g = lyapunov_doubling(&a, &s);
        let bias = s.matmul(&bracket).matmul(&g.inverse().unwrap()).scale(-1.0 / 200.0);
        let expected = c.stacked().sub(&bias.block(0, 0, 2, 4));
        assert!(out.stacked().sub(&expected).max_abs() < 1e-10);
    }

    #[test]
    fn bias_correction_moves_ar1_mean_toward_truth() {
        let (rho, t, reps) = (0.9, 100, 10_000);
        let (mut raw, mut corrected) = (0.0, 0.0);
        for r in 0..reps {
            let data = simulate(
                &VarCoefficients::ar1(rho),
                &InnovationSpec::standard(1),
                t,
                &InitialCondition::BurnIn(200),
                derive_stream(77, r, purpose::SIMULATION),
            )
            .unwrap()
            .data;
            let fit = fit_var(&data, 1).unwrap();
            let a = fit.coefficients.lag(1)[(0, 0)];
            raw += a;
            corrected += match pope_bias_correct(&fit.coefficients, &fit.residual_covariance(), fit.effective_sample()) {
                Ok(c) => c.lag(1)[(0, 0)],
                Err(_) => a,
            };
        }
        let (raw, corrected) = (raw / reps as f64, corrected / reps as f64);
        assert!((corrected - rho).abs() < (raw - rho).abs(), "raw {raw}, corrected {corrected}");
    }

    #[test]
    fn initial_blocks_come_from_the_sample() {
        let data = var4(0.5, 3);
        let engine = WildRecursive::new(&data, 4, true, MultiplierLaw::StandardNormal, derive_stream(3, 0, purpose::BOOTSTRAP)).unwrap();
        for b in 0..50 {
            let s = engine.draw(b).unwrap();
            let head = &s.as_slice()[..8];
            let found = (0..=data.rows() - 4).any(|k| &data.as_slice()[k * 2..k * 2 + 8] == head);
            assert!(found, "draw {b}");
        }
    }

    #[test]
    fn draws_follow_the_recursion() {
        let data = ar1(0.5, 100, 4);
        let engine = WildRecursive::new(&data, 1, false, MultiplierLaw::StandardNormal, derive_stream(4, 0, purpose::BOOTSTRAP)).unwrap();
        let fit = fit_var(&data, 1).unwrap();
        let (_, mult) = engine.randomness(7);
        let s = engine.draw(7).unwrap();
        let (c, a) = (fit.coefficients.intercept().unwrap()[0], fit.coefficients.lag(1)[(0, 0)]);
        for t in 1..100 {
            let expected = c + a * s[(t - 1, 0)] + mult[t - 1] * fit.residuals[(t - 1, 0)];
            assert!((s[(t, 0)] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn multipliers_have_mean_zero() {
        let data = ar1(0.5, 240, 5);
        let engine = WildRecursive::new(&data, 1, true, MultiplierLaw::StandardNormal, derive_stream(5, 0, purpose::BOOTSTRAP)).unwrap();
        let b = 400;
        let mut total = 0.0;
        let mut count = 0;
        for d in 0..b {
            let (_, m) = engine.randomness(d);
            count += m.len();
            total += m.iter().sum::<f64>();
        }
        assert!((total / count as f64).abs() < 4.0 / (count as f64).sqrt());
        let rad = WildRecursive::new(&data, 1, true, MultiplierLaw::Rademacher, derive_stream(5, 0, purpose::BOOTSTRAP)).unwrap();
        assert!(rad.randomness(0).1.iter().all(|u| u.abs() == 1.0));
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let data = var4(0.95, 8);
        let spec = LpSpec::lag_augmented(6, 1, vec![1.0, 0.0], 4);
        let boot = BootstrapSpec::with_draws(60);
        let a = lp_percentile_t(&data, &spec, &boot, 0.9, derive_stream(8, 0, purpose::BOOTSTRAP)).unwrap();
        let b = lp_percentile_t(&data, &spec, &boot, 0.9, derive_stream(8, 0, purpose::BOOTSTRAP)).unwrap();
        assert_eq!(a.interval.0.to_bits(), b.interval.0.to_bits());
        assert_eq!(a.interval.1.to_bits(), b.interval.1.to_bits());
    }

    #[test]
    fn centering_shift_is_exact_per_draw() {
        let data = var4(0.5, 9);
        let spec = LpSpec::lag_augmented(3, 1, vec![1.0, 0.0], 4);
        let out = lp_percentile_t_draws(&data, &spec, &BootstrapSpec::with_draws(60), 0.9, derive_stream(9, 0, 1)).unwrap();
        let d = &out.draws;
        let alt_center = out.report.point;
        for b in 0..d.t_stats.len() {
            let alt = (d.point_stats[b] - alt_center) / d.se_stats[b];
            let shift = (d.center - alt_center) / d.se_stats[b];
            assert!((alt - d.t_stats[b] - shift).abs() < 1e-12);
        }
    }

    #[test]
    fn batch_matches_single_target_runs() {
        let data = var4(0.5, 10);
        let boot = BootstrapSpec::with_draws(50);
        let stream = derive_stream(10, 0, 1);
        let lp = LpSpec::lag_augmented(6, 1, vec![1.0, 0.0], 4);
        let ar = ArSpec::lag_augmented(6, 1, vec![1.0, 0.0], 4);
        let batch = wild_recursive_batch(
            &data,
            4,
            &boot,
            0.9,
            stream,
            &[BootTarget::LpPercentileT(lp.clone()), BootTarget::ArLaEfron(ar.clone())],
        )
        .unwrap();
        let single_lp = lp_percentile_t(&data, &lp, &boot, 0.9, stream).unwrap();
        let single_ar = arla_efron(&data, &ar, &boot.efron(), 0.9, stream).unwrap();
        assert_eq!(batch[0].as_ref().unwrap().report, single_lp);
        assert_eq!(batch[1].as_ref().unwrap().report, single_ar);
    }

    #[test]
    fn pairs_identity_resample_reproduces_sample() {
        let data = ar1(0.5, 200, 11);
        let spec = LpSpec::lag_augmented(2, 0, vec![1.0], 1);
        let boot = BootstrapSpec::with_draws(50).pairs().efron();
        let out = lp_pairs_with_indices(&data, &spec, &boot, 0.9, |_, idx| {
            for (i, v) in idx.iter_mut().enumerate() {
                *v = i;
            }
        })
        .unwrap();
        assert!(out.draws.point_stats.iter().all(|&p| (p - out.report.point).abs() < 1e-12));
    }

    #[test]
    fn spec_validation() {
        assert!(BootstrapSpec::with_draws(49).validate().is_err());
        let data = ar1(0.5, 100, 1);
        let spec = LpSpec::lag_augmented(1, 0, vec![1.0], 1);
        let efron = BootstrapSpec::with_draws(50).efron();
        assert!(lp_percentile_t(&data, &spec, &efron, 0.9, derive_stream(1, 0, 1)).is_err());
        let ar = ArSpec::lag_augmented(1, 0, vec![1.0], 1);
        assert!(arla_efron(&data, &ar, &BootstrapSpec::with_draws(50), 0.9, derive_stream(1, 0, 1)).is_err());
        assert!(lp_percentile_t(&data, &spec, &efron.pairs(), 0.9, derive_stream(1, 0, 1)).is_ok());
    }

    #[test]
    fn explosive_bootstrap_dgp_is_reported() {
        // An explosive sample yields an explosive bootstrap DGP whose draws
        // overflow; they are dropped and counted.
        let data = simulate(
            &VarCoefficients::ar1(1.08),
            &InnovationSpec::standard(1),
            240,
            &InitialCondition::Zero,
            derive_stream(12, 0, 0),
        )
        .unwrap()
        .data;
        let engine = WildRecursive::new(&data, 1, true, MultiplierLaw::StandardNormal, derive_stream(12, 0, 1)).unwrap();
        assert!(engine.nonstationary_fit());
        let spec = LpSpec::lag_augmented(1, 0, vec![1.0], 1);
        let r = lp_percentile_t(&data, &spec, &BootstrapSpec::with_draws(50), 0.9, derive_stream(12, 0, 1));
        match r {
            Ok(rep) => assert!(rep.flags.nonstationary_fit),
            Err(e) => assert!(matches!(e, Error::TooManyFailedDraws { .. }), "{e}"),
        }
    }
}
