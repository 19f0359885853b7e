//! Monte Carlo coverage experiments.
//!
//! Each repetition simulates one sample and evaluates every `(method,
//! horizon)` cell on it. Randomness is keyed by `(root_seed, repetition,
//! purpose)`, so results do not depend on the number of worker threads.

mod config;
mod table;

pub use config::{ArchParams, DgpSpec, ExperimentFile, McExperimentConfig, MethodSpec, OutputPaths, SCHEMA_VERSION};
pub use table::{compare_tables, coverage_se, CellMismatch, McResultTable, McRow};

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::ar::{ar_point_se, fit_var, ArSpec, VarFit};
use crate::bootstrap::{lp_pairs_bootstrap, wild_recursive_batch, BootTarget, BootstrapSpec};
use crate::error::{Error, Result};
use crate::lp::{delta_report, lp_core, LpSpec};
use crate::numeric::rng::purpose;
use crate::numeric::stats::{median, normal_critical_value};
use crate::numeric::{derive_stream, Matrix};
use crate::report::{EstimateReport, Method};
use crate::var::{simulate, InitialCondition, VarDgp};

/// Result of one method at one horizon in one repetition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellOutcome {
    Ok { covers: bool, length: f64 },
    Failed,
}

impl CellOutcome {
    fn from_report(report: Result<EstimateReport>, truth: f64) -> Self {
        match report {
            Ok(r) if r.interval.0.is_finite() && r.interval.1.is_finite() => CellOutcome::Ok {
                covers: r.covers(truth),
                length: r.length(),
            },
            _ => CellOutcome::Failed,
        }
    }
}

/// Coverage, median length and failure count over repetitions.
pub fn summarize_cell(outcomes: &[CellOutcome]) -> (f64, f64, usize, usize) {
    let mut lengths = Vec::with_capacity(outcomes.len());
    let mut covered = 0;
    for o in outcomes {
        if let CellOutcome::Ok { covers, length } = *o {
            covered += usize::from(covers);
            lengths.push(length);
        }
    }
    let failed = outcomes.len() - lengths.len();
    if lengths.is_empty() {
        return (f64::NAN, f64::NAN, failed, 0);
    }
    let coverage = covered as f64 / lengths.len() as f64;
    (coverage, median(&lengths).unwrap_or(f64::NAN), failed, covered)
}

/// One repetition: the sample digest and outcomes laid out method-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RepResult {
    pub digest: u64,
    pub cells: Vec<CellOutcome>,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv_bytes(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

pub(crate) fn fnv_mix(a: u64, b: u64) -> u64 {
    fnv_bytes(a, &b.to_le_bytes())
}

fn sample_digest(data: &Matrix) -> u64 {
    data.as_slice()
        .iter()
        .fold(FNV_OFFSET, |h, x| fnv_bytes(h, &x.to_bits().to_le_bytes()))
}

struct Prepared<'a> {
    config: &'a McExperimentConfig,
    dgp: &'a VarDgp,
    nu: Vec<f64>,
    truths: Vec<f64>,
    boot: BootstrapSpec,
}

impl<'a> Prepared<'a> {
    fn new(config: &'a McExperimentConfig, dgp: &'a VarDgp) -> Self {
        let nu = config.shock_weights(dgp.n());
        let h_max = config.horizons.iter().copied().max().unwrap_or(0);
        let irf = dgp.coefficients.impulse_responses(h_max);
        let truths = config
            .horizons
            .iter()
            .map(|&h| irf.response(config.response_variable, &nu, h))
            .collect();
        let boot = BootstrapSpec {
            bias_correct: config.bias_correct,
            ..BootstrapSpec::with_draws(config.bootstrap_draws)
        };
        Self {
            config,
            dgp,
            nu,
            truths,
            boot,
        }
    }

    fn lp_spec(&self, augmented: bool, h: usize, q: usize) -> LpSpec {
        let i = self.config.response_variable;
        if augmented {
            LpSpec::lag_augmented(h, i, self.nu.clone(), q)
        } else {
            LpSpec::non_augmented(h, i, self.nu.clone(), q)
        }
    }

    fn rep(&self, r: u64) -> RepResult {
        let c = self.config;
        let horizons = &c.horizons;
        let n_cells = c.methods.len() * horizons.len();
        let init = match c.burn_in {
            0 => InitialCondition::Zero,
            b => InitialCondition::BurnIn(b),
        };
        let stream = derive_stream(c.root_seed, r, purpose::SIMULATION);
        let data = match simulate(&self.dgp.coefficients, &self.dgp.innovations, c.sample_size, &init, stream) {
            Ok(s) => s.data,
            Err(_) => {
                return RepResult {
                    digest: FNV_OFFSET,
                    cells: vec![CellOutcome::Failed; n_cells],
                }
            }
        };
        let mut cells = vec![CellOutcome::Failed; n_cells];
        let slot = |m: usize, k: usize| m * horizons.len() + k;
        let mut fits: BTreeMap<usize, Option<VarFit>> = BTreeMap::new();
        let mut boot_groups: BTreeMap<usize, Vec<(usize, BootTarget)>> = BTreeMap::new();

        for (m, spec) in c.methods.iter().enumerate() {
            let q = c.lags_for(spec);
            for (k, &h) in horizons.iter().enumerate() {
                let truth = self.truths[k];
                let i = c.response_variable;
                let report = match spec.method {
                    Method::LpLa | Method::Lp => {
                        let s = self.lp_spec(spec.method == Method::LpLa, h, q);
                        lp_core(&data, &s).map(|core| delta_report(core, &s, c.level))
                    }
                    Method::Ar | Method::ArLa => {
                        let a = if spec.method == Method::Ar {
                            ArSpec {
                                bias_correct: c.bias_correct,
                                ..ArSpec::textbook(h, i, self.nu.clone(), q)
                            }
                        } else {
                            ArSpec::lag_augmented(h, i, self.nu.clone(), q)
                        };
                        let fit = fits.entry(a.lags_estimated).or_insert_with(|| fit_var(&data, a.lags_estimated).ok());
                        match fit {
                            Some(fit) => Ok(ar_delta_report(fit, &a, c.level)),
                            None => Err(Error::EmptyInput),
                        }
                    }
                    Method::LpLaPairs => {
                        let s = self.lp_spec(true, h, q);
                        let stream = derive_stream(c.root_seed, r, purpose::PAIRS);
                        lp_pairs_bootstrap(&data, &s, &self.boot.pairs(), c.level, stream)
                    }
                    Method::LpLaBootstrap | Method::LpBootstrap => {
                        let s = self.lp_spec(spec.method == Method::LpLaBootstrap, h, q);
                        boot_groups.entry(q).or_default().push((slot(m, k), BootTarget::LpPercentileT(s)));
                        continue;
                    }
                    Method::ArLaEfron => {
                        let a = ArSpec::lag_augmented(h, i, self.nu.clone(), q);
                        boot_groups.entry(q).or_default().push((slot(m, k), BootTarget::ArLaEfron(a)));
                        continue;
                    }
                };
                cells[slot(m, k)] = CellOutcome::from_report(report, truth);
            }
        }

        for (q, group) in boot_groups {
            let (slots, targets): (Vec<usize>, Vec<BootTarget>) = group.into_iter().unzip();
            let stream = derive_stream(c.root_seed, r, purpose::bootstrap_for_lag(q));
            if let Ok(results) = wild_recursive_batch(&data, q, &self.boot, c.level, stream, &targets) {
                for (s, res) in slots.into_iter().zip(results) {
                    let truth = self.truths[s % horizons.len()];
                    cells[s] = CellOutcome::from_report(res.map(|o| o.report), truth);
                }
            }
        }
        RepResult {
            digest: sample_digest(&data),
            cells,
        }
    }
}

fn ar_delta_report(fit: &VarFit, spec: &ArSpec, level: f64) -> EstimateReport {
    let (point, se, flags) = ar_point_se(fit, spec);
    let half = normal_critical_value(level) * se;
    EstimateReport {
        point,
        se,
        interval: (point - half, point + half),
        level,
        effective_sample: fit.effective_sample(),
        method: spec.method(),
        horizon: spec.horizon,
        degrees_of_freedom_used: None,
        flags,
    }
}

/// Outcomes of repetition `r` alone.
pub fn run_repetition(config: &McExperimentConfig, dgp: &VarDgp, r: u64) -> Result<RepResult> {
    config.validate_with(dgp)?;
    Ok(Prepared::new(config, dgp).rep(r))
}

/// Runs all repetitions on `threads` workers (0 picks the rayon default)
/// without checking failure shares.
pub fn run_experiment_unchecked(config: &McExperimentConfig, dgp: &VarDgp, threads: usize) -> Result<McResultTable> {
    config.validate_with(dgp)?;
    let start = Instant::now();
    let prepared = Prepared::new(config, dgp);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::ConfigInvalid(format!("thread pool: {e}")))?;
    let reps: Vec<RepResult> =
        pool.install(|| (0..config.reps as u64).into_par_iter().map(|r| prepared.rep(r)).collect());

    let sample_digest = reps.iter().fold(FNV_OFFSET, |h, r| fnv_mix(h, r.digest));
    let dgp_label = config.label();
    let n_h = config.horizons.len();
    let mut rows = Vec::with_capacity(config.methods.len() * n_h);
    let mut column = Vec::with_capacity(reps.len());
    for (m, spec) in config.methods.iter().enumerate() {
        for (k, &h) in config.horizons.iter().enumerate() {
            column.clear();
            column.extend(reps.iter().map(|r| r.cells[m * n_h + k]));
            let (coverage, median_length, failed, covered) = summarize_cell(&column);
            rows.push(McRow {
                dgp: dgp_label.clone(),
                method: spec.label(),
                horizon: h,
                coverage,
                median_length,
                failed,
                reps: config.reps,
                covered,
            });
        }
    }
    Ok(McResultTable {
        rows,
        sample_digest,
        wall_time: start.elapsed(),
    })
}

/// Fails if some cell lost more than the tolerated share of repetitions.
pub fn check_failures(table: &McResultTable) -> Result<()> {
    match table
        .rows
        .iter()
        .find(|r| r.failed as f64 > crate::bootstrap::MAX_FAILED_SHARE * r.reps as f64)
    {
        Some(r) => Err(Error::TooManyFailedReps {
            cell: format!("{} / {} / h={}", r.dgp, r.method, r.horizon),
            failed: r.failed,
            total: r.reps,
        }),
        None => Ok(()),
    }
}

/// Builds the DGP (file paths relative to the working directory), runs the
/// experiment and checks failure shares.
pub fn run_experiment(config: &McExperimentConfig, threads: usize) -> Result<McResultTable> {
    let dgp = config.dgp.build(None)?;
    let table = run_experiment_unchecked(config, &dgp, threads)?;
    check_failures(&table)?;
    Ok(table)
}
