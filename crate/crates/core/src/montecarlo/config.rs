use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Matrix;
use crate::report::Method;
use crate::var::{ar1_dgp, bivariate_var4_dgp, CoefficientFile, InnovationSpec, VarDgp};

pub const SCHEMA_VERSION: u32 = 1;

/// Data generating process of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DgpSpec {
    /// `y_t = rho y_{t-1} + u_t`; Gaussian unless `arch` is given.
    Ar1 {
        rho: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        arch: Option<ArchParams>,
    },
    /// Bivariate VAR(4) with a tunable root in the first equation.
    BivariateVar4 { rho: f64 },
    /// Inline coefficient file.
    Var { coefficients: CoefficientFile },
    /// Coefficient file on disk, relative to the experiment file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchParams {
    pub alpha0: f64,
    pub alpha1: f64,
}

impl DgpSpec {
    /// Builds the DGP, reading coefficient files relative to `base_dir`.
    pub fn build(&self, base_dir: Option<&Path>) -> Result<VarDgp> {
        match self {
            DgpSpec::Ar1 { rho, arch } => {
                let mut dgp = ar1_dgp(*rho);
                if let Some(a) = arch {
                    dgp.innovations = InnovationSpec::arch1(a.alpha0, a.alpha1, Matrix::identity(1))
                        .map_err(|e| Error::ConfigInvalid(format!("dgp.arch: {e}")))?;
                }
                Ok(dgp)
            }
            DgpSpec::BivariateVar4 { rho } => {
                bivariate_var4_dgp(*rho).map_err(|e| Error::ConfigInvalid(format!("dgp.rho: {e}")))
            }
            DgpSpec::Var { coefficients } => coefficients.to_dgp(),
            DgpSpec::File { path } => {
                let full = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| Error::ConfigInvalid(format!("dgp.path {}: {e}", full.display())))?;
                CoefficientFile::from_json(&text)?.to_dgp()
            }
        }
    }

    pub fn default_label(&self) -> String {
        match self {
            DgpSpec::Ar1 { rho, arch: None } => format!("ar1(rho={rho})"),
            DgpSpec::Ar1 { rho, arch: Some(a) } => format!("ar1-arch(rho={rho},alpha1={})", a.alpha1),
            DgpSpec::BivariateVar4 { rho } => format!("var4(rho={rho})"),
            DgpSpec::Var { coefficients } => format!("var{}(n={})", coefficients.p, coefficients.n),
            DgpSpec::File { path } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "file".into()),
        }
    }
}

/// One inference method, optionally with its own estimation lag order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MethodRepr", into = "MethodRepr")]
pub struct MethodSpec {
    pub method: Method,
    pub lags: Option<usize>,
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        Self { method, lags: None }
    }

    pub fn with_lags(method: Method, lags: usize) -> Self {
        Self {
            method,
            lags: Some(lags),
        }
    }

    /// Table label; an override lag order `q` is appended as `^q`.
    pub fn label(&self) -> String {
        match self.lags {
            Some(q) => format!("{}^{q}", self.method),
            None => self.method.label().to_string(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MethodRepr {
    Name(Method),
    Full {
        method: Method,
        #[serde(default)]
        lags: Option<usize>,
    },
}

impl TryFrom<MethodRepr> for MethodSpec {
    type Error = String;

    fn try_from(r: MethodRepr) -> std::result::Result<Self, String> {
        Ok(match r {
            MethodRepr::Name(method) => MethodSpec::new(method),
            MethodRepr::Full { method, lags: Some(0) } => {
                return Err(format!("method {method}: lags must be at least 1"))
            }
            MethodRepr::Full { method, lags } => MethodSpec { method, lags },
        })
    }
}

impl From<MethodSpec> for MethodRepr {
    fn from(m: MethodSpec) -> Self {
        match m.lags {
            None => MethodRepr::Name(m.method),
            Some(lags) => MethodRepr::Full {
                method: m.method,
                lags: Some(lags),
            },
        }
    }
}

fn default_level() -> f64 {
    0.9
}

fn default_draws() -> usize {
    500
}

fn default_reps() -> usize {
    1000
}

/// A grid of `(method, horizon)` cells evaluated on shared simulated samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McExperimentConfig {
    /// Row label for the DGP; defaults to a description of `dgp`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub dgp: DgpSpec,
    pub methods: Vec<MethodSpec>,
    pub horizons: Vec<usize>,
    /// Sample length `T`.
    pub sample_size: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_draws")]
    pub bootstrap_draws: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub root_seed: u64,
    /// Estimation lag order `p`.
    pub lags: usize,
    #[serde(default)]
    pub response_variable: usize,
    /// Defaults to the first unit vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shock_weights: Option<Vec<f64>>,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "default_true")]
    pub bias_correct: bool,
}

fn default_true() -> bool {
    true
}

impl McExperimentConfig {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.dgp.default_label())
    }

    pub fn shock_weights(&self, n: usize) -> Vec<f64> {
        self.shock_weights.clone().unwrap_or_else(|| {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            e
        })
    }

    /// Lag order used by a method.
    pub fn lags_for(&self, m: &MethodSpec) -> usize {
        m.lags.unwrap_or(self.lags)
    }

    /// Structural checks that do not need the DGP.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::ConfigInvalid(format!("{field}: {msg}")));
        if self.reps == 0 {
            return bad("reps", "must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("methods", "at least one method is required".into());
        }
        if self.horizons.is_empty() {
            return bad("horizons", "at least one horizon is required".into());
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad("level", format!("{} is not in (0, 1)", self.level));
        }
        if self.lags == 0 {
            return bad("lags", "must be at least 1".into());
        }
        if self.methods.iter().any(|m| m.method.is_bootstrap())
            && self.bootstrap_draws < crate::bootstrap::MIN_DRAWS
        {
            return bad(
                "bootstrap_draws",
                format!("at least {} are required", crate::bootstrap::MIN_DRAWS),
            );
        }
        for m in &self.methods {
            let q = self.lags_for(m);
            for &h in &self.horizons {
                if h == 0 || h + q + 5 >= self.sample_size {
                    return bad(
                        "horizons",
                        format!("horizon {h} with {q} lags needs h < T - lags - 5 (T = {})", self.sample_size),
                    );
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        for m in &self.methods {
            if !seen.insert(m.label()) {
                return bad("methods", format!("{} is listed twice", m.label()));
            }
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus checks against the built DGP.
    pub fn validate_with(&self, dgp: &VarDgp) -> Result<()> {
        self.validate()?;
        let n = dgp.n();
        if self.response_variable >= n {
            return Err(Error::ConfigInvalid(format!(
                "response_variable: {} out of range for {n} series",
                self.response_variable
            )));
        }
        let w = self.shock_weights(n);
        if w.len() != n || w.iter().all(|&x| x == 0.0) {
            return Err(Error::ConfigInvalid(format!(
                "shock_weights: need {n} weights, not all zero"
            )));
        }
        Ok(())
    }
}

/// On-disk experiment description: one or more configs sharing outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub schema_version: u32,
    pub experiments: Vec<McExperimentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputPaths>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
}

impl ExperimentFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::ConfigInvalid(format!(
                "schema_version: {} is not supported (expected {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        if file.experiments.is_empty() {
            return Err(Error::ConfigInvalid("experiments: at least one is required".into()));
        }
        for (i, e) in file.experiments.iter().enumerate() {
            e.validate()
                .map_err(|err| Error::ConfigInvalid(format!("experiments[{i}].{}", strip(&err))))?;
        }
        Ok(file)
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::ConfigInvalid(s) => s.clone(),
        other => other.to_string(),
    }
}
