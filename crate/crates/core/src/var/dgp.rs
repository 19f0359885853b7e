use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Matrix;
use crate::var::{InnovationSpec, VarCoefficients};

/// Coefficients plus innovation law: everything needed to simulate.
#[derive(Debug, Clone, PartialEq)]
pub struct VarDgp {
    pub coefficients: VarCoefficients,
    pub innovations: InnovationSpec,
}

impl VarDgp {
    pub fn n(&self) -> usize {
        self.coefficients.n()
    }

    pub fn from_file(file: &CoefficientFile) -> Result<Self> {
        file.to_dgp()
    }
}

/// Gaussian AR(1) with unit innovation variance.
pub fn ar1_dgp(rho: f64) -> VarDgp {
    VarDgp {
        coefficients: VarCoefficients::ar1(rho),
        innovations: InnovationSpec::standard(1),
    }
}

/// `y1_t = rho y1_{t-1} + u1_t`, `(1 - L/2)^4 y2_t = y1_{t-1} / 2 + u2_t`.
pub fn bivariate_var4_coefficients(rho: f64) -> VarCoefficients {
    const OWN: [f64; 4] = [2.0, -1.5, 0.5, -0.0625];
    let blocks = (0..4)
        .map(|l| {
            let mut a = Matrix::zeros(2, 2);
            a[(1, 1)] = OWN[l];
            if l == 0 {
                a[(0, 0)] = rho;
                a[(1, 0)] = 0.5;
            }
            a
        })
        .collect();
    VarCoefficients::new(blocks, None).expect("2 x 2 blocks")
}

/// [`bivariate_var4_coefficients`] with Gaussian innovations of unit
/// variance and correlation 0.3.
pub fn bivariate_var4_dgp(rho: f64) -> Result<VarDgp> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::DomainError(format!("rho = {rho} is outside [-1, 1]")));
    }
    let cov = Matrix::from_rows(&[vec![1.0, 0.3], vec![0.3, 1.0]])?;
    Ok(VarDgp {
        coefficients: bivariate_var4_coefficients(rho),
        innovations: InnovationSpec::iid_gaussian(cov)?,
    })
}

/// JSON form of a VAR DGP.
///
/// `lag_blocks[l]` holds `A_{l+1}` in row-major order (`n * n` entries).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientFile {
    pub n: usize,
    pub p: usize,
    pub lag_blocks: Vec<Vec<f64>>,
    #[serde(default)]
    pub intercept: Option<Vec<f64>>,
    pub innovation: InnovationFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum InnovationFile {
    IidGaussian {
        covariance: Vec<Vec<f64>>,
    },
    Arch1 {
        alpha0: f64,
        alpha1: f64,
        /// Defaults to the identity.
        #[serde(default)]
        loading: Option<Vec<Vec<f64>>>,
    },
}

impl CoefficientFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    pub fn to_dgp(&self) -> Result<VarDgp> {
        let (n, p) = (self.n, self.p);
        if n == 0 || p == 0 {
            return Err(Error::ConfigInvalid("n and p must be positive".into()));
        }
        if self.lag_blocks.len() != p {
            return Err(Error::ConfigInvalid(format!(
                "lag_blocks: expected {p} blocks, found {}",
                self.lag_blocks.len()
            )));
        }
        let mut blocks = Vec::with_capacity(p);
        for (l, b) in self.lag_blocks.iter().enumerate() {
            if b.len() != n * n {
                return Err(Error::ConfigInvalid(format!(
                    "lag_blocks[{l}]: expected {} entries, found {}",
                    n * n,
                    b.len()
                )));
            }
            blocks.push(Matrix::new(n, n, b.clone())?);
        }
        let coefficients = VarCoefficients::new(blocks, self.intercept.clone())
            .map_err(|e| Error::ConfigInvalid(format!("intercept: {e}")))?;
        let innovations = match &self.innovation {
            InnovationFile::IidGaussian { covariance } => {
                InnovationSpec::iid_gaussian(square(covariance, n, "innovation.params.covariance")?)
            }
            InnovationFile::Arch1 { alpha0, alpha1, loading } => {
                let loading = match loading {
                    Some(rows) => square(rows, n, "innovation.params.loading")?,
                    None => Matrix::identity(n),
                };
                InnovationSpec::arch1(*alpha0, *alpha1, loading)
            }
        }
        .map_err(|e| Error::ConfigInvalid(format!("innovation: {e}")))?;
        Ok(VarDgp {
            coefficients,
            innovations,
        })
    }

    pub fn from_dgp(dgp: &VarDgp) -> Self {
        let c = &dgp.coefficients;
        let rows = |m: &Matrix| (0..m.rows()).map(|i| m.row(i).to_vec()).collect();
        let innovation = match &dgp.innovations {
            InnovationSpec::IidGaussian { covariance, .. } => InnovationFile::IidGaussian {
                covariance: rows(covariance),
            },
            InnovationSpec::Arch1 { alpha0, alpha1, loading } => InnovationFile::Arch1 {
                alpha0: *alpha0,
                alpha1: *alpha1,
                loading: Some(rows(loading)),
            },
        };
        Self {
            n: c.n(),
            p: c.p(),
            lag_blocks: c.lag_blocks().iter().map(|b| b.as_slice().to_vec()).collect(),
            intercept: c.intercept().map(<[f64]>::to_vec),
            innovation,
        }
    }
}

fn square(rows: &[Vec<f64>], n: usize, field: &str) -> Result<Matrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::ConfigInvalid(format!("{field}: expected a {n} x {n} matrix")));
    }
    Matrix::from_rows(rows)
}
