use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Inference procedure that produced an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Lag-augmented LP, wild recursive percentile-t bootstrap.
    #[serde(rename = "LP-LA_b")]
    LpLaBootstrap,
    /// Lag-augmented LP, EHW delta method.
    #[serde(rename = "LP-LA")]
    LpLa,
    /// Non-augmented LP, wild recursive percentile-t bootstrap with HAR studentization.
    #[serde(rename = "LP_b")]
    LpBootstrap,
    /// Non-augmented LP, EWC HAR delta method.
    #[serde(rename = "LP")]
    Lp,
    /// Lag-augmented AR, Efron interval from the wild recursive bootstrap.
    #[serde(rename = "AR-LA_b")]
    ArLaEfron,
    /// Textbook AR, delta method.
    #[serde(rename = "AR")]
    Ar,
    /// Lag-augmented AR, delta method.
    #[serde(rename = "AR-LA")]
    ArLa,
    /// Lag-augmented LP, pairs bootstrap.
    #[serde(rename = "LP-LA_pairs")]
    LpLaPairs,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::LpLaBootstrap,
        Method::LpLa,
        Method::LpBootstrap,
        Method::Lp,
        Method::ArLaEfron,
        Method::Ar,
        Method::ArLa,
        Method::LpLaPairs,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::LpLaBootstrap => "LP-LA_b",
            Method::LpLa => "LP-LA",
            Method::LpBootstrap => "LP_b",
            Method::Lp => "LP",
            Method::ArLaEfron => "AR-LA_b",
            Method::Ar => "AR",
            Method::ArLa => "AR-LA",
            Method::LpLaPairs => "LP-LA_pairs",
        }
    }

    pub fn is_bootstrap(self) -> bool {
        matches!(
            self,
            Method::LpLaBootstrap | Method::LpBootstrap | Method::ArLaEfron | Method::LpLaPairs
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Method::ALL
            .into_iter()
            .find(|m| m.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidSpec(format!("unknown method {s:?}")))
    }
}

/// Diagnostics attached to an [`EstimateReport`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportFlags {
    /// The delta-method gradient was exactly zero.
    pub singular_jacobian: bool,
    /// The bias correction was skipped because the VAR fit had a unit or
    /// explosive root.
    pub nonstationary_fit: bool,
    /// Bootstrap draws dropped after failing.
    pub failed_draws: usize,
    /// Bootstrap draws attempted.
    pub draws: usize,
}

/// Point estimate, standard error and confidence interval for one
/// impulse response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub point: f64,
    pub se: f64,
    pub interval: (f64, f64),
    pub level: f64,
    pub effective_sample: usize,
    pub method: Method,
    pub horizon: usize,
    pub degrees_of_freedom_used: Option<usize>,
    pub flags: ReportFlags,
}

impl EstimateReport {
    pub fn length(&self) -> f64 {
        self.interval.1 - self.interval.0
    }

    pub fn covers(&self, value: f64) -> bool {
        self.interval.0 <= value && value <= self.interval.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_parse_back() {
        for m in Method::ALL {
            assert_eq!(m.label().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.label()));
        }
        assert!("LP-XX".parse::<Method>().is_err());
    }
}
