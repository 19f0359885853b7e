//! Asymptotic variances of three impulse response estimators in the
//! homoskedastic stationary AR(1) model, and the `(|rho|, h)` indifference
//! curves between them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsyVarTriple {
    /// Lag-augmented LP: `sum_{l<h} rho^{2l}`.
    pub lp_la: f64,
    /// Non-augmented LP.
    pub lp_na: f64,
    /// Lag-augmented AR: `(h rho^{h-1})^2`.
    pub ar_la: f64,
    pub rho: f64,
    pub horizon: usize,
}

/// Asymptotic variances of `sqrt(T)` times each estimator of `rho^h`.
pub fn asyvar(rho: f64, h: usize) -> Result<AsyVarTriple> {
    if !(rho.abs() < 1.0) {
        return Err(Error::DomainError(format!("|rho| = {} must be below 1", rho.abs())));
    }
    if h == 0 {
        return Err(Error::DomainError("horizon must be at least 1".into()));
    }
    let r2 = rho * rho;
    let lp_la: f64 = (0..h).map(|l| r2.powi(l as i32)).sum();
    let tail: f64 = (1..h).map(|l| r2.powi(l as i32)).sum();
    let lp_na = lp_la + tail - (2 * h - 1) as f64 * r2.powi(h as i32);
    let ar_la = (h as f64 * rho.powi(h as i32 - 1)).powi(2);
    Ok(AsyVarTriple {
        lp_la,
        lp_na,
        ar_la,
        rho,
        horizon: h,
    })
}

/// Root of an increasing function on `[lo, hi]` by bisection.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    debug_assert!(f(lo) <= 0.0 && f(hi) >= 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `rho_lower(h)`: lag-augmented LP is weakly more efficient than
/// lag-augmented AR iff `|rho| >= rho_lower(h)`.
///
/// Solves `sum_{m<h} x^m = h^2` for `x = rho^{-2}` on `[1, h^2]`.
pub fn indifference_lp_vs_arla(h: usize) -> Result<f64> {
    if h < 2 {
        return Err(Error::DomainError("the indifference point needs h >= 2".into()));
    }
    let target = (h * h) as f64;
    let f = |x: f64| (0..h).map(|m| x.powi(m as i32)).sum::<f64>() - target;
    let x = bisect(f, 1.0, target);
    Ok(x.sqrt().recip())
}

/// `rho_upper(h)`: lag-augmented LP is weakly more efficient than
/// non-augmented LP iff `|rho| <= rho_upper(h)`.
///
/// Solves `sum_{l=1}^{h-1} x^l = 2h - 1` for `x = rho^{-2}` on `[1, 2h]`.
pub fn indifference_lp_vs_lpna(h: usize) -> Result<f64> {
    if h == 1 {
        return Err(Error::UndefinedAtH1);
    }
    if h == 0 {
        return Err(Error::DomainError("horizon must be at least 1".into()));
    }
    let target = (2 * h - 1) as f64;
    let f = |x: f64| (1..h).map(|l| x.powi(l as i32)).sum::<f64>() - target;
    let x = bisect(f, 1.0, 2.0 * h as f64);
    Ok(x.sqrt().recip())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_example() {
        let a = asyvar(0.5, 3).unwrap();
        assert!((a.lp_la - 1.3125).abs() < 1e-15);
        assert!((a.ar_la - 0.5625).abs() < 1e-15);
        assert!((a.lp_na - 1.546875).abs() < 1e-15);
    }

    #[test]
    fn first_horizon_and_white_noise() {
        for rho in [-0.9, 0.0, 0.3, 0.99] {
            let a = asyvar(rho, 1).unwrap();
            assert_eq!((a.lp_la, a.ar_la), (1.0, 1.0));
        }
        let w = asyvar(0.0, 5).unwrap();
        assert_eq!((w.lp_la, w.lp_na, w.ar_la), (1.0, 1.0, 0.0));
    }

    #[test]
    fn domain() {
        assert!(asyvar(1.0, 2).is_err());
        assert!(asyvar(-1.0, 2).is_err());
        assert_eq!(indifference_lp_vs_lpna(1), Err(Error::UndefinedAtH1));
        assert!(indifference_lp_vs_arla(1).is_err());
    }

    #[test]
    fn closed_forms() {
        let third = 3f64.sqrt().recip();
        assert!((indifference_lp_vs_arla(2).unwrap() - third).abs() < 1e-12);
        assert!((indifference_lp_vs_lpna(2).unwrap() - third).abs() < 1e-12);
        // x^2 + x + 1 = 9 and x^2 + x = 5.
        let lower = ((-1.0 + 33f64.sqrt()) / 2.0).sqrt().recip();
        let upper = ((-1.0 + 21f64.sqrt()) / 2.0).sqrt().recip();
        assert!((indifference_lp_vs_arla(3).unwrap() - lower).abs() < 1e-12);
        assert!((indifference_lp_vs_lpna(3).unwrap() - upper).abs() < 1e-12);
    }

    #[test]
    fn grid_sign_flips_once_at_the_curves() {
        for h in 2..=60 {
            let lower = indifference_lp_vs_arla(h).unwrap();
            let upper = indifference_lp_vs_lpna(h).unwrap();
            let mut flips_ar = 0;
            let mut flips_na = 0;
            let mut prev: Option<(bool, bool)> = None;
            for k in 1..10_000 {
                let rho = k as f64 * 1e-4;
                let a = asyvar(rho, h).unwrap();
                assert!(a.lp_na >= 0.0);
                let s = (a.lp_la > a.ar_la, a.lp_la > a.lp_na);
                if let Some(p) = prev {
                    if p.0 != s.0 {
                        flips_ar += 1;
                        assert!((rho - lower).abs() <= 1e-4, "h={h}: flip at {rho}, curve {lower}");
                    }
                    if p.1 != s.1 {
                        flips_na += 1;
                        assert!((rho - upper).abs() <= 1e-4, "h={h}: flip at {rho}, curve {upper}");
                    }
                }
                prev = Some(s);
            }
            assert_eq!(flips_ar, 1, "h={h}");
            assert_eq!(flips_na, 1, "h={h}");
        }
    }

    #[test]
    fn curves_are_ordered() {
        for h in 3..=60 {
            let (lo, hi) = (indifference_lp_vs_arla(h).unwrap(), indifference_lp_vs_lpna(h).unwrap());
            assert!(0.0 < lo && lo < hi && hi < 1.0, "h={h}: {lo} {hi}");
        }
    }

    proptest! {
        #[test]
        fn lp_la_is_bounded_by_horizon(rho in -0.999f64..0.999, h in 1usize..80) {
            let a = asyvar(rho, h).unwrap();
            prop_assert!(a.lp_la >= 1.0 - 1e-12 && a.lp_la <= h as f64 + 1e-12);
            prop_assert!(a.lp_na >= -1e-12);
        }
    }
}
