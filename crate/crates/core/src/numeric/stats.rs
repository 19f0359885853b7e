//! Order statistics and critical values.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

/// Type-7 sample quantile (linear interpolation between order statistics,
/// `h = (n - 1) p`).
pub fn quantile(samples: &[f64], p: f64) -> Result<f64> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, p)
}

/// [`quantile`] on data that is already sorted ascending.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::DomainError(format!("probability {p} outside [0, 1]")));
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Exact sample median (mean of the two central order statistics for even n).
pub fn median(samples: &[f64]) -> Result<f64> {
    quantile(samples, 0.5)
}

/// `z_{1 - alpha/2}` for a two-sided interval at the given coverage level.
pub fn normal_critical_value(level: f64) -> f64 {
    let alpha = 1.0 - level;
    Normal::standard().inverse_cdf(1.0 - alpha / 2.0)
}

/// Student-t analogue of [`normal_critical_value`].
pub fn student_t_critical_value(level: f64, dof: usize) -> f64 {
    let alpha = 1.0 - level;
    StudentsT::new(0.0, 1.0, dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(1.0 - alpha / 2.0)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with divisor `n - 1`.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn type7_examples() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.5).unwrap(), 3.0);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.5);
        // h = 3 * 0.05 = 0.15  =>  10 + 0.15 * 10
        assert!((quantile(&[10.0, 20.0, 30.0, 40.0], 0.05).unwrap() - 11.5).abs() < 1e-12);
        assert_eq!(quantile(&[4.0, 1.0, 3.0, 2.0], 1.0).unwrap(), 4.0);
    }

    #[test]
    fn empty_input_rejected() {
        assert_eq!(quantile(&[], 0.5), Err(Error::EmptyInput));
        assert!(quantile(&[1.0], 1.5).is_err());
    }

    #[test]
    fn critical_values() {
        assert!((normal_critical_value(0.90) - 1.6448536269514722).abs() < 1e-9);
        assert!((normal_critical_value(0.95) - 1.959963984540054).abs() < 1e-9);
        // t_{0.95, 16}
        assert!((student_t_critical_value(0.90, 16) - 1.745883676).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn monotone_and_bounded(
            xs in prop::collection::vec(-1e3f64..1e3, 1..50),
            p1 in 0.0f64..=1.0,
            p2 in 0.0f64..=1.0,
        ) {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            let qlo = quantile(&xs, lo).unwrap();
            let qhi = quantile(&xs, hi).unwrap();
            let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(qlo <= qhi + 1e-12);
            prop_assert!(qlo >= min && qhi <= max);
        }
    }
}
