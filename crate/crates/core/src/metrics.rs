use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tracking statistics for one episode. `e = θ_d − θ_meas`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// deg
    pub e_max: f64,
    /// deg
    pub e_min: f64,
    /// Mean absolute error as a percentage of the reference peak-to-peak range.
    pub abs_e_ave_pct: f64,
    /// deg
    pub rmse: f64,
    /// Population variance, deg².
    pub var: f64,
}

impl MetricsReport {
    pub const COLUMNS: [&'static str; 5] = ["e_max_deg", "e_min_deg", "abs_e_ave_pct", "rmse_deg", "var_deg2"];

    pub fn values(&self) -> [f64; 5] {
        [self.e_max, self.e_min, self.abs_e_ave_pct, self.rmse, self.var]
    }
}

/// Metrics from paired reference and error samples.
///
/// A reference with zero range yields `abs_e_ave_pct = 0` when every error
/// is zero and infinity otherwise.
pub fn compute_metrics_from(references: &[f64], errors: &[f64]) -> Result<MetricsReport> {
    if errors.is_empty() {
        return Err(Error::EmptyTrace);
    }
    if references.len() != errors.len() {
        return Err(Error::Input(format!(
            "{} reference samples for {} errors",
            references.len(),
            errors.len()
        )));
    }
    let n = errors.len() as f64;
    let (mut e_max, mut e_min) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut sum, mut sum_abs, mut sum_sq) = (0.0, 0.0, 0.0);
    for &e in errors {
        e_max = e_max.max(e);
        e_min = e_min.min(e);
        sum += e;
        sum_abs += e.abs();
        sum_sq += e * e;
    }
    let mean = sum / n;
    let mean_sq = sum_sq / n;
    let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    let (lo, hi) = references
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
            (lo.min(r), hi.max(r))
        });
    let range = hi - lo;
    let mean_abs = sum_abs / n;
    let abs_e_ave_pct = if range > 0.0 {
        100.0 * mean_abs / range
    } else if mean_abs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(MetricsReport {
        e_max,
        e_min,
        abs_e_ave_pct,
        rmse: mean_sq.sqrt(),
        var,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(compute_metrics_from(&[], &[]), Err(Error::EmptyTrace)));
    }

    #[test]
    fn zero_error() {
        let m = compute_metrics_from(&[5.0, 30.0, 55.0], &[0.0; 3]).unwrap();
        assert_eq!(m.values(), [0.0; 5]);
    }

    #[test]
    fn alternating_unit_error() {
        let refs: Vec<f64> = (0..100).map(|k| 5.0 + 50.0 * k as f64 / 99.0).collect();
        let errs: Vec<f64> = (0..100).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let m = compute_metrics_from(&refs, &errs).unwrap();
        assert_relative_eq!(m.rmse, 1.0, max_relative = 1e-15);
        assert_relative_eq!(m.var, 1.0, max_relative = 1e-15);
        assert_relative_eq!(m.abs_e_ave_pct, 2.0, max_relative = 1e-14);
        assert_eq!((m.e_max, m.e_min), (1.0, -1.0));
    }

    #[test]
    fn flat_reference() {
        assert_eq!(
            compute_metrics_from(&[3.0, 3.0], &[0.0, 0.0]).unwrap().abs_e_ave_pct,
            0.0
        );
        assert!(compute_metrics_from(&[3.0, 3.0], &[0.1, 0.0])
            .unwrap()
            .abs_e_ave_pct
            .is_infinite());
    }

    proptest! {
        #[test]
        fn variance_identity(errs in proptest::collection::vec(-20.0f64..20.0, 1..400)) {
            let refs: Vec<f64> = (0..errs.len()).map(|k| k as f64).collect();
            let m = compute_metrics_from(&refs, &errs).unwrap();
            let mean = errs.iter().sum::<f64>() / errs.len() as f64;
            prop_assert!((m.var - (m.rmse * m.rmse - mean * mean)).abs() <= 1e-9);
            prop_assert!(m.var >= 0.0 && m.rmse >= 0.0 && m.e_min <= m.e_max);
        }

        #[test]
        fn order_insensitive(mut errs in proptest::collection::vec(-20.0f64..20.0, 2..200)) {
            let refs: Vec<f64> = (0..errs.len()).map(|k| (k as f64).sin()).collect();
            let a = compute_metrics_from(&refs, &errs).unwrap();
            errs.reverse();
            let mut refs_rev = refs.clone();
            refs_rev.reverse();
            let b = compute_metrics_from(&refs_rev, &errs).unwrap();
            prop_assert_eq!((a.e_max, a.e_min), (b.e_max, b.e_min));
            prop_assert!((a.rmse - b.rmse).abs() <= 1e-12);
            prop_assert!((a.var - b.var).abs() <= 1e-12);
            prop_assert!((a.abs_e_ave_pct - b.abs_e_ave_pct).abs() <= 1e-12);
        }
    }
}
