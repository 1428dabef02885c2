use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use super::RandomStreamSpec;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test: String,
    pub statistic: f64,
    pub degrees_of_freedom: Option<f64>,
    pub p_value: Option<f64>,
    pub sample_size: u64,
    pub level: f64,
    pub interval: Option<Interval>,
    pub passed: bool,
    pub stream: Option<RandomStreamSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }
}

/// Two-sided standard normal quantile for confidence `level`.
pub fn normal_quantile(level: f64) -> f64 {
    let n = Normal::standard();
    n.inverse_cdf(0.5 + level / 2.0)
}

/// Pearson goodness of fit of `observed` counts against category
/// probabilities `expected`. Passes when the p-value is at least `1 - level`.
pub fn chi_square(observed: &[u64], expected: &[f64], level: f64) -> Result<TestReport> {
    if observed.len() != expected.len() {
        return Err(Error::validation(
            "expected",
            format!("support mismatch: {} observed vs {} expected categories", observed.len(), expected.len()),
        ));
    }
    if observed.len() < 2 {
        return Err(Error::validation("expected", "need at least two categories"));
    }
    if expected.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::validation("expected", "expected probabilities must be strictly positive"));
    }
    let total_p: f64 = expected.iter().sum();
    let n: u64 = observed.iter().sum();
    let statistic: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &p)| {
            let e = n as f64 * p / total_p;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let df = (observed.len() - 1) as f64;
    let p_value = ChiSquared::new(df).expect("df >= 1").sf(statistic);
    Ok(TestReport {
        test: "chi-square".into(),
        statistic,
        degrees_of_freedom: Some(df),
        p_value: Some(p_value),
        sample_size: n,
        level,
        interval: None,
        passed: p_value >= 1.0 - level,
        stream: None,
    })
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, level: f64) -> Interval {
    if trials == 0 {
        return Interval { low: 0.0, high: 1.0 };
    }
    let z = normal_quantile(level);
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    Interval {
        low: (centre - half).max(0.0),
        high: (centre + half).min(1.0),
    }
}

/// Sample mean with a normal-approximation interval.
pub fn mean_interval(values: &[f64], level: f64) -> (f64, Interval) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let half = normal_quantile(level) * (var / n).sqrt();
    (mean, Interval { low: mean - half, high: mean + half })
}

#[cfg(test)]
mod unit {
    use super::*;

    #[test]
    fn proportional_counts_give_zero() {
        let r = chi_square(&[10, 20, 30], &[1.0, 2.0, 3.0], 0.99).unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert!(r.passed);
        let r = chi_square(&[25, 25, 25, 25], &[0.25; 4], 0.99).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, Some(1.0));
    }

    #[test]
    fn hand_computed_statistic() {
        // (5² + 5² + 0 + 0) / 25
        let r = chi_square(&[30, 20, 25, 25], &[0.25; 4], 0.99).unwrap();
        assert!((r.statistic - 2.0).abs() < 1e-12);
        assert_eq!(r.degrees_of_freedom, Some(3.0));
        // P(χ²_3 > 2) = 0.5724067044...
        assert!((r.p_value.unwrap() - 0.572_406_704_4).abs() < 1e-9);
    }

    #[test]
    fn support_mismatch_and_zero_expectation() {
        assert!(chi_square(&[1, 2], &[0.5, 0.25, 0.25], 0.99).is_err());
        assert!(chi_square(&[1, 2], &[1.0, 0.0], 0.99).is_err());
    }

    #[test]
    fn permutation_invariant() {
        let a = chi_square(&[12, 40, 48], &[0.1, 0.4, 0.5], 0.99).unwrap();
        let b = chi_square(&[48, 12, 40], &[0.5, 0.1, 0.4], 0.99).unwrap();
        assert!((a.statistic - b.statistic).abs() < 1e-12);
    }

    #[test]
    fn wilson_bounds() {
        let i = wilson_interval(0, 100, 0.95);
        assert_eq!(i.low, 0.0);
        assert!(i.high > 0.0 && i.high < 0.05);
        let i = wilson_interval(50, 100, 0.95);
        assert!(i.contains(0.5));
        assert!((normal_quantile(0.95) - 1.959_963_985).abs() < 1e-8);
    }
}
