use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares fit of `log |Tr⁽ⁿ⁾| = log c + n log r`, plus the curvature
/// of a quadratic fit to the same points (negative for polynomial growth).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub c: f64,
    pub r: f64,
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    pub curvature: f64,
    pub curvature_se: f64,
    pub points: usize,
}

impl GrowthFit {
    /// t-statistic of the quadratic term; strongly negative values mean the
    /// log-volume bends down, the signature of sub-exponential growth.
    pub fn curvature_t(&self) -> f64 {
        if self.curvature_se > 0.0 {
            self.curvature / self.curvature_se
        } else if self.curvature < 0.0 {
            f64::NEG_INFINITY
        } else if self.curvature > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

/// Fits `values[n]` for `n` in `range` (inclusive).
pub fn growth_rate_fit(values: &[f64], range: (usize, usize)) -> Result<GrowthFit> {
    let (lo, hi) = range;
    if hi < lo || hi >= values.len() {
        return Err(Error::validation(
            "range",
            format!("range {lo}..={hi} is outside the sequence of length {}", values.len()),
        ));
    }
    let pts: Vec<(f64, f64)> = (lo..=hi).map(|n| (n as f64, values[n])).collect();
    if pts.len() < 3 {
        return Err(Error::validation("range", "need at least 3 points"));
    }
    if let Some((n, v)) = pts.iter().find(|(_, v)| !(*v >= 1.0)) {
        return Err(Error::validation("sequence", format!("value {v} at n={n} is below 1")));
    }
    let k = pts.len() as f64;
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let xs: Vec<f64> = pts.iter().map(|p| p.0 - xbar).collect();
    let ybar = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * (y - ybar)).sum();
    let slope = sxy / sxx;
    let centred_intercept = ybar;
    let intercept = centred_intercept - slope * xbar;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - centred_intercept - slope * x).powi(2))
        .sum();
    let sigma2 = if pts.len() > 2 { rss / (k - 2.0) } else { 0.0 };
    let slope_se = (sigma2 / sxx).sqrt();
    let intercept_se = (sigma2 * (1.0 / k + xbar * xbar / sxx)).sqrt();

    let (curvature, curvature_se) = quadratic_term(&xs, &ys);

    Ok(GrowthFit {
        c: intercept.exp(),
        r: slope.exp(),
        slope,
        intercept,
        slope_se,
        intercept_se,
        curvature,
        curvature_se,
        points: pts.len(),
    })
}

/// Coefficient of `x²` in the least-squares quadratic through centred
/// abscissae, with its standard error.
fn quadratic_term(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let s = |p: i32| xs.iter().map(|x| x.powi(p)).sum::<f64>();
    let t = |p: i32| xs.iter().zip(ys).map(|(x, y)| x.powi(p) * y).sum::<f64>();
    let m = [[k, s(1), s(2)], [s(1), s(2), s(3)], [s(2), s(3), s(4)]];
    let rhs = [t(0), t(1), t(2)];
    let Some(inv) = invert3(&m) else {
        return (0.0, 0.0);
    };
    let coef: Vec<f64> = (0..3).map(|i| (0..3).map(|j| inv[i][j] * rhs[j]).sum()).collect();
    if xs.len() <= 3 {
        return (coef[2], 0.0);
    }
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - coef[0] - coef[1] * x - coef[2] * x * x).powi(2))
        .sum();
    let sigma2 = rss / (k - 3.0);
    (coef[2], (sigma2 * inv[2][2]).max(0.0).sqrt())
}

fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-300 {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = match j {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let (c0, c1) = match i {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let minor = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            inv[i][j] = sign * minor / det;
        }
    }
    Some(inv)
}

#[cfg(test)]
mod unit {
    use super::*;

    #[test]
    fn exact_powers_of_two() {
        let v: Vec<f64> = (0..30).map(|n| 2f64.powi(n)).collect();
        let f = growth_rate_fit(&v, (0, 29)).unwrap();
        assert!((f.r - 2.0).abs() < 1e-10);
        assert!((f.c - 1.0).abs() < 1e-9);
        assert!(f.curvature.abs() < 1e-10);
    }

    #[test]
    fn squares_are_flagged_as_slow() {
        let v: Vec<f64> = (0..=40).map(|n| (n * n).max(1) as f64).collect();
        let f = growth_rate_fit(&v, (10, 40)).unwrap();
        assert!(f.r <= 1.2, "r = {}", f.r);
        assert!(f.curvature_t() < -5.0);
    }

    #[test]
    fn tree_balls_grow_like_three() {
        // |B⁽ⁿ⁾| in the 4-regular tree = 1 + 4(3ⁿ - 1)/2
        let v: Vec<f64> = (0..=20).map(|n| 1.0 + 2.0 * (3f64.powi(n) - 1.0)).collect();
        let f = growth_rate_fit(&v, (5, 20)).unwrap();
        assert!((f.r - 3.0).abs() < 1e-3, "r = {}", f.r);
    }

    #[test]
    fn scaling_changes_c_not_r() {
        let v: Vec<f64> = (0..20).map(|n| 1.0 + (n as f64).powf(1.7)).collect();
        let w: Vec<f64> = v.iter().map(|x| 5.0 * x).collect();
        let a = growth_rate_fit(&v, (3, 19)).unwrap();
        let b = growth_rate_fit(&w, (3, 19)).unwrap();
        assert!((a.r - b.r).abs() < 1e-12);
        assert!((b.c / a.c - 5.0).abs() < 1e-9);
    }

    #[test]
    fn validation() {
        let v = vec![1.0, 2.0, 4.0, 8.0];
        assert!(growth_rate_fit(&v, (0, 1)).is_err());
        assert!(growth_rate_fit(&v, (0, 4)).is_err());
        assert!(growth_rate_fit(&[0.5, 1.0, 2.0], (0, 2)).is_err());
    }
}
