//! Interval estimates, goodness of fit and line fits.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::report::Estimate;
use crate::error::{Error, Result};

/// Normal quantile for a two-sided 95% interval.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval `(lower, upper)` for `successes` out of `trials`.
pub fn wilson(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lower = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let upper = if successes >= trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lower, upper)
}

/// Point estimate with its 95% Wilson interval.
pub fn wilson_estimate(successes: u64, trials: u64) -> Estimate {
    let (lower, upper) = wilson(successes, trials, Z_95);
    Estimate {
        value: successes as f64 / trials.max(1) as f64,
        half_width: 0.5 * (upper - lower),
        lower,
        upper,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Cells left after pooling.
    pub cells: usize,
}

/// Pearson goodness of fit of `observed` counts against cell probabilities.
/// Cells with expected count below 5 are pooled into one; cells of zero
/// probability must be empty.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<ChiSquareTest> {
    if observed.len() != probs.len() {
        return Err(Error::SupportMismatch {
            left: observed.len(),
            right: probs.len(),
        });
    }
    let total: u64 = observed.iter().sum();
    let mass: f64 = probs.iter().sum();
    if total == 0 || (mass - 1.0).abs() > 1e-9 {
        return Err(Error::DomainError(
            "need positive counts and probabilities summing to 1".into(),
        ));
    }
    let n = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pool_obs, mut pool_exp) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        if p == 0.0 {
            if o > 0 {
                return Err(Error::DomainError("count observed in a zero-probability cell".into()));
            }
            continue;
        }
        let e = n * p;
        if e < 5.0 {
            pool_obs += o as f64;
            pool_exp += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pool_exp > 0.0 {
        cells.push((pool_obs, pool_exp));
    }
    if cells.len() < 2 {
        return Err(Error::DomainError("fewer than two cells after pooling".into()));
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::DomainError(e.to_string()))?;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: dist.sf(statistic),
        cells: cells.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square residual.
    pub residual: f64,
    pub points: usize,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::DomainError(
            "least squares needs at least two paired points".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DomainError("abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    Ok(LineFit {
        slope,
        intercept,
        residual: (rss / n).sqrt(),
        points: x.len(),
    })
}
