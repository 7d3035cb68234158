//! Weighted straight-line fits used by the checkers and the rate fitter.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    /// Residual degrees of freedom, `points - 2`.
    pub dof: usize,
    /// Two-sided 95% interval for the slope.
    pub ci95: (f64, f64),
}

/// Weighted least squares for `y ≈ intercept + slope·x`.
///
/// Standard errors scale the weighted residual variance, so weights only
/// need to be correct up to a common factor. The interval uses the
/// Student-t quantile on `points - 2` degrees of freedom.
pub fn weighted_line_fit(x: &[f64], y: &[f64], w: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if y.len() != n || w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len().min(w.len()),
        });
    }
    if x.iter().chain(y).chain(w).any(|v| !v.is_finite()) || w.iter().any(|&v| v <= 0.0) {
        return Err(invalid("weights", "fit inputs must be finite with positive weights"));
    }
    let mut distinct: Vec<f64> = x.to_vec();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            got: distinct.len(),
        });
    }
    let sw: f64 = w.iter().sum();
    let xbar = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ybar = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - xbar).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((a, c), b)| b * (a - xbar) * (c - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let dof = n - 2;
    let rss: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((a, c), b)| b * (c - intercept - slope * a).powi(2))
        .sum();
    let s2 = rss / dof as f64;
    let slope_se = (s2 / sxx).sqrt();
    let intercept_se = (s2 * (1.0 / sw + xbar * xbar / sxx)).sqrt();
    let tq = StudentsT::new(0.0, 1.0, dof as f64)
        .map_err(|e| invalid("dof", e.to_string()))?
        .inverse_cdf(0.975);
    Ok(LinearFit {
        slope,
        intercept,
        slope_se,
        intercept_se,
        dof,
        ci95: (slope - tq * slope_se, slope + tq * slope_se),
    })
}
