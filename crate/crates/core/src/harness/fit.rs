use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::{read_results, ResultRow};
use crate::error::{invalid, Error, Result};
use crate::stats::weighted_line_fit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateAxis {
    N,
    K,
    M,
}

impl std::str::FromStr for RateAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(Self::N),
            "k" => Ok(Self::K),
            "m" => Ok(Self::M),
            other => Err(invalid("x", format!("unknown axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub ci95: (f64, f64),
    /// `(x, mean y, standard error of the mean)` per distinct `x`.
    pub points: Vec<(f64, f64, f64)>,
    /// Groups dropped for a nonpositive mean.
    pub dropped: usize,
}

fn field(row: &ResultRow, name: &str) -> Result<Option<f64>> {
    Ok(match name {
        "member_mean_excess" => row.member_mean_excess,
        "ensemble_excess" => row.ensemble_excess,
        "ensemble_excess_se" => row.ensemble_excess_se,
        "psi_hat" => row.psi_hat,
        "bracket_total" => row.bracket_total,
        "wall_time_ms" => Some(row.wall_time_ms as f64),
        other => return Err(invalid("y", format!("unknown result column `{other}`"))),
    })
}

/// Log-log fit of the per-`x` mean of `y_field`, weighted by the inverse
/// variance of `ln(mean)` from the trial scatter. Falls back to equal
/// weights when some group has no scatter.
pub fn fit_rate_rows(rows: &[ResultRow], x_field: RateAxis, y_field: &str) -> Result<RateFit> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for row in rows {
        let Some(y) = field(row, y_field)? else { continue };
        let x = match x_field {
            RateAxis::N => row.n,
            RateAxis::K => row.k,
            RateAxis::M => row.m,
        };
        groups.entry(x).or_default().push(y);
    }
    let mut points = Vec::new();
    let mut dropped = 0;
    for (x, ys) in &groups {
        let t = ys.len() as f64;
        let mean = ys.iter().sum::<f64>() / t;
        if !(mean > 0.0) {
            dropped += 1;
            continue;
        }
        let se = if ys.len() > 1 {
            (ys.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1.0) / t).sqrt()
        } else {
            0.0
        };
        points.push((*x as f64, mean, se));
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} groups with nonpositive mean {y_field}");
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let w: Vec<f64> = if points.iter().all(|p| p.2 > 0.0) {
        points.iter().map(|p| (p.1 / p.2).powi(2)).collect()
    } else {
        vec![1.0; points.len()]
    };
    let f = weighted_line_fit(&lx, &ly, &w)?;
    Ok(RateFit {
        slope: f.slope,
        intercept: f.intercept,
        slope_se: f.slope_se,
        ci95: f.ci95,
        points,
        dropped,
    })
}

/// [`fit_rate_rows`] on a results file.
pub fn fit_rate(path: impl AsRef<Path>, x_field: RateAxis, y_field: &str) -> Result<RateFit> {
    fit_rate_rows(&read_results(path)?, x_field, y_field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn row(n: usize, trial: usize, y: f64) -> ResultRow {
        ResultRow {
            n,
            k: 1,
            m: 1,
            trial,
            seed: 0,
            member_mean_excess: Some(y),
            ensemble_excess: Some(y),
            ensemble_excess_se: Some(0.0),
            psi_hat: None,
            bracket_total: None,
            wall_time_ms: 0,
            error: None,
        }
    }

    #[test]
    fn exact_inverse_law() {
        let rows: Vec<_> = [4, 8, 16, 32].iter().map(|&n| row(n, 0, 1.0 / n as f64)).collect();
        let f = fit_rate_rows(&rows, RateAxis::N, "ensemble_excess").unwrap();
        assert!((f.slope + 1.0).abs() < 1e-9);
    }

    #[test]
    fn noisy_square_root_law() {
        let mut rng = crate::seeding::rng(5);
        let mut rows = Vec::new();
        for e in 4..=12 {
            let n = 1usize << e;
            for t in 0..20 {
                let eps: f64 = rng.sample(StandardNormal);
                rows.push(row(n, t, 3.0 * (n as f64).powf(-0.5) * (1.0 + 0.01 * eps)));
            }
        }
        let f = fit_rate_rows(&rows, RateAxis::N, "ensemble_excess").unwrap();
        assert!((-0.55..=-0.45).contains(&f.slope));
    }

    #[test]
    fn two_points_is_an_error() {
        let rows = vec![row(4, 0, 1.0), row(8, 0, 0.5)];
        assert!(matches!(
            fit_rate_rows(&rows, RateAxis::N, "ensemble_excess"),
            Err(Error::InsufficientPoints { .. })
        ));
    }

    #[test]
    fn nonpositive_groups_are_dropped() {
        let rows = vec![row(2, 0, 0.0), row(4, 0, 1.0), row(8, 0, 0.5), row(16, 0, 0.25)];
        let f = fit_rate_rows(&rows, RateAxis::N, "ensemble_excess").unwrap();
        assert_eq!(f.dropped, 1);
    }
}
