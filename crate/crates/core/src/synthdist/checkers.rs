//! Empirical checks of the margin, moment, noise and spectral conditions.
//!
//! Masses are exact sums on finite laws and Monte-Carlo averages otherwise.
//! Each power-law check fits `ln mass` against `ln x` over the grid points
//! with positive mass, and flags a grid point as passing when
//! `mass - 3·SE <= C·x^e` for the configured constant and exponent.
//! Threshold comparisons allow a few ulps of rounding slack.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{monte_carlo, LabelLaw, Law};
use crate::error::{invalid, Error, Result};
use crate::riskbounds::RiskEstimate;
use crate::stats::{weighted_line_fit, LinearFit};

/// Whether band and tail masses are weighted by `|2η - 1|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginWeighting {
    #[default]
    Weighted,
    Unweighted,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PowerLawCheck {
    pub grid: Vec<f64>,
    pub masses: Vec<RiskEstimate>,
    /// Fit of `ln mass` on `ln x`, when at least three grid points carry mass.
    pub fit: Option<LinearFit>,
    /// `exp(intercept)` of the fit.
    pub c_hat: Option<f64>,
    /// Fitted exponent, sign-adjusted so that it estimates the configured one.
    pub exponent_hat: Option<f64>,
    pub pass: Vec<bool>,
}

impl PowerLawCheck {
    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|&p| p)
    }
}

/// Rounding slack for threshold comparisons.
fn slack(g: f64) -> f64 {
    8.0 * f64::EPSILON * g.abs().max(1.0)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
        return Err(invalid("grid", "must be nonempty with positive finite entries"));
    }
    Ok(())
}

fn weight(law: &LabelLaw, weighting: MarginWeighting) -> Result<f64> {
    match weighting {
        MarginWeighting::Unweighted => Ok(1.0),
        MarginWeighting::Weighted => law
            .confidence()
            .ok_or_else(|| Error::Unsupported("weighted masses need binary labels".into())),
    }
}

/// Per-grid-point masses of `indicator(x, g) · weight`.
fn masses<F>(dist: &dyn Law, grid: &[f64], mc_n: usize, seed: u64, f: F) -> Result<Vec<RiskEstimate>>
where
    F: Fn(ArrayView1<'_, f64>, &LabelLaw, f64) -> Result<f64> + Sync,
{
    if let Some(atoms) = dist.atoms() {
        let mut tot = vec![0.0; grid.len()];
        let mut count = 0;
        for a in atoms {
            count += 1;
            if a.prob == 0.0 {
                continue;
            }
            for (j, &g) in grid.iter().enumerate() {
                tot[j] += a.prob * f(a.x.view(), &a.labels, g)?;
            }
        }
        return Ok(tot.into_iter().map(|v| RiskEstimate::exact(v, count)).collect());
    }
    monte_carlo(dist, mc_n, seed, grid.len(), |x, law| {
        grid.iter().map(|&g| f(x, law, g)).collect()
    })
}

fn summarise(grid: &[f64], masses: Vec<RiskEstimate>, c: f64, exponent: f64, sign: f64) -> Result<PowerLawCheck> {
    let pass = grid
        .iter()
        .zip(&masses)
        .map(|(&g, m)| m.value - 3.0 * m.std_error <= c * g.powf(exponent) * (1.0 + 1e-12))
        .collect();
    let pts: Vec<(f64, f64, f64)> = grid
        .iter()
        .zip(&masses)
        .filter(|(_, m)| m.value > 0.0)
        .map(|(&g, m)| {
            let rel = if m.std_error > 0.0 { m.std_error / m.value } else { 0.0 };
            (g.ln(), m.value.ln(), rel)
        })
        .collect();
    let fit = if pts.len() >= 3 {
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let w: Vec<f64> = if pts.iter().all(|p| p.2 > 0.0) {
            pts.iter().map(|p| 1.0 / (p.2 * p.2)).collect()
        } else {
            vec![1.0; pts.len()]
        };
        match weighted_line_fit(&x, &y, &w) {
            Ok(f) => Some(f),
            Err(Error::InsufficientPoints { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(PowerLawCheck {
        grid: grid.to_vec(),
        masses,
        c_hat: fit.map(|f| f.intercept.exp()),
        exponent_hat: fit.map(|f| sign * f.slope),
        fit,
        pass,
    })
}

/// Mass of the band `|w∘·x - t∘| <= ξ` against `C_G ξ^γ`.
pub fn check_geometric_margin(
    dist: &dyn Law,
    xi_grid: &[f64],
    c_g: f64,
    gamma: f64,
    weighting: MarginWeighting,
    mc_n: usize,
    seed: u64,
) -> Result<PowerLawCheck> {
    check_grid(xi_grid)?;
    let (w, t) = dist
        .reference_hyperplane()
        .ok_or_else(|| Error::Unsupported("law has no reference hyperplane".into()))?;
    let ms = masses(dist, xi_grid, mc_n, seed, |x, law, xi| {
        Ok(if (w.dot(&x) - t).abs() <= xi + slack(xi) { weight(law, weighting)? } else { 0.0 })
    })?;
    summarise(xi_grid, ms, c_g, gamma, 1.0)
}

/// Mass of the tail `‖x‖ > s` against `C_M s^{-ρ}`.
pub fn check_moment(
    dist: &dyn Law,
    s_grid: &[f64],
    c_m: f64,
    rho: f64,
    weighting: MarginWeighting,
    mc_n: usize,
    seed: u64,
) -> Result<PowerLawCheck> {
    check_grid(s_grid)?;
    let ms = masses(dist, s_grid, mc_n, seed, |x, law, s| {
        Ok(if x.dot(&x).sqrt() > s { weight(law, weighting)? } else { 0.0 })
    })?;
    summarise(s_grid, ms, c_m, -rho, -1.0)
}

/// Mass of `|2η - 1| <= ε` against `C_T ε^{α/(1-α)}`.
pub fn check_tsybakov(
    dist: &dyn Law,
    eps_grid: &[f64],
    c_t: f64,
    alpha: f64,
    mc_n: usize,
    seed: u64,
) -> Result<PowerLawCheck> {
    check_grid(eps_grid)?;
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid("alpha", "must lie in [0, 1)"));
    }
    let ms = masses(dist, eps_grid, mc_n, seed, |_, law, e| {
        let c = law
            .confidence()
            .ok_or_else(|| Error::Unsupported("noise condition needs binary labels".into()))?;
        Ok(if c <= e + slack(e) { 1.0 } else { 0.0 })
    })?;
    summarise(eps_grid, ms, c_t, alpha / (1.0 - alpha), 1.0)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SpectralCheck {
    /// Leading eigenvalues of the sample covariance, descending.
    pub eigenvalues: Vec<f64>,
    pub c_hat: f64,
    /// `None` when fewer than two usable eigenvalues remain.
    pub omega_hat: Option<f64>,
    pub fit: Option<LinearFit>,
    /// `ω̂ >= 0.95`.
    pub non_decaying: bool,
    pub rank_deficient: bool,
}

/// Fits `ln λ_r = ln C + r ln ω` over the top `min(d, 20)` eigenvalues of
/// the sample covariance of the rows of `x`.
pub fn check_spectral_decay(x: ArrayView2<'_, f64>) -> Result<SpectralCheck> {
    let (n, d) = x.dim();
    if n < 2 || d == 0 {
        return Err(Error::InvalidDimension(format!("need n >= 2 and d >= 1, got {n} x {d}")));
    }
    let mean = x.mean_axis(Axis(0)).expect("n >= 2");
    let centred = &x - &mean;
    let cov = centred.t().dot(&centred) / (n - 1) as f64;
    let m = DMatrix::from_fn(d, d, |i, j| cov[[i, j]]);
    let mut eig: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig.truncate(d.min(20));
    let top = eig[0].max(0.0);
    let floor = top * 1e-12;
    let usable: Vec<f64> = eig.iter().copied().take_while(|&l| l > floor).collect();
    let rank_deficient = usable.len() < eig.len() || n <= d;
    if usable.len() < 2 {
        return Ok(SpectralCheck {
            eigenvalues: eig,
            c_hat: top,
            omega_hat: None,
            fit: None,
            non_decaying: false,
            rank_deficient,
        });
    }
    let r: Vec<f64> = (1..=usable.len()).map(|v| v as f64).collect();
    let y: Vec<f64> = usable.iter().map(|v| v.ln()).collect();
    let (slope, intercept, fit) = if usable.len() >= 3 {
        let f = weighted_line_fit(&r, &y, &vec![1.0; r.len()])?;
        (f.slope, f.intercept, Some(f))
    } else {
        let s = y[1] - y[0];
        (s, y[0] - s, None)
    };
    let omega_hat = slope.exp();
    Ok(SpectralCheck {
        eigenvalues: eig,
        c_hat: intercept.exp(),
        omega_hat: Some(omega_hat),
        fit,
        non_decaying: omega_hat >= 0.95,
        rank_deficient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthdist::{AssouadDist, AssouadParams, FiniteDist, GaussMarginDist, LabelKind, RegressionDist,
        RegressionNoise, Atom};
    use ndarray::{array, Array1, Array2};
    use rand::Rng;

    #[test]
    fn assouad_band_and_tail() {
        let params = AssouadParams::new(16, 2.0, 0.4, 0.1).unwrap();
        let p = AssouadDist::random_sigma(params, 1).unwrap();
        let edge = params.atom_margin();
        let g = check_geometric_margin(&p, &[0.5 * edge, 0.999 * edge, edge], 2.0, 2.0,
            MarginWeighting::Weighted, 1, 0).unwrap();
        assert_eq!(g.masses[0].value, 0.0);
        assert_eq!(g.masses[1].value, 0.0);
        assert!((g.masses[2].value - 0.04).abs() < 1e-15);
        assert!(g.all_pass());
        let m = check_moment(&p, &[1.5, 1.9], 1.0, 2.0, MarginWeighting::Weighted, 1, 0).unwrap();
        for e in &m.masses {
            assert!(e.exact && (e.value - 0.04).abs() < 1e-15);
        }
        let t = check_tsybakov(&p, &[0.05, 0.1, 0.5], 1.0, 0.5, 1, 0).unwrap();
        assert_eq!(t.masses[0].value, 0.0);
        assert!((t.masses[1].value - 0.4).abs() < 1e-15);
        assert!((t.masses[2].value - 0.4).abs() < 1e-15);
    }

    #[test]
    fn hard_labels_have_no_low_confidence_mass() {
        let atoms = vec![
            Atom { x: array![0.0, 1.0], prob: 0.5, labels: LabelLaw::Binary { eta: 1.0 } },
            Atom { x: array![1.0, 0.0], prob: 0.5, labels: LabelLaw::Binary { eta: 0.0 } },
        ];
        let f = FiniteDist::new(atoms, LabelKind::Binary).unwrap();
        let t = check_tsybakov(&f, &[0.1, 0.5, 0.99], 1.0, 0.9, 1, 0).unwrap();
        assert!(t.masses.iter().all(|m| m.value == 0.0) && t.all_pass());
        let m = check_moment(&f, &[2.0], 1.0, 1.0, MarginWeighting::Unweighted, 1, 0).unwrap();
        assert_eq!(m.masses[0].value, 0.0);
    }

    #[test]
    fn gauss_margin_exponents() {
        let d = GaussMarginDist::axis(4, 2.0, 3.0, 0.5).unwrap();
        let g = check_geometric_margin(&d, &[0.1, 0.2, 0.4, 0.8], 1.0, 2.0, MarginWeighting::Weighted, 200_000, 3)
            .unwrap();
        let gh = g.exponent_hat.unwrap();
        assert!((gh - 2.0).abs() < 0.15, "{gh}");
        assert!(g.all_pass());
    }

    #[test]
    fn spectral_fit() {
        let dist = RegressionDist::new(1.0, 0.5, Array1::zeros(10), 0.0, 1.0, 1.0, RegressionNoise::None).unwrap();
        let (x, _) = dist.sample(20_000, 9).unwrap();
        let s = check_spectral_decay(x.view()).unwrap();
        let w = s.omega_hat.unwrap();
        assert!((0.45..=0.55).contains(&w), "{w}");
        assert!(!s.non_decaying && !s.rank_deficient);
    }

    #[test]
    fn isotropic_is_flagged() {
        let mut rng = crate::seeding::rng(2);
        let x = Array2::from_shape_fn((5000, 6), |_| rng.sample::<f64, _>(rand_distr::StandardNormal));
        let s = check_spectral_decay(x.view()).unwrap();
        assert!(s.non_decaying);
    }

    #[test]
    fn one_dimensional_is_degenerate() {
        let x = Array2::from_shape_vec((4, 1), vec![1.0, -1.0, 2.0, -2.0]).unwrap();
        let s = check_spectral_decay(x.view()).unwrap();
        assert!(s.omega_hat.is_none());
        assert!((s.c_hat - s.eigenvalues[0]).abs() < 1e-15);
    }
}
