//! Gaussian design with geometric spectral decay and clipped linear labels.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{LabelKind, LabelLaw, Law};
use crate::error::{invalid, Error, Result};
use crate::losses::{LossKind, LossSpec};
use crate::riskbounds::RiskEstimate;
use crate::scalar::clip;
use crate::seeding;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegressionNoise {
    None,
    /// Additive `Uniform[-amplitude, amplitude]` before clipping.
    BoundedUniform { amplitude: f64 },
}

/// `X ~ N(0, diag(C_sp ω^r))` for `r = 1..d` and
/// `Y = clip(w∘·X + t∘ + ξ, β)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDist {
    c_sp: f64,
    omega: f64,
    w: Array1<f64>,
    t: f64,
    beta: f64,
    w_max: f64,
    noise: RegressionNoise,
    scales: Array1<f64>,
}

impl RegressionDist {
    /// Rejects `‖w‖ > w_max`.
    pub fn new(
        c_sp: f64,
        omega: f64,
        w: Array1<f64>,
        t: f64,
        beta: f64,
        w_max: f64,
        noise: RegressionNoise,
    ) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidDimension("regression law needs d >= 1".into()));
        }
        if !(c_sp >= 1.0 && c_sp.is_finite()) {
            return Err(invalid("c_sp", "must be at least 1"));
        }
        if !(omega > 0.0 && omega < 1.0) {
            return Err(invalid("omega", "must lie in (0, 1)"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid("beta", "must be positive"));
        }
        if !t.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(invalid("w", "weights and offset must be finite"));
        }
        let nrm = w.dot(&w).sqrt();
        if !(w_max > 0.0) || nrm > w_max {
            return Err(invalid("w", format!("norm {nrm} exceeds w_max = {w_max}")));
        }
        if let RegressionNoise::BoundedUniform { amplitude } = noise {
            if !(amplitude >= 0.0 && amplitude.is_finite()) {
                return Err(invalid("amplitude", "must be nonnegative"));
            }
        }
        let scales = (1..=w.len()).map(|r| (c_sp * omega.powi(r as i32)).sqrt()).collect();
        Ok(Self {
            c_sp,
            omega,
            w,
            t,
            beta,
            w_max,
            noise,
            scales,
        })
    }

    /// Diagonal of the design covariance.
    pub fn spectrum(&self) -> Array1<f64> {
        self.scales.mapv(|s| s * s)
    }

    pub fn c_sp(&self) -> f64 {
        self.c_sp
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn w(&self) -> &Array1<f64> {
        &self.w
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    pub fn noise(&self) -> RegressionNoise {
        self.noise
    }

    /// `clip(w∘·x + t∘, β)`.
    pub fn reference_predict(&self, x: ArrayView1<'_, f64>) -> f64 {
        clip(self.w.dot(&x) + self.t, self.beta)
    }

    fn is_noiseless(&self) -> bool {
        match self.noise {
            RegressionNoise::None => true,
            RegressionNoise::BoundedUniform { amplitude } => amplitude == 0.0,
        }
    }
}

impl Law for RegressionDist {
    fn dim(&self) -> usize {
        self.w.len()
    }

    fn label_kind(&self) -> LabelKind {
        LabelKind::Real
    }

    fn sample(&self, n: usize, seed: u64) -> Result<(Array2<f64>, Array1<f64>)> {
        let mut rng = seeding::rng(seed);
        let d = self.w.len();
        let mut x = Array2::zeros((n, d));
        let mut y = Array1::zeros(n);
        for i in 0..n {
            let mut row = x.row_mut(i);
            for j in 0..d {
                row[j] = self.scales[j] * rng.sample::<f64, _>(StandardNormal);
            }
            let noise = match self.noise {
                RegressionNoise::None => 0.0,
                RegressionNoise::BoundedUniform { amplitude } => amplitude * rng.random_range(-1.0..=1.0),
            };
            y[i] = clip(self.w.dot(&row) + self.t + noise, self.beta);
        }
        Ok((x, y))
    }

    fn label_law(&self, x: ArrayView1<'_, f64>) -> Result<LabelLaw> {
        if x.len() != self.w.len() {
            return Err(Error::DimensionMismatch {
                expected: self.w.len(),
                got: x.len(),
            });
        }
        let center = self.w.dot(&x) + self.t;
        Ok(match self.noise {
            RegressionNoise::None => LabelLaw::Point {
                y: clip(center, self.beta),
            },
            RegressionNoise::BoundedUniform { amplitude } => LabelLaw::ClippedUniform {
                center,
                half_width: amplitude,
                beta: self.beta,
            },
        })
    }

    /// Exactly zero without noise; otherwise a Monte-Carlo average of the
    /// conditional variance, integrated exactly over the noise per draw.
    fn bayes_risk(&self, loss: &LossSpec<f64>, n_mc: usize, seed: u64) -> Result<RiskEstimate> {
        if loss.kind != LossKind::Squared {
            return Err(Error::Unsupported("regression laws need the squared loss".into()));
        }
        if self.is_noiseless() {
            return Ok(RiskEstimate::exact(0.0, 0));
        }
        let stats = super::monte_carlo(self, n_mc, seed, 1, |_, law| {
            let (m, s) = law.real_moments()?;
            Ok(vec![(s - m * m).max(0.0)])
        })?;
        Ok(stats[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::make_loss;
    use ndarray::array;

    fn dist(noise: RegressionNoise) -> RegressionDist {
        RegressionDist::new(1.0, 0.5, array![1.0, -0.5, 0.25], 0.1, 1.0, 2.0, noise).unwrap()
    }

    #[test]
    fn noiseless_labels_are_clipped_linear() {
        let d = dist(RegressionNoise::None);
        let (x, y) = d.sample(200, 3).unwrap();
        for (r, &yi) in x.outer_iter().zip(&y) {
            assert_eq!(yi, d.reference_predict(r));
        }
        let l = make_loss::<f64>(LossKind::Squared, 1.0).unwrap();
        let br = d.bayes_risk(&l, 10, 0).unwrap();
        assert!(br.exact && br.value == 0.0);
    }

    #[test]
    fn rejects_large_weights() {
        let e = RegressionDist::new(1.0, 0.5, array![3.0, 0.0], 0.0, 1.0, 2.0, RegressionNoise::None);
        assert!(e.is_err());
    }

    #[test]
    fn spectrum_is_geometric() {
        let d = RegressionDist::new(2.0, 0.5, Array1::zeros(4), 0.0, 1.0, 1.0, RegressionNoise::None).unwrap();
        let s = d.spectrum();
        for r in 0..4 {
            assert!((s[r] - 2.0 * 0.5f64.powi(r as i32 + 1)).abs() < 1e-15);
        }
    }

    #[test]
    fn noisy_bayes_risk_matches_unclipped_variance_when_far_from_clip() {
        let d = RegressionDist::new(
            1.0,
            0.01,
            array![0.0, 0.0],
            0.0,
            10.0,
            1.0,
            RegressionNoise::BoundedUniform { amplitude: 0.6 },
        )
        .unwrap();
        let l = make_loss::<f64>(LossKind::Squared, 10.0).unwrap();
        let br = d.bayes_risk(&l, 1000, 1).unwrap();
        assert!((br.value - 0.36 / 3.0).abs() < 1e-12);
    }
}
