//! Continuous binary law with prescribed margin, moment and noise exponents.
//!
//! `X = (M + t∘) w∘ + R·U`, where `M` is the signed margin on `[-1, 1]`,
//! `U` is uniform on the unit sphere orthogonal to `w∘` and `R` is
//! Pareto(ρ) on `[1, ∞)`, optionally truncated at `radial_max`.
//!
//! For `α > 0`, `|M|` has density `∝ |m|^{γα-1}` and
//! `|2η - 1| = |M|^{γ(1-α)}`. Then the weighted band mass is `α ξ^γ` and
//! `P(|2η - 1| ≤ ε) = ε^{α/(1-α)}`.
//!
//! For `α = 0`, `|M|` has density `∝ |m|^{γ-1}` and `|2η - 1| = 1/2`
//! everywhere, so `P(|M| ≤ ξ) = ξ^γ`.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;

use super::{orthogonal_direction, LabelKind, LabelLaw, Law};
use crate::error::{invalid, Error, Result};
use crate::seeding;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussMarginDist {
    w: Array1<f64>,
    t: f64,
    gamma: f64,
    rho: f64,
    alpha: f64,
    radial_max: Option<f64>,
}

impl GaussMarginDist {
    /// `w` is normalised to unit length. Requires `d >= 2`.
    pub fn new(w: Array1<f64>, t: f64, gamma: f64, rho: f64, alpha: f64, radial_max: Option<f64>) -> Result<Self> {
        if w.len() < 2 {
            return Err(Error::InvalidDimension("gauss_margin needs d >= 2".into()));
        }
        let nrm = w.dot(&w).sqrt();
        if !(nrm > 0.0 && nrm.is_finite()) {
            return Err(invalid("w", "must be finite and nonzero"));
        }
        if !t.is_finite() {
            return Err(invalid("t", "must be finite"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid("gamma", "must be positive"));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(invalid("rho", "must be positive"));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(invalid("alpha", "must lie in [0, 1)"));
        }
        if let Some(rm) = radial_max {
            if !(rm > 1.0) {
                return Err(invalid("radial_max", "must exceed 1"));
            }
        }
        Ok(Self {
            w: w / nrm,
            t,
            gamma,
            rho,
            alpha,
            radial_max,
        })
    }

    /// Reference direction `e_1` and offset zero.
    pub fn axis(d: usize, gamma: f64, rho: f64, alpha: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension("gauss_margin needs d >= 2".into()));
        }
        let mut w = Array1::zeros(d);
        w[0] = 1.0;
        Self::new(w, 0.0, gamma, rho, alpha, None)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `|2η - 1|` as a function of the margin.
    pub fn confidence_at(&self, m: f64) -> f64 {
        if self.alpha > 0.0 {
            m.abs().powf(self.gamma * (1.0 - self.alpha)).min(1.0)
        } else {
            0.5
        }
    }

    /// `η` as a function of the margin, with `sign(0) = +1`.
    pub fn eta_at(&self, m: f64) -> f64 {
        let c = self.confidence_at(m);
        if m >= 0.0 {
            0.5 * (1.0 + c)
        } else {
            0.5 * (1.0 - c)
        }
    }

    fn margin_exponent(&self) -> f64 {
        if self.alpha > 0.0 {
            self.gamma * self.alpha
        } else {
            self.gamma
        }
    }

    fn radius<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let tail = match self.radial_max {
            Some(rm) => 1.0 - u * (1.0 - rm.powf(-self.rho)),
            None => 1.0 - u,
        };
        tail.powf(-1.0 / self.rho)
    }
}

impl Law for GaussMarginDist {
    fn dim(&self) -> usize {
        self.w.len()
    }

    fn label_kind(&self) -> LabelKind {
        LabelKind::Binary
    }

    fn sample(&self, n: usize, seed: u64) -> Result<(Array2<f64>, Array1<f64>)> {
        let mut rng = seeding::rng(seed);
        let d = self.w.len();
        let e = self.margin_exponent();
        let mut x = Array2::zeros((n, d));
        let mut y = Array1::zeros(n);
        for i in 0..n {
            let mag = rng.random::<f64>().powf(1.0 / e);
            let m = if rng.random::<bool>() { mag } else { -mag };
            let r = self.radius(&mut rng);
            let u = orthogonal_direction(&self.w, &mut rng);
            let mut row = x.row_mut(i);
            row.scaled_add(m + self.t, &self.w);
            row.scaled_add(r, &u);
            y[i] = if rng.random::<f64>() < self.eta_at(m) { 1.0 } else { -1.0 };
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
        Ok(LabelLaw::Binary {
            eta: self.eta_at(self.w.dot(&x) - self.t),
        })
    }

    fn reference_hyperplane(&self) -> Option<(Array1<f64>, f64)> {
        Some((self.w.clone(), self.t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{make_loss, LossKind};

    #[test]
    fn band_mass_matches_power() {
        let dist = GaussMarginDist::axis(5, 2.0, 3.0, 0.0).unwrap();
        let n = 100_000;
        let (x, _) = dist.sample(n, 11).unwrap();
        let frac = x.column(0).iter().filter(|v| v.abs() <= 0.5).count() as f64 / n as f64;
        assert!((frac - 0.25).abs() <= 3.0 * (0.25f64 * 0.75 / n as f64).sqrt());
    }

    #[test]
    fn radial_part_is_orthogonal_and_heavy() {
        let dist = GaussMarginDist::axis(4, 1.0, 2.0, 0.5).unwrap();
        let (x, _) = dist.sample(20_000, 2).unwrap();
        let big = x
            .outer_iter()
            .filter(|r| (r.dot(r) - r[0] * r[0]).sqrt() > 4.0)
            .count() as f64
            / 20_000.0;
        assert!((big - 1.0 / 16.0).abs() < 0.01);
    }

    #[test]
    fn truncated_radius_respects_cap() {
        let mut w = Array1::zeros(3);
        w[1] = 2.0;
        let dist = GaussMarginDist::new(w, 0.3, 1.0, 1.0, 0.0, Some(3.0)).unwrap();
        let (x, _) = dist.sample(5_000, 1).unwrap();
        for r in x.outer_iter() {
            let m = r[1];
            let rad = (r.dot(&r) - m * m).sqrt();
            assert!((1.0 - 1e-9..=3.0 + 1e-9).contains(&rad));
        }
    }

    #[test]
    fn bayes_is_reference_sign() {
        let dist = GaussMarginDist::axis(3, 2.0, 2.0, 0.5).unwrap();
        let loss = make_loss::<f64>(LossKind::ZeroOne, 1.0).unwrap();
        let (x, _) = dist.sample(100, 5).unwrap();
        for r in x.outer_iter() {
            let p = crate::synthdist::bayes_predict(&dist, &loss, r).unwrap();
            assert_eq!(p, if r[0] >= 0.0 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn label_noise_is_quarter_when_alpha_zero() {
        let dist = GaussMarginDist::axis(3, 2.0, 2.0, 0.0).unwrap();
        assert_eq!(dist.eta_at(0.7), 0.75);
        assert_eq!(dist.eta_at(-0.01), 0.25);
    }
}
