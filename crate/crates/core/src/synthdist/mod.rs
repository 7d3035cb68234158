//! Synthetic data laws with analytic Bayes information.
//!
//! Every law implements [`Law`]: it samples `(X, Y)` pairs from a seed and
//! reports the conditional law of `Y` given `X = x` as a [`LabelLaw`], from
//! which conditional risks, Bayes actions and conditional excess risks are
//! computed exactly.
//!
//! Binary laws use labels `±1`. When trained with the kl loss the labels are
//! mapped to `{0, 1}`, and with the squared loss to `±β`
//! (see [`labels_for_loss`]).
//!
//! Families:
//! * [`AssouadDist`]: the hypercube-indexed lower-bound family on `q + 1`
//!   orthonormal atoms, with [`build_assouad_family`] and
//!   [`check_membership`].
//! * [`FiniteDist`]: arbitrary finite-support laws, including the mixtures
//!   of [`build_mixture_lb`].
//! * [`GaussMarginDist`]: a continuous law with prescribed margin, moment
//!   and noise exponents.
//! * [`RegressionDist`]: Gaussian design with geometric spectral decay and
//!   clipped linear labels.

mod assouad;
mod checkers;
mod finite;
mod gauss_margin;
mod regression;
mod spec;

pub use assouad::{
    assouad_n0, build_assouad_family, check_membership, chi_square, chi_square_adjacent_bound, AssouadDist,
    AssouadParams, Membership, MembershipConstants,
};
pub use checkers::{
    check_geometric_margin, check_moment, check_spectral_decay, check_tsybakov, MarginWeighting, PowerLawCheck,
    SpectralCheck,
};
pub use finite::{build_mixture_lb, random_binary_finite, random_regression_finite, FiniteDist};
pub use gauss_margin::GaussMarginDist;
pub use regression::{RegressionDist, RegressionNoise};
pub use spec::{
    load_distribution_spec, AssouadMinimaxSpec, AssouadSpec, AtomSpec, DistributionSpec, FiniteSpec, GaussMarginSpec,
    LabelKindSpec, MixtureSpec, RegressionSpec,
};

use std::fmt::Debug;

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::losses::{LossKind, LossSpec};
use crate::riskbounds::RiskEstimate;
use crate::scalar::clip;
use crate::seeding;

/// Native label type of a law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    /// `Y ∈ {-1, +1}`.
    Binary,
    /// Real `Y`.
    Real,
}

/// Conditional law of `Y` given `X = x`.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelLaw {
    /// `P(Y = +1) = eta`, otherwise `-1`.
    Binary { eta: f64 },
    /// `Y = y` almost surely.
    Point { y: f64 },
    /// Finitely many `(value, probability)` pairs.
    Discrete(Vec<(f64, f64)>),
    /// `Y = clip(center + U, β)` with `U ~ Uniform[-half_width, half_width]`.
    ClippedUniform { center: f64, half_width: f64, beta: f64 },
}

impl LabelLaw {
    /// Mean and second moment of a real label.
    pub fn real_moments(&self) -> Result<(f64, f64)> {
        match self {
            LabelLaw::Binary { .. } => Err(Error::Unsupported("binary label law has no real moments".into())),
            LabelLaw::Point { y } => Ok((*y, y * y)),
            LabelLaw::Discrete(vals) => Ok(vals
                .iter()
                .fold((0.0, 0.0), |(m, s), &(y, p)| (m + p * y, s + p * y * y))),
            LabelLaw::ClippedUniform {
                center,
                half_width,
                beta,
            } => Ok(clipped_uniform_moments(*center, *half_width, *beta)),
        }
    }

    /// `E[L(v, Y)]`.
    pub fn risk(&self, loss: &LossSpec<f64>, v: f64) -> Result<f64> {
        match self {
            LabelLaw::Binary { eta } => Ok(loss.expected_binary(v, *eta)),
            _ => {
                if loss.kind != LossKind::Squared {
                    return Err(Error::Unsupported(format!(
                        "real-valued labels need the squared loss, got {:?}",
                        loss.kind
                    )));
                }
                let (m, s) = self.real_moments()?;
                Ok(v * v - 2.0 * v * m + s)
            }
        }
    }

    /// Pointwise Bayes action.
    pub fn bayes_action(&self, loss: &LossSpec<f64>) -> Result<f64> {
        match self {
            LabelLaw::Binary { eta } => Ok(loss.bayes_action_binary(*eta)),
            _ => {
                if loss.kind != LossKind::Squared {
                    return Err(Error::Unsupported(format!(
                        "real-valued labels need the squared loss, got {:?}",
                        loss.kind
                    )));
                }
                Ok(clip(self.real_moments()?.0, loss.beta))
            }
        }
    }

    /// `E[L(v, Y)] - min_u E[L(u, Y)]`, clamped at zero.
    pub fn excess(&self, loss: &LossSpec<f64>, v: f64) -> Result<f64> {
        match (self, loss.kind) {
            (LabelLaw::Binary { eta }, LossKind::ZeroOne) => {
                let bayes = loss.bayes_action_binary(*eta);
                Ok(if (v > 0.0) == (bayes > 0.0) { 0.0 } else { (2.0 * eta - 1.0).abs() })
            }
            (LabelLaw::Binary { .. }, _) => {
                let best = self.risk(loss, self.bayes_action(loss)?)?;
                Ok((self.risk(loss, v)? - best).max(0.0))
            }
            (_, LossKind::Squared) => {
                let (mean, _) = self.real_moments()?;
                let m = clip(mean, loss.beta);
                Ok(((v - mean).powi(2) - (m - mean).powi(2)).max(0.0))
            }
            (_, other) => Err(Error::Unsupported(format!(
                "real-valued labels need the squared loss, got {other:?}"
            ))),
        }
    }

    /// `|2η - 1|` for binary laws.
    pub fn confidence(&self) -> Option<f64> {
        match self {
            LabelLaw::Binary { eta } => Some((2.0 * eta - 1.0).abs()),
            _ => None,
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            LabelLaw::Binary { eta } => {
                if rng.random::<f64>() < *eta {
                    1.0
                } else {
                    -1.0
                }
            }
            LabelLaw::Point { y } => *y,
            LabelLaw::Discrete(vals) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for &(y, p) in vals {
                    acc += p;
                    if u < acc {
                        return y;
                    }
                }
                vals.last().map_or(0.0, |v| v.0)
            }
            LabelLaw::ClippedUniform {
                center,
                half_width,
                beta,
            } => clip(center + rng.random_range(-1.0..=1.0) * half_width, *beta),
        }
    }
}

/// Mean and second moment of `clip(c + U)` for `U ~ Uniform[-a, a]`, by
/// Simpson's rule on the pieces between the clip breakpoints. The
/// integrands are piecewise polynomials of degree at most two, so the rule
/// is exact on each piece.
fn clipped_uniform_moments(c: f64, a: f64, beta: f64) -> (f64, f64) {
    if a <= 0.0 {
        let y = clip(c, beta);
        return (y, y * y);
    }
    let (lo, hi) = (c - a, c + a);
    let mut knots = vec![lo];
    for b in [-beta, beta] {
        if b > lo && b < hi {
            knots.push(b);
        }
    }
    knots.push(hi);
    let (mut m1, mut m2) = (0.0, 0.0);
    for pair in knots.windows(2) {
        let (l, r) = (pair[0], pair[1]);
        let mid = 0.5 * (l + r);
        let f = |z: f64| clip(z, beta);
        let w = (r - l) / 6.0;
        m1 += w * (f(l) + 4.0 * f(mid) + f(r));
        m2 += w * (f(l).powi(2) + 4.0 * f(mid).powi(2) + f(r).powi(2));
    }
    (m1 / (2.0 * a), m2 / (2.0 * a))
}

/// A support point of a finite law.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub x: Array1<f64>,
    pub prob: f64,
    pub labels: LabelLaw,
}

/// A data-generating law over `R^d x Y`.
pub trait Law: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn label_kind(&self) -> LabelKind;

    /// `n` i.i.d. draws, a pure function of `seed`.
    fn sample(&self, n: usize, seed: u64) -> Result<(Array2<f64>, Array1<f64>)>;

    /// Conditional law of `Y` at `x`.
    fn label_law(&self, x: ArrayView1<'_, f64>) -> Result<LabelLaw>;

    /// Number of support points for finite laws.
    fn support_size(&self) -> Option<usize> {
        None
    }

    /// Streams the support of a finite law.
    fn atoms(&self) -> Option<Box<dyn Iterator<Item = Atom> + '_>> {
        None
    }

    /// Reference hyperplane `(w, t)` used by the margin checker.
    fn reference_hyperplane(&self) -> Option<(Array1<f64>, f64)> {
        None
    }

    /// Bayes risk: exact for finite laws, else a Monte-Carlo average of the
    /// conditional Bayes risk over `n_mc` draws of `X`.
    fn bayes_risk(&self, loss: &LossSpec<f64>, n_mc: usize, seed: u64) -> Result<RiskEstimate> {
        if let Some(atoms) = self.atoms() {
            let mut total = 0.0;
            let mut count = 0;
            for atom in atoms {
                total += atom.prob * atom.labels.risk(loss, atom.labels.bayes_action(loss)?)?;
                count += 1;
            }
            return Ok(RiskEstimate::exact(total, count));
        }
        let stats = monte_carlo(self, n_mc, seed, 1, |_, law| {
            let v = law.bayes_action(loss)?;
            Ok(vec![law.risk(loss, v)?])
        })?;
        Ok(stats[0])
    }
}

/// Bayes prediction `φ*(x)` under `loss`.
pub fn bayes_predict(dist: &dyn Law, loss: &LossSpec<f64>, x: ArrayView1<'_, f64>) -> Result<f64> {
    dist.label_law(x)?.bayes_action(loss)
}

/// Converts native labels into the label convention of `loss`.
pub fn labels_for_loss(kind: LabelKind, loss: &LossSpec<f64>, y: &Array1<f64>) -> Result<Array1<f64>> {
    match (kind, loss.kind) {
        (LabelKind::Binary, LossKind::ZeroOne) => Ok(y.clone()),
        (LabelKind::Binary, LossKind::Kl) => Ok(y.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 })),
        (LabelKind::Binary, LossKind::Squared) => Ok(y.mapv(|v| v * loss.beta)),
        (LabelKind::Real, LossKind::Squared) => Ok(y.clone()),
        (LabelKind::Real, other) => Err(Error::Unsupported(format!(
            "real-valued labels need the squared loss, got {other:?}"
        ))),
    }
}

/// Rows drawn per Monte-Carlo chunk.
pub(crate) const MC_CHUNK: usize = 1 << 15;

/// Means and standard errors of `stats` evaluated at `n` draws of `(X, law
/// of Y | X)`. Draws are made in fixed-size chunks with derived seeds, so
/// the result does not depend on the thread count.
pub(crate) fn monte_carlo<L, F>(dist: &L, n: usize, seed: u64, width: usize, stats: F) -> Result<Vec<RiskEstimate>>
where
    L: Law + ?Sized,
    F: Fn(ArrayView1<'_, f64>, &LabelLaw) -> Result<Vec<f64>> + Sync,
{
    if n == 0 {
        return Err(crate::error::invalid("n_mc", "must be positive"));
    }
    let chunks = n.div_ceil(MC_CHUNK);
    let partial = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<(Vec<f64>, Vec<f64>)> {
            let rows = MC_CHUNK.min(n - c * MC_CHUNK);
            let (x, _) = dist.sample(rows, seeding::child_seed(seed, c as u64))?;
            let mut s1 = vec![0.0; width];
            let mut s2 = vec![0.0; width];
            for row in x.outer_iter() {
                let law = dist.label_law(row)?;
                let vals = stats(row, &law)?;
                for (j, v) in vals.into_iter().enumerate() {
                    s1[j] += v;
                    s2[j] += v * v;
                }
            }
            Ok((s1, s2))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s1 = vec![0.0; width];
    let mut s2 = vec![0.0; width];
    for (a, b) in partial {
        for j in 0..width {
            s1[j] += a[j];
            s2[j] += b[j];
        }
    }
    let nf = n as f64;
    Ok((0..width)
        .map(|j| {
            let mean = s1[j] / nf;
            let var = if n > 1 { ((s2[j] - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
            RiskEstimate::monte_carlo(mean, (var / nf).sqrt(), n)
        })
        .collect())
}

/// Uniformly distributed unit vector orthogonal to the unit vector `w`.
pub(crate) fn orthogonal_direction<R: Rng>(w: &Array1<f64>, rng: &mut R) -> Array1<f64> {
    loop {
        let mut g: Array1<f64> = (0..w.len()).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let proj = g.dot(w);
        g.scaled_add(-proj, w);
        let nrm = g.dot(&g).sqrt();
        if nrm > 1e-12 {
            return g / nrm;
        }
    }
}
