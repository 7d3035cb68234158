//! Risk and excess-risk estimation, the compressibility function, bound
//! brackets, the optimal-`k` rules, the compressive least-squares
//! inequality, the local complexity fixed point and empirical Rademacher
//! averages.
//!
//! Excess risks are averages of the conditional excess
//! `E[L(φ(x), Y) | x] - min_v E[L(v, Y) | x]`. On finite laws they are
//! exact sums over the support; otherwise they are Monte-Carlo means over
//! `X` draws, with the label expectation taken analytically.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{fit_member, TrainConfig};
use crate::error::{invalid, Error, Result};
use crate::hypotheses::{LinearHypothesis, Solver, SurrogateConfig};
use crate::losses::LossSpec;
use crate::projections::{sample_projection, Projection, ProjectionFamily};
use crate::seeding;
use crate::synthdist::{labels_for_loss, LabelKind, LabelLaw, Law};

/// Largest `support size × dimension` evaluated by exact summation.
pub const EXACT_DESIGN_MAX: usize = 1 << 24;

/// Largest support fitted at population level by the compressibility
/// estimator.
pub const POPULATION_ATOMS_MAX: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
    /// Computed by finite summation; the standard error is then zero.
    pub exact: bool,
}

impl RiskEstimate {
    pub fn exact(value: f64, n_samples: usize) -> Self {
        Self {
            value,
            std_error: 0.0,
            n_samples,
            exact: true,
        }
    }

    pub fn monte_carlo(value: f64, std_error: f64, n_samples: usize) -> Self {
        Self {
            value,
            std_error,
            n_samples,
            exact: false,
        }
    }

    /// Mean and standard error of i.i.d. values.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::monte_carlo(f64::NAN, f64::NAN, 0);
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self::monte_carlo(mean, se, n)
    }
}

/// Points at which excess risks are evaluated, with their weights and
/// conditional label laws.
#[derive(Debug, Clone)]
pub struct TestDesign {
    pub x: Array2<f64>,
    /// Atom probabilities, or `1/n` for sampled designs.
    pub weights: Array1<f64>,
    pub laws: Vec<LabelLaw>,
    pub exact: bool,
}

/// The support of a finite law when small enough, else `n_test` draws.
pub fn test_design(dist: &dyn Law, n_test: usize, seed: u64) -> Result<TestDesign> {
    if let (Some(size), Some(atoms)) = (dist.support_size(), dist.atoms()) {
        if size.saturating_mul(dist.dim()) <= EXACT_DESIGN_MAX {
            let mut x = Array2::zeros((size, dist.dim()));
            let mut weights = Array1::zeros(size);
            let mut laws = Vec::with_capacity(size);
            for (i, a) in atoms.enumerate() {
                x.row_mut(i).assign(&a.x);
                weights[i] = a.prob;
                laws.push(a.labels);
            }
            return Ok(TestDesign {
                x,
                weights,
                laws,
                exact: true,
            });
        }
    }
    if n_test == 0 {
        return Err(invalid("n_test", "must be positive"));
    }
    let (x, _) = dist.sample(n_test, seed)?;
    let laws = x.outer_iter().map(|r| dist.label_law(r)).collect::<Result<Vec<_>>>()?;
    Ok(TestDesign {
        x,
        weights: Array1::from_elem(n_test, 1.0 / n_test as f64),
        laws,
        exact: false,
    })
}

/// Excess risk of predictions made at the rows of `design.x`.
pub fn excess_from_predictions(
    dist: &dyn Law,
    loss: &LossSpec<f64>,
    design: &TestDesign,
    preds: ArrayView1<'_, f64>,
) -> Result<RiskEstimate> {
    if design.x.ncols() != dist.dim() {
        return Err(Error::DimensionMismatch {
            expected: dist.dim(),
            got: design.x.ncols(),
        });
    }
    let n = design.laws.len();
    if preds.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: preds.len() });
    }
    let per: Vec<f64> = design
        .laws
        .iter()
        .zip(preds.iter())
        .map(|(law, &v)| law.excess(loss, v))
        .collect::<Result<_>>()?;
    if design.exact {
        let total = per.iter().zip(design.weights.iter()).map(|(e, w)| e * w).sum();
        Ok(RiskEstimate::exact(total, n))
    } else {
        Ok(RiskEstimate::from_values(&per))
    }
}

/// Excess risk of an arbitrary predictor.
pub fn estimate_excess_risk<F>(
    predictor: F,
    dist: &dyn Law,
    loss: &LossSpec<f64>,
    n_test: usize,
    seed: u64,
) -> Result<RiskEstimate>
where
    F: Fn(ArrayView2<'_, f64>) -> Result<Array1<f64>>,
{
    let design = test_design(dist, n_test, seed)?;
    let preds = predictor(design.x.view())?;
    excess_from_predictions(dist, loss, &design, preds.view())
}

/// `max(ln x, 1)`.
pub fn log_plus(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("log_plus needs x > 0, got {x}")));
    }
    Ok(x.ln().max(1.0))
}

// ---------------------------------------------------------------------------
// Compressibility

/// Settings of the compressibility estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiConfig {
    pub family: ProjectionFamily,
    pub k: usize,
    /// Number of projection draws.
    pub reps: usize,
    /// Training sample size per draw; ignored for small finite laws, which
    /// are fitted at population level.
    pub pop_n: usize,
    pub n_test: usize,
    pub solver: Solver,
    pub seed: u64,
    pub surrogate: SurrogateConfig,
    pub regression_iters: usize,
}

impl PsiConfig {
    /// 32 draws, `pop_n = 50·n_train` and `10⁵` test points.
    pub fn new(family: ProjectionFamily, k: usize, n_train: usize, seed: u64) -> Self {
        Self {
            family,
            k,
            reps: 32,
            pop_n: 50 * n_train,
            n_test: 100_000,
            solver: Solver::Surrogate,
            seed,
            surrogate: SurrogateConfig {
                exact_gap: false,
                ..SurrogateConfig::default()
            },
            regression_iters: 500,
        }
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            family: self.family,
            k: self.k,
            m: 1,
            solver: self.solver,
            master_seed: self.seed,
            surrogate: self.surrogate,
            regression_iters: self.regression_iters,
        }
    }
}

/// Weighted `(x, y, w)` triples whose weighted empirical law is `dist`.
fn population_design(dist: &dyn Law) -> Option<(Array2<f64>, Array1<f64>, Array1<f64>)> {
    if dist.support_size()? > POPULATION_ATOMS_MAX {
        return None;
    }
    let mut rows: Vec<(Array1<f64>, f64, f64)> = Vec::new();
    for a in dist.atoms()? {
        let mut push = |y: f64, w: f64| {
            if w > 0.0 {
                rows.push((a.x.clone(), y, w));
            }
        };
        match &a.labels {
            LabelLaw::Binary { eta } => {
                push(1.0, a.prob * eta);
                push(-1.0, a.prob * (1.0 - eta));
            }
            LabelLaw::Point { y } => push(*y, a.prob),
            LabelLaw::Discrete(vals) => {
                for &(y, p) in vals {
                    push(y, a.prob * p);
                }
            }
            LabelLaw::ClippedUniform { .. } => return None,
        }
    }
    let mut x = Array2::zeros((rows.len(), dist.dim()));
    let mut y = Array1::zeros(rows.len());
    let mut w = Array1::zeros(rows.len());
    for (i, (xi, yi, wi)) in rows.into_iter().enumerate() {
        x.row_mut(i).assign(&xi);
        y[i] = yi;
        w[i] = wi;
    }
    Some((x, y, w))
}

/// Excess risk of the best element of the compressed class found by the
/// solver, for one projection.
pub fn projected_infimum(
    dist: &dyn Law,
    loss: &LossSpec<f64>,
    a: &Projection<f64>,
    cfg: &PsiConfig,
    seed: u64,
) -> Result<f64> {
    let (x, y, w) = match population_design(dist) {
        Some(p) => p,
        None => {
            let (x, y) = dist.sample(cfg.pop_n, seeding::child_seed(seed, 0))?;
            let n = y.len();
            (x, y, Array1::ones(n))
        }
    };
    let y = labels_for_loss(dist.label_kind(), loss, &y)?;
    let u = a.apply(x.view())?;
    let report = fit_member(u.view(), y.view(), Some(w.view()), loss, &cfg.train_config())?;
    let h = report.hypothesis;
    let est = estimate_excess_risk(
        |xt| h.predict(a.apply(xt)?.view()),
        dist,
        loss,
        cfg.n_test,
        seeding::child_seed(seed, 1),
    )?;
    Ok(est.value)
}

/// Per-draw values of the compressibility proxy, in draw order.
pub fn compressibility_draws(dist: &dyn Law, loss: &LossSpec<f64>, cfg: &PsiConfig, draws: usize) -> Result<Vec<f64>> {
    if draws == 0 {
        return Err(invalid("reps", "must be positive"));
    }
    if cfg.k == 0 {
        return Err(invalid("k", "must be positive"));
    }
    if dist.label_kind() == LabelKind::Real && loss.kind != crate::losses::LossKind::Squared {
        return Err(Error::Unsupported("real labels need the squared loss".into()));
    }
    (0..draws)
        .into_par_iter()
        .map(|i| {
            let s = seeding::child_seed(cfg.seed, i as u64);
            let a = sample_projection::<f64>(cfg.family, cfg.k, dist.dim(), seeding::child_seed(s, 0))?;
            projected_infimum(dist, loss, &a, cfg, seeding::child_seed(s, 1))
        })
        .collect()
}

/// `ψ̂(k)`: the mean over `cfg.reps` projections of the excess risk of the
/// compressed ERM, with the standard error across projections.
pub fn estimate_compressibility(dist: &dyn Law, loss: &LossSpec<f64>, cfg: &PsiConfig) -> Result<RiskEstimate> {
    let vals = compressibility_draws(dist, loss, cfg, cfg.reps)?;
    Ok(RiskEstimate::from_values(&vals))
}

/// Empirical `1 - δ` upper quantile of the mean of `m` independent
/// per-projection infima, over `draws` groups.
pub fn psi_quantile(
    dist: &dyn Law,
    loss: &LossSpec<f64>,
    cfg: &PsiConfig,
    m: usize,
    delta: f64,
    draws: usize,
) -> Result<f64> {
    if m == 0 || draws == 0 {
        return Err(invalid("m", "m and draws must be positive"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", "must lie in (0, 1)"));
    }
    let vals = compressibility_draws(dist, loss, cfg, m * draws)?;
    let mut means: Vec<f64> = vals.chunks(m).map(|c| c.iter().sum::<f64>() / m as f64).collect();
    means.sort_by(|a, b| b.total_cmp(a));
    let allowed = (delta * draws as f64).floor() as usize;
    Ok(means[allowed.min(draws - 1)])
}

/// `2ψ + 3B ln(1/δ)/(2m)`.
pub fn finite_ensemble_psi_bound(psi: f64, b: f64, m: usize, delta: f64) -> Result<f64> {
    if m == 0 {
        return Err(invalid("m", "must be positive"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", "must lie in (0, 1)"));
    }
    if !(b >= 1.0) || !(psi >= 0.0) {
        return Err(invalid("b", "need B >= 1 and psi >= 0"));
    }
    Ok(2.0 * psi + 3.0 * b * (1.0 / delta).ln() / (2.0 * m as f64))
}

// ---------------------------------------------------------------------------
// Bound bracket and optimal k

/// Constant-free upper-bound shape
/// `ψ + ((k log₊n + log₊(1/δ))/n)^{1/(2-α)} + log₊(1/δ)/m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundBracket {
    pub psi_term: f64,
    pub statistical_term: f64,
    pub ensemble_term: f64,
    pub total: f64,
    pub n: f64,
    pub k: usize,
    pub m: usize,
    pub delta: f64,
    pub alpha: f64,
}

pub fn ensemble_bound_bracket(n: f64, k: usize, m: usize, delta: f64, alpha: f64, psi_hat: f64) -> Result<BoundBracket> {
    if !(n >= 1.0) || k == 0 || m == 0 {
        return Err(invalid("n", "n, k and m must be at least 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", "must lie in (0, 1)"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid("alpha", "must lie in [0, 1]"));
    }
    let psi_term = psi_hat.max(0.0);
    let ld = log_plus(1.0 / delta)?;
    let statistical_term = ((k as f64 * log_plus(n)? + ld) / n).powf(1.0 / (2.0 - alpha));
    let ensemble_term = ld / m as f64;
    Ok(BoundBracket {
        psi_term,
        statistical_term,
        ensemble_term,
        total: psi_term + statistical_term + ensemble_term,
        n,
        k,
        m,
        delta,
        alpha,
    })
}

fn check_class_exponents(gamma: f64, rho: f64, alpha: f64) -> Result<()> {
    if !(gamma > 0.0 && rho > 0.0) {
        return Err(invalid("gamma", "gamma and rho must be positive"));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid("alpha", "must lie in [0, 1)"));
    }
    Ok(())
}

/// `⌈(n/log₊n)^{2(γ+ρ)/(2(γ+ρ)+γρ(2-α))}⌉`.
pub fn optimal_k_classification(n: f64, gamma: f64, rho: f64, alpha: f64) -> Result<usize> {
    check_class_exponents(gamma, rho, alpha)?;
    let s = 2.0 * (gamma + rho);
    let e = s / (s + gamma * rho * (2.0 - alpha));
    Ok(((n / log_plus(n)?).powf(e).ceil() as usize).max(1))
}

/// `γρ/(2(γ+ρ)+γρ(2-α))`, the exponent of `log₊n/n` in the rate.
pub fn rate_exponent_classification(gamma: f64, rho: f64, alpha: f64) -> Result<f64> {
    check_class_exponents(gamma, rho, alpha)?;
    Ok(gamma * rho / (2.0 * (gamma + rho) + gamma * rho * (2.0 - alpha)))
}

/// `⌈log₊n⌉`.
pub fn optimal_k_regression(n: f64) -> Result<usize> {
    Ok(log_plus(n)?.ceil() as usize)
}

// ---------------------------------------------------------------------------
// Compressive least squares

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlawskiRatio {
    /// `min_w ‖wᵀAX - w⋄ᵀX‖²`.
    pub lhs: f64,
    /// `18‖w⋄‖² Σ_{j>r} λ_j(XXᵀ)`.
    pub rhs: f64,
    pub ratio: f64,
}

/// Residual of the best sketched linear fit against the tail-spectrum
/// bound. `x` is `d × q` with the points as columns.
pub fn slawski_ratio(x: ArrayView2<'_, f64>, w_diamond: ArrayView1<'_, f64>, a: &Projection<f64>, r: usize) -> Result<SlawskiRatio> {
    let (d, q) = x.dim();
    if w_diamond.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: w_diamond.len() });
    }
    if a.d() != d {
        return Err(Error::DimensionMismatch { expected: d, got: a.d() });
    }
    let k = a.k();
    if r >= q.min(k) {
        return Err(invalid("r", format!("need r < min(q, k) = {}", q.min(k))));
    }
    // rows of ax are the sketched points, so ax = (AX)ᵀ is q × k
    let ax = a.apply(x.t())?;
    let target = x.t().dot(&w_diamond);
    let zm = DMatrix::from_fn(q, k, |i, j| ax[[i, j]]);
    let tv = DVector::from_iterator(q, target.iter().copied());
    let svd = zm.clone().svd(true, true);
    let coef = svd
        .solve(&tv, 1e-12 * svd.singular_values.max().max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Undefined(e.to_string()))?;
    let lhs = (&zm * coef - tv).norm_squared();
    let xm = DMatrix::from_fn(d, d, |i, j| x.row(i).dot(&x.row(j)));
    let mut eig: Vec<f64> = SymmetricEigen::new(xm).eigenvalues.iter().map(|v| v.max(0.0)).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    // eigenvalues below the numerical rank threshold count as zero
    let floor = eig.first().copied().unwrap_or(0.0) * d as f64 * f64::EPSILON * 16.0;
    let tail: f64 = eig.iter().skip(r).filter(|&&l| l > floor).sum();
    let rhs = 18.0 * w_diamond.dot(&w_diamond) * tail;
    let ratio = if rhs > 0.0 {
        lhs / rhs
    } else if lhs <= 1e-10 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(SlawskiRatio { lhs, rhs, ratio })
}

/// A `d × q` design whose Gram matrix `XXᵀ` has eigenvalues `ω^j`,
/// `j = 1..min(d, q)`, with Haar-random singular vectors.
pub fn spectral_design(d: usize, q: usize, omega: f64, seed: u64) -> Result<Array2<f64>> {
    if d == 0 || q == 0 {
        return Err(Error::InvalidDimension("design needs d, q >= 1".into()));
    }
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(invalid("omega", "must lie in (0, 1]"));
    }
    let mut rng = seeding::rng(seed);
    let mut haar = |n: usize| {
        let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        let qr = g.qr();
        let (qm, rm) = (qr.q(), qr.r());
        // sign correction makes the factor Haar distributed
        let signs = DVector::from_fn(n, |i, _| if rm[(i, i)] < 0.0 { -1.0 } else { 1.0 });
        qm * DMatrix::from_diagonal(&signs)
    };
    let u = haar(d);
    let v = haar(q);
    let p = d.min(q);
    let mut x = Array2::zeros((d, q));
    for j in 0..p {
        let s = omega.powi(j as i32 + 1).sqrt();
        for a in 0..d {
            for b in 0..q {
                x[[a, b]] += s * u[(a, j)] * v[(b, j)];
            }
        }
    }
    Ok(x)
}

/// [`slawski_ratio`] under `sketches` independent maps, for one
/// [`spectral_design`] and one Gaussian `w⋄` drawn from `seed`.
#[allow(clippy::too_many_arguments)]
pub fn slawski_trials(
    family: ProjectionFamily,
    d: usize,
    q: usize,
    k: usize,
    r: usize,
    omega: f64,
    sketches: usize,
    seed: u64,
) -> Result<Vec<SlawskiRatio>> {
    let x = spectral_design(d, q, omega, seeding::child_seed(seed, 0))?;
    let mut rng = seeding::rng(seeding::child_seed(seed, 1));
    let w: Array1<f64> = (0..d).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
    (0..sketches)
        .into_par_iter()
        .map(|i| {
            let a = sample_projection::<f64>(family, k, d, seeding::derive_seed(seed, &[2, i as u64]))?;
            slawski_ratio(x.view(), w.view(), &a, r)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Local complexity fixed point

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoStar {
    pub value: f64,
    /// `|φ(ρ*) - ρ*|`.
    pub residual: f64,
    /// `6 C_cn k log₊(Λβn)/n`.
    pub reference_bound: f64,
    pub within_reference_bound: bool,
}

/// `φ(r) = 2√(C_cn k r/n) · log₊^{1/2}(Λβn/(k√r))`.
pub fn complexity_bound(r: f64, n: f64, k: f64, c_cn: f64, lambda_lip: f64, beta: f64) -> Result<f64> {
    Ok(2.0 * (c_cn * k * r / n).sqrt() * log_plus(lambda_lip * beta * n / (k * r.sqrt()))?.sqrt())
}

/// Fixed point of [`complexity_bound`] by bisection. `φ(r)/r` is strictly
/// decreasing, so the root of `φ(r) - r` is unique.
pub fn rho_star(n: f64, k: f64, c_cn: f64, lambda_lip: f64, beta: f64) -> Result<RhoStar> {
    for (name, v) in [("n", n), ("k", k), ("c_cn", c_cn), ("lambda_lip", lambda_lip), ("beta", beta)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(name, "must be positive and finite"));
        }
    }
    let phi = |r: f64| complexity_bound(r, n, k, c_cn, lambda_lip, beta);
    let mut hi = 1.0;
    let mut steps = 0;
    while phi(hi)? >= hi {
        hi *= 2.0;
        steps += 1;
        if steps > 2000 {
            return Err(Error::NoFixedPoint("upper bracket not found".into()));
        }
    }
    let mut lo = hi;
    while phi(lo)? < lo {
        lo *= 0.5;
        steps += 1;
        if steps > 4000 || lo == 0.0 {
            return Err(Error::NoFixedPoint("lower bracket not found".into()));
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi {
            break;
        }
        if phi(mid)? >= mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let value = 0.5 * (lo + hi);
    let reference_bound = 6.0 * c_cn * k * log_plus(lambda_lip * beta * n)? / n;
    Ok(RhoStar {
        value,
        residual: (phi(value)? - value).abs(),
        reference_bound,
        within_reference_bound: value <= reference_bound,
    })
}

// ---------------------------------------------------------------------------
// Empirical Rademacher average

/// Largest `n` enumerated exactly.
pub const RADEMACHER_EXACT_MAX_N: usize = 16;

/// `E_σ[max_f (1/n) Σ_j σ_j g_f(z_j)]` for the rows `g_f` of `values`.
/// Exact for `n <= 16`, otherwise a Monte-Carlo mean over `mc_draws` sign
/// vectors.
pub fn empirical_rademacher(values: ArrayView2<'_, f64>, mc_draws: usize, seed: u64) -> Result<RiskEstimate> {
    let (f, n) = values.dim();
    if f == 0 || n == 0 {
        return Err(Error::InvalidDimension(format!("function matrix is {f} x {n}")));
    }
    let sup = |sigma: &[f64]| {
        values
            .outer_iter()
            .map(|row| row.iter().zip(sigma).map(|(g, s)| g * s).sum::<f64>() / n as f64)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    if n <= RADEMACHER_EXACT_MAX_N {
        let total = 1usize << n;
        let mut acc = 0.0;
        let mut sigma = vec![0.0; n];
        for mask in 0..total {
            for (j, s) in sigma.iter_mut().enumerate() {
                *s = if mask >> j & 1 == 1 { 1.0 } else { -1.0 };
            }
            acc += sup(&sigma);
        }
        return Ok(RiskEstimate::exact(acc / total as f64, total));
    }
    if mc_draws == 0 {
        return Err(invalid("mc_draws", "must be positive"));
    }
    let mut rng = seeding::rng(seed);
    let mut sigma = vec![0.0; n];
    let vals: Vec<f64> = (0..mc_draws)
        .map(|_| {
            for s in sigma.iter_mut() {
                *s = if rng.random::<bool>() { 1.0 } else { -1.0 };
            }
            sup(&sigma)
        })
        .collect();
    Ok(RiskEstimate::from_values(&vals))
}

/// Wraps a hypothesis and projection as a predictor on the original space.
pub fn compose(a: &Projection<f64>, h: &LinearHypothesis<f64>, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    h.predict(a.apply(x)?.view())
}
