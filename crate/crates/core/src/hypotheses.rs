//! Low-dimensional linear classes and their ERM solvers.
//!
//! A [`LinearHypothesis`] scores `u ∈ R^k` as `w·u - t` and outputs either
//! the sign of the score (`sign(0) = +1`) or the score clipped to `[-β, β]`.
//!
//! Solvers:
//! * [`erm_exact_classification`]: global zero-one minimiser by enumeration
//!   of hyperplanes through affinely independent point subsets, recursing
//!   into each hyperplane to label the points lying on it. Limited to
//!   `k <= 3`, `n <= 200`.
//! * [`erm_surrogate_classification`]: full-batch gradient descent on the
//!   logistic loss in whitened coordinates, returning the iterate with the
//!   lowest zero-one risk.
//! * [`erm_regression`]: clipped-linear ERM for the squared and kl losses by
//!   a damped active-set Newton iteration with a subgradient fallback. Every
//!   accepted step strictly decreases the clipped empirical risk.
//!
//! All solvers accept optional nonnegative sample weights, so that a finite
//! distribution can be fitted at population level.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::losses::{logistic, softplus, LossKind, LossSpec};
use crate::scalar::{clip, sign, Scalar};

pub const EXACT_MAX_K: usize = 3;
pub const EXACT_MAX_N: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputMode {
    Sign,
    Clip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearHypothesis<T: Scalar> {
    pub w: Array1<T>,
    pub t: T,
    pub mode: OutputMode,
    /// Clip level; `1` and unused in sign mode.
    pub beta: T,
}

impl<T: Scalar> LinearHypothesis<T> {
    pub fn sign(w: Array1<T>, t: T) -> Result<Self> {
        Self::validated(w, t, OutputMode::Sign, T::one())
    }

    pub fn clip(w: Array1<T>, t: T, beta: T) -> Result<Self> {
        if !(beta > T::zero() && beta.is_finite()) {
            return Err(invalid("beta", "must be positive and finite"));
        }
        Self::validated(w, t, OutputMode::Clip, beta)
    }

    fn validated(w: Array1<T>, t: T, mode: OutputMode, beta: T) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidDimension("hypothesis needs k >= 1".into()));
        }
        if !t.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(invalid("w", "weights and offset must be finite"));
        }
        Ok(Self { w, t, mode, beta })
    }

    pub fn k(&self) -> usize {
        self.w.len()
    }

    #[inline]
    pub fn score(&self, u: ArrayView1<'_, T>) -> T {
        self.w.dot(&u) - self.t
    }

    #[inline]
    pub fn output(&self, score: T) -> T {
        match self.mode {
            OutputMode::Sign => sign(score),
            OutputMode::Clip => clip(score, self.beta),
        }
    }

    pub fn predict_point(&self, u: ArrayView1<'_, T>) -> Result<T> {
        if u.len() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                got: u.len(),
            });
        }
        Ok(self.output(self.score(u)))
    }

    /// Predictions for each row of `u` (`n x k`).
    pub fn predict(&self, u: ArrayView2<'_, T>) -> Result<Array1<T>> {
        if u.ncols() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                got: u.ncols(),
            });
        }
        Ok(u.dot(&self.w).mapv(|s| self.output(s - self.t)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Exact,
    Surrogate,
}

impl std::str::FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "surrogate" => Ok(Self::Surrogate),
            other => Err(invalid("solver", format!("unknown solver `{other}`"))),
        }
    }
}

/// Which algorithm produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErmMethod {
    Exact,
    Surrogate,
    ClippedDescent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErmReport<T: Scalar> {
    pub hypothesis: LinearHypothesis<T>,
    /// Weighted mean loss of `hypothesis` on the training pairs, recomputed
    /// after solving.
    pub empirical_risk: T,
    pub method: ErmMethod,
    /// Achieved risk minus the exact minimum, when the exact solver ran.
    pub surrogate_gap: Option<T>,
    /// Objective values at checkpoints (surrogate objective for the
    /// logistic solver, clipped risk for regression).
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

/// Weighted mean loss of `h` on `(u, y)`.
pub fn empirical_risk<T: Scalar>(
    h: &LinearHypothesis<T>,
    loss: &LossSpec<T>,
    u: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    weights: Option<ArrayView1<'_, T>>,
) -> Result<T> {
    check_shapes(u, y.len(), weights.map(|w| w.len()))?;
    let preds = h.predict(u)?;
    let mut num = T::zero();
    let mut den = T::zero();
    for i in 0..y.len() {
        let wi = weights.map_or(T::one(), |w| w[i]);
        num = num + wi * loss.eval(preds[i], y[i])?;
        den = den + wi;
    }
    Ok(num / den)
}

fn check_shapes<T: Scalar>(u: ArrayView2<'_, T>, ny: usize, nw: Option<usize>) -> Result<()> {
    let n = u.nrows();
    if n == 0 || u.ncols() == 0 {
        return Err(Error::InvalidDimension(format!("design is {n} x {}", u.ncols())));
    }
    if ny != n {
        return Err(Error::DimensionMismatch { expected: n, got: ny });
    }
    if let Some(nw) = nw {
        if nw != n {
            return Err(Error::DimensionMismatch { expected: n, got: nw });
        }
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(invalid("U", "entries must be finite"));
    }
    Ok(())
}

fn weights_f64<T: Scalar>(n: usize, weights: Option<ArrayView1<'_, T>>) -> Result<Vec<f64>> {
    let w: Vec<f64> = match weights {
        Some(w) => w.iter().map(|v| v.as_f64()).collect(),
        None => vec![1.0; n],
    };
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid("weights", "must be finite and nonnegative"));
    }
    if w.iter().sum::<f64>() <= 0.0 {
        return Err(invalid("weights", "must have positive total"));
    }
    Ok(w)
}

fn binary_labels<T: Scalar>(y: ArrayView1<'_, T>) -> Result<Vec<f64>> {
    y.iter()
        .map(|&v| {
            if v == T::one() || v == -T::one() {
                Ok(v.as_f64())
            } else {
                Err(Error::Domain(format!("classification label {v} is not ±1")))
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Exact zero-one ERM

/// Global minimiser of the empirical zero-one risk over `sign(w·u - t)`.
pub fn erm_exact_classification<T: Scalar>(
    u: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
) -> Result<ErmReport<T>> {
    erm_exact_classification_weighted(u, y, None)
}

pub fn erm_exact_classification_weighted<T: Scalar>(
    u: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    weights: Option<ArrayView1<'_, T>>,
) -> Result<ErmReport<T>> {
    check_shapes(u, y.len(), weights.map(|w| w.len()))?;
    let (n, k) = u.dim();
    if k > EXACT_MAX_K || n > EXACT_MAX_N {
        return Err(Error::ScaleGuard(format!(
            "n = {n}, k = {k}; limits are n <= {EXACT_MAX_N}, k <= {EXACT_MAX_K}"
        )));
    }
    let labels = binary_labels(y)?;
    let wts = weights_f64(n, weights)?;
    let pts: Vec<Vec<f64>> = u.outer_iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect();

    let (origin, basis) = affine_hull(&pts);
    let solver = ExactSolver {
        pts: &pts,
        y: &labels,
        wts: &wts,
        k,
    };
    let idx: Vec<usize> = (0..n).collect();
    let best = solver.solve(&idx, &origin, &basis);

    let h = LinearHypothesis::sign(best.w.iter().map(|&v| T::of(v)).collect(), T::of(best.t))?;
    let loss = crate::losses::make_loss(LossKind::ZeroOne, T::one())?;
    let risk = empirical_risk(&h, &loss, u, y, weights)?;
    let total: f64 = wts.iter().sum();
    let combinatorial = best.err / total;
    if (risk.as_f64() - combinatorial).abs() > 1e-9 {
        log::warn!(
            "exact solver audit: enumerated risk {combinatorial} but hypothesis attains {}",
            risk.as_f64()
        );
    }
    Ok(ErmReport {
        hypothesis: h,
        empirical_risk: risk,
        method: ErmMethod::Exact,
        surrogate_gap: None,
        objective_trace: vec![combinatorial],
        iterations: 0,
    })
}

struct Candidate {
    err: f64,
    w: Vec<f64>,
    t: f64,
}

struct ExactSolver<'a> {
    pts: &'a [Vec<f64>],
    y: &'a [f64],
    wts: &'a [f64],
    k: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Centroid and orthonormal basis of the affine hull of `pts`.
fn affine_hull(pts: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = pts.len();
    let k = pts[0].len();
    let mut centroid = vec![0.0; k];
    for p in pts {
        for (c, v) in centroid.iter_mut().zip(p) {
            *c += v / n as f64;
        }
    }
    let centred = DMatrix::from_fn(n, k, |i, j| pts[i][j] - centroid[j]);
    let svd = centred.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut basis = Vec::new();
    if smax > 0.0 {
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if s > 1e-10 * smax {
                basis.push(v_t.row(i).iter().cloned().collect());
            }
        }
    }
    (centroid, basis)
}

impl ExactSolver<'_> {
    fn constant(&self, idx: &[usize]) -> Candidate {
        let mut err_pos = 0.0;
        let mut err_neg = 0.0;
        for &i in idx {
            if self.y[i] > 0.0 {
                err_neg += self.wts[i];
            } else {
                err_pos += self.wts[i];
            }
        }
        let (err, t) = if err_pos <= err_neg { (err_pos, -1.0) } else { (err_neg, 1.0) };
        Candidate {
            err,
            w: vec![0.0; self.k],
            t,
        }
    }

    fn eval(&self, c: &Candidate, i: usize) -> f64 {
        dot(&c.w, &self.pts[i]) - c.t
    }

    /// Best labelling of `idx`, whose affine hull is `origin + span(basis)`.
    fn solve(&self, idx: &[usize], origin: &[f64], basis: &[Vec<f64>]) -> Candidate {
        let mut best = self.constant(idx);
        let j = basis.len();
        if j == 0 || best.err == 0.0 {
            return best;
        }
        let coords: Vec<Vec<f64>> = idx
            .iter()
            .map(|&i| {
                let d = sub(&self.pts[i], origin);
                basis.iter().map(|b| dot(b, &d)).collect()
            })
            .collect();
        let spread = coords.iter().map(|c| norm(c)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let tol = 1e-10 * spread;

        let m = idx.len();
        let mut combo: Vec<usize> = (0..j).collect();
        if m < j {
            return best;
        }
        loop {
            self.try_subset(idx, &coords, &combo, basis, tol, &mut best);
            if best.err == 0.0 {
                break;
            }
            // advance to the next j-combination of 0..m
            let mut pos = j;
            while pos > 0 && combo[pos - 1] == m - j + pos - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            combo[pos - 1] += 1;
            for q in pos..j {
                combo[q] = combo[q - 1] + 1;
            }
        }
        best
    }

    fn try_subset(
        &self,
        idx: &[usize],
        coords: &[Vec<f64>],
        combo: &[usize],
        basis: &[Vec<f64>],
        tol: f64,
        best: &mut Candidate,
    ) {
        let j = basis.len();
        let c0 = &coords[combo[0]];
        let normal: Vec<f64> = match j {
            1 => vec![1.0],
            2 => {
                let d = sub(&coords[combo[1]], c0);
                if norm(&d) <= tol {
                    return;
                }
                vec![-d[1], d[0]]
            }
            3 => {
                let a = sub(&coords[combo[1]], c0);
                let b = sub(&coords[combo[2]], c0);
                let c = vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
                if norm(&c) <= 1e-10 * norm(&a) * norm(&b) || norm(&a) <= tol || norm(&b) <= tol {
                    return;
                }
                c
            }
            _ => unreachable!("exact solver is limited to three dimensions"),
        };
        let nn = norm(&normal);
        let normal: Vec<f64> = normal.iter().map(|v| v / nn).collect();

        let mut on = Vec::new();
        let mut h_vals = Vec::with_capacity(idx.len());
        let mut err_plus = 0.0;
        let mut off_total = 0.0;
        for (pos, &i) in idx.iter().enumerate() {
            let h = dot(&normal, &sub(&coords[pos], c0));
            h_vals.push(h);
            if combo.contains(&pos) || h.abs() <= tol {
                on.push(pos);
            } else {
                off_total += self.wts[i];
                if (h > 0.0) != (self.y[i] > 0.0) {
                    err_plus += self.wts[i];
                }
            }
        }
        let err_minus = off_total - err_plus;
        let (orient, off_err) = if err_plus <= err_minus { (1.0, err_plus) } else { (-1.0, err_minus) };
        if off_err >= best.err {
            return;
        }

        // Recurse into the hyperplane through the chosen points.
        let p0 = &self.pts[idx[combo[0]]];
        let mut sub_basis: Vec<Vec<f64>> = Vec::new();
        for &c in &combo[1..] {
            let mut v = sub(&self.pts[idx[c]], p0);
            for b in &sub_basis {
                let proj = dot(&v, b);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= proj * bi;
                }
            }
            let nv = norm(&v);
            if nv <= tol {
                return;
            }
            sub_basis.push(v.iter().map(|x| x / nv).collect());
        }
        let on_idx: Vec<usize> = on.iter().map(|&p| idx[p]).collect();
        let inner = self.solve(&on_idx, p0, &sub_basis);
        let total = off_err + inner.err;
        if total >= best.err {
            return;
        }

        // Materialise h + delta * g with h the oriented hyperplane.
        let mut w_h = vec![0.0; self.k];
        for (a, b) in normal.iter().zip(basis) {
            for (wi, bi) in w_h.iter_mut().zip(b) {
                *wi += orient * a * bi;
            }
        }
        let t_h = dot(&w_h, p0);
        let mut min_h = f64::INFINITY;
        let mut max_g: f64 = 0.0;
        for (pos, &i) in idx.iter().enumerate() {
            if !on.contains(&pos) {
                min_h = min_h.min(h_vals[pos].abs());
                max_g = max_g.max(self.eval(&inner, i).abs());
            }
        }
        let delta = if max_g > 0.0 && min_h.is_finite() { 0.5 * min_h / max_g } else { 1.0 };
        let w: Vec<f64> = w_h.iter().zip(&inner.w).map(|(a, b)| a + delta * b).collect();
        let t = t_h + delta * inner.t;
        *best = Candidate { err: total, w, t };
    }
}

// ---------------------------------------------------------------------------
// Shared numerics for the descent solvers

/// Rows `(u, -1)`, so that `θ·ũ = w·u - t` for `θ = (w, t)`.
fn augmented<T: Scalar>(u: ArrayView2<'_, T>) -> Array2<f64> {
    let (n, k) = u.dim();
    let mut a = Array2::from_elem((n, k + 1), -1.0);
    a.slice_mut(ndarray::s![.., ..k]).assign(&u.mapv(|v| v.as_f64()));
    a
}

fn weighted_second_moment(a: &Array2<f64>, wts: &[f64]) -> DMatrix<f64> {
    let p = a.ncols();
    let total: f64 = wts.iter().sum();
    let mut m = DMatrix::zeros(p, p);
    for (row, &w) in a.outer_iter().zip(wts) {
        if w == 0.0 {
            continue;
        }
        for r in 0..p {
            let wr = w * row[r] / total;
            for c in r..p {
                m[(r, c)] += wr * row[c];
            }
        }
    }
    for r in 0..p {
        for c in 0..r {
            m[(r, c)] = m[(c, r)];
        }
    }
    m
}

/// Symmetric pseudo-inverse power `M^{power}` over eigenvalues above a
/// relative floor; directions below it map to zero.
fn sym_pinv_power(m: &DMatrix<f64>, power: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-12 * lmax;
    let d = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| if l > floor && l > 0.0 { l.powf(power) } else { 0.0 }),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

fn lambda_max(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().cloned().fold(0.0, f64::max)
}

fn to_ndarray(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

// ---------------------------------------------------------------------------
// Logistic surrogate

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConfig {
    pub iters: usize,
    /// Step size in whitened coordinates; `None` uses `4 / λ_max`.
    pub step: Option<f64>,
    /// Record the objective every this many iterations.
    pub checkpoint_every: usize,
    /// Stop once the surrogate objective decreases by less than this
    /// relative amount over `checkpoint_every` iterations.
    pub rel_tol: f64,
    /// Run the exact solver to report the gap when the instance is small.
    pub exact_gap: bool,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            iters: 2000,
            step: None,
            checkpoint_every: 50,
            rel_tol: 1e-9,
            exact_gap: true,
        }
    }
}

pub fn erm_surrogate_classification<T: Scalar>(
    u: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    cfg: &SurrogateConfig,
) -> Result<ErmReport<T>> {
    erm_surrogate_classification_weighted(u, y, None, cfg)
}

pub fn erm_surrogate_classification_weighted<T: Scalar>(
    u: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    weights: Option<ArrayView1<'_, T>>,
    cfg: &SurrogateConfig,
) -> Result<ErmReport<T>> {
    check_shapes(u, y.len(), weights.map(|w| w.len()))?;
    if cfg.checkpoint_every == 0 {
        return Err(invalid("checkpoint_every", "must be positive"));
    }
    let labels = binary_labels(y)?;
    let wts = weights_f64(u.nrows(), weights)?;
    let total: f64 = wts.iter().sum();
    let a = augmented(u);
    let m = weighted_second_moment(&a, &wts);
    let whiten = to_ndarray(&sym_pinv_power(&m, -0.5));
    // z_i = W ũ_i with W symmetric; the iterate is φ and θ = W φ.
    let z = a.dot(&whiten);
    let zm = weighted_second_moment(&z, &wts);
    let step = cfg.step.unwrap_or_else(|| {
        let l = lambda_max(&zm);
        if l > 0.0 {
            4.0 / l
        } else {
            1.0
        }
    });
    let yz: Array2<f64> = {
        let mut yz = z.clone();
        for (mut row, &yi) in yz.outer_iter_mut().zip(&labels) {
            row *= yi;
        }
        yz
    };

    let p = a.ncols();
    let mut phi = Array1::<f64>::zeros(p);
    let objective = |margins: &Array1<f64>| -> f64 {
        margins.iter().zip(&wts).map(|(&mg, &w)| w * softplus(-mg)).sum::<f64>() / total
    };
    let zero_one = |margins: &Array1<f64>| -> f64 {
        // margin y·s with s = 0 predicting +1
        margins
            .iter()
            .zip(&labels)
            .zip(&wts)
            .map(|((&mg, &yi), &w)| {
                let s = mg * yi;
                let pred = if s >= 0.0 { 1.0 } else { -1.0 };
                if pred == yi { 0.0 } else { w }
            })
            .sum::<f64>()
            / total
    };

    let mut margins = yz.dot(&phi);
    let mut best_phi = phi.clone();
    let mut best_risk = zero_one(&margins);
    let mut trace = vec![objective(&margins)];
    let mut last_checkpoint = trace[0];
    let mut iterations = 0;
    for it in 1..=cfg.iters {
        if best_risk == 0.0 {
            break;
        }
        // gradient of mean softplus(-m_i) in φ is -mean σ(-m_i) yz_i
        let coef: Array1<f64> = margins
            .iter()
            .zip(&wts)
            .map(|(&mg, &w)| -w * logistic(-mg) / total)
            .collect();
        let grad = yz.t().dot(&coef);
        if grad.iter().all(|g| g.abs() < 1e-15) {
            break;
        }
        phi.scaled_add(-step, &grad);
        margins = yz.dot(&phi);
        iterations = it;
        let risk = zero_one(&margins);
        if risk < best_risk {
            best_risk = risk;
            best_phi.assign(&phi);
        }
        if it % cfg.checkpoint_every == 0 {
            let obj = objective(&margins);
            trace.push(obj);
            if last_checkpoint - obj <= cfg.rel_tol * last_checkpoint.abs() {
                break;
            }
            last_checkpoint = obj;
        }
    }

    let theta = whiten.dot(&best_phi);
    let k = u.ncols();
    let h = LinearHypothesis::sign(
        theta.slice(ndarray::s![..k]).mapv(T::of),
        T::of(theta[k]),
    )?;
    let loss = crate::losses::make_loss(LossKind::ZeroOne, T::one())?;
    let risk = empirical_risk(&h, &loss, u, y, weights)?;
    let surrogate_gap = if cfg.exact_gap && k <= EXACT_MAX_K && u.nrows() <= EXACT_MAX_N {
        let exact = erm_exact_classification_weighted(u, y, weights)?;
        Some((risk - exact.empirical_risk).max(T::zero()))
    } else {
        None
    };
    Ok(ErmReport {
        hypothesis: h,
        empirical_risk: risk,
        method: ErmMethod::Surrogate,
        surrogate_gap,
        objective_trace: trace,
        iterations,
    })
}

// ---------------------------------------------------------------------------
// Clipped-linear regression

/// Unclipped weighted least squares `(w, t)` via the pseudo-inverse of the
/// design with an appended `-1` column.
pub fn ols_fit<T: Scalar>(
    u: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    weights: Option<ArrayView1<'_, T>>,
) -> Result<(Array1<T>, T)> {
    check_shapes(u, y.len(), weights.map(|w| w.len()))?;
    let wts = weights_f64(u.nrows(), weights)?;
    let a = augmented(u);
    let yv: Vec<f64> = y.iter().map(|v| v.as_f64()).collect();
    let theta = weighted_lstsq(&a, &yv, &wts, |_| true);
    let k = u.ncols();
    Ok((theta.slice(ndarray::s![..k]).mapv(T::of), T::of(theta[k])))
}

/// Minimises `Σ_{i: keep(i)} w_i (θ·a_i - y_i)²` with the SVD pseudo-inverse.
fn weighted_lstsq(a: &Array2<f64>, y: &[f64], wts: &[f64], keep: impl Fn(usize) -> bool) -> Array1<f64> {
    let rows: Vec<usize> = (0..a.nrows()).filter(|&i| keep(i) && wts[i] > 0.0).collect();
    let p = a.ncols();
    if rows.is_empty() {
        return Array1::zeros(p);
    }
    let mat = DMatrix::from_fn(rows.len(), p, |r, c| wts[rows[r]].sqrt() * a[[rows[r], c]]);
    let rhs = DVector::from_iterator(rows.len(), rows.iter().map(|&i| wts[i].sqrt() * y[i]));
    let svd = mat.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let sol = svd
        .solve(&rhs, 1e-12 * smax.max(f64::MIN_POSITIVE))
        .expect("both factors computed");
    Array1::from_iter(sol.iter().cloned())
}

struct ClippedObjective<'a> {
    loss: LossKind,
    beta: f64,
    a: &'a Array2<f64>,
    y: &'a [f64],
    wts: &'a [f64],
    total: f64,
}

impl ClippedObjective<'_> {
    fn point_loss(&self, v: f64, y: f64) -> f64 {
        match self.loss {
            LossKind::Squared => (v - y) * (v - y),
            LossKind::Kl => softplus(-(2.0 * y - 1.0) * v),
            LossKind::ZeroOne => unreachable!("regression excludes zero-one"),
        }
    }

    /// First and second derivative of the unclipped loss in the score.
    fn derivs(&self, s: f64, y: f64) -> (f64, f64) {
        match self.loss {
            LossKind::Squared => (2.0 * (s - y), 2.0),
            LossKind::Kl => {
                let sg = 2.0 * y - 1.0;
                let p = logistic(-sg * s);
                (-sg * p, p * (1.0 - p))
            }
            LossKind::ZeroOne => unreachable!("regression excludes zero-one"),
        }
    }

    fn value(&self, scores: &Array1<f64>) -> f64 {
        scores
            .iter()
            .zip(self.y)
            .zip(self.wts)
            .map(|((&s, &y), &w)| w * self.point_loss(s.clamp(-self.beta, self.beta), y))
            .sum::<f64>()
            / self.total
    }

    /// Points that influence the next step: those strictly inside the clip
    /// range, and saturated points whose loss would fall if moved inward.
    fn relaxed_active(&self, scores: &Array1<f64>) -> Vec<bool> {
        scores
            .iter()
            .zip(self.y)
            .map(|(&s, &y)| {
                if s.abs() < self.beta {
                    true
                } else {
                    let edge = s.clamp(-self.beta, self.beta);
                    let (d1, _) = self.derivs(edge, y);
                    (s >= self.beta && d1 > 0.0) || (s <= -self.beta && d1 < 0.0)
                }
            })
            .collect()
    }

    fn newton_direction(&self, scores: &Array1<f64>, active: &[bool]) -> Array1<f64> {
        let p = self.a.ncols();
        let mut hess = DMatrix::<f64>::zeros(p, p);
        let mut grad = DVector::<f64>::zeros(p);
        for (i, row) in self.a.outer_iter().enumerate() {
            if !active[i] || self.wts[i] == 0.0 {
                continue;
            }
            let (d1, d2) = self.derivs(scores[i], self.y[i]);
            for r in 0..p {
                grad[r] += self.wts[i] * d1 * row[r];
                for c in 0..p {
                    hess[(r, c)] += self.wts[i] * d2 * row[r] * row[c];
                }
            }
        }
        let step = -(sym_pinv_power(&hess, -1.0) * grad);
        Array1::from_iter(step.iter().cloned())
    }

    /// Negative subgradient of the clipped objective.
    fn descent_direction(&self, scores: &Array1<f64>) -> Array1<f64> {
        let p = self.a.ncols();
        let mut g = Array1::<f64>::zeros(p);
        for (i, row) in self.a.outer_iter().enumerate() {
            if scores[i].abs() < self.beta {
                let (d1, _) = self.derivs(scores[i], self.y[i]);
                g.scaled_add(-self.wts[i] * d1 / self.total, &row);
            }
        }
        g
    }
}

/// Clipped-linear ERM for `squared` or `kl` loss.
pub fn erm_regression<T: Scalar>(
    u: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    loss: &LossSpec<T>,
    iters: usize,
) -> Result<ErmReport<T>> {
    erm_regression_weighted(u, y, None, loss, iters)
}

pub fn erm_regression_weighted<T: Scalar>(
    u: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    weights: Option<ArrayView1<'_, T>>,
    loss: &LossSpec<T>,
    iters: usize,
) -> Result<ErmReport<T>> {
    check_shapes(u, y.len(), weights.map(|w| w.len()))?;
    if loss.kind == LossKind::ZeroOne {
        return Err(Error::Unsupported("erm_regression needs squared or kl loss".into()));
    }
    for &v in y.iter() {
        loss.check_label(v)?;
    }
    let wts = weights_f64(u.nrows(), weights)?;
    let a = augmented(u);
    let yv: Vec<f64> = y.iter().map(|v| v.as_f64()).collect();
    let obj = ClippedObjective {
        loss: loss.kind,
        beta: loss.beta.as_f64(),
        a: &a,
        y: &yv,
        wts: &wts,
        total: wts.iter().sum(),
    };
    let b = loss.b.as_f64();
    let m = weighted_second_moment(&a, &wts);
    let curvature = match loss.kind {
        LossKind::Squared => 2.0,
        _ => 0.25,
    };
    let lip = curvature * lambda_max(&m);
    let gd_step = if lip > 0.0 { 1.0 / lip } else { 1.0 };

    let mut theta = match loss.kind {
        LossKind::Squared => weighted_lstsq(&a, &yv, &wts, |_| true),
        _ => Array1::zeros(a.ncols()),
    };
    let mut scores = a.dot(&theta);
    let mut value = obj.value(&scores);
    let mut trace = vec![value];
    let mut iterations = 0;
    for it in 1..=iters {
        if value <= 0.0 {
            break;
        }
        let active = obj.relaxed_active(&scores);
        let mut accepted = false;
        for dir in [obj.newton_direction(&scores, &active), obj.descent_direction(&scores) * gd_step] {
            let dir_scores = a.dot(&dir);
            let mut t = 1.0;
            for _ in 0..40 {
                let trial = &scores + &(&dir_scores * t);
                let v = obj.value(&trial);
                if v < value {
                    theta.scaled_add(t, &dir);
                    scores = trial;
                    value = v;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if accepted {
                break;
            }
        }
        iterations = it;
        trace.push(value);
        if !accepted {
            break;
        }
        if it >= 50 && trace[it - 50] - value < 1e-10 * b {
            break;
        }
    }

    let k = u.ncols();
    let h = LinearHypothesis::clip(theta.slice(ndarray::s![..k]).mapv(T::of), T::of(theta[k]), loss.beta)?;
    let risk = empirical_risk(&h, loss, u, y, weights)?;
    Ok(ErmReport {
        hypothesis: h,
        empirical_risk: risk,
        method: ErmMethod::ClippedDescent,
        surrogate_gap: None,
        objective_trace: trace,
        iterations,
    })
}

/// Normal-equation residual `‖Ũᵀ(Ũθ - y)‖` of the unclipped least-squares
/// problem at `(w, t)`.
pub fn normal_equation_residual<T: Scalar>(
    u: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    w: ArrayView1<'_, T>,
    t: T,
) -> f64 {
    let a = augmented(u);
    let mut theta: Vec<f64> = w.iter().map(|v| v.as_f64()).collect();
    theta.push(t.as_f64());
    let theta = Array1::from(theta);
    let resid = a.dot(&theta) - y.mapv(|v| v.as_f64());
    a.t().dot(&resid).iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Stacks the rows `(u_i, -1)`; exposed for callers that need the design
/// matrix of the affine class.
pub fn augmented_design<T: Scalar>(u: ArrayView2<'_, T>) -> Array2<f64> {
    augmented(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::make_loss;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn brute_force_1d(u: &[f64], y: &[f64]) -> f64 {
        let n = u.len();
        let mut cuts: Vec<f64> = u.to_vec();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut thresholds = vec![cuts[0] - 1.0];
        for i in 0..n {
            thresholds.push(cuts[i]);
            let next = if i + 1 < n { cuts[i + 1] } else { cuts[i] + 2.0 };
            thresholds.push((cuts[i] + next) / 2.0);
        }
        let mut best = n;
        for &t in &thresholds {
            for s in [1.0, -1.0] {
                let e = (0..n).filter(|&i| sign(s * (u[i] - t)) != y[i]).count();
                best = best.min(e);
            }
        }
        // both constants
        let pos = y.iter().filter(|&&v| v > 0.0).count();
        best.min(pos).min(n - pos) as f64 / n as f64
    }

    #[test]
    fn separable_pair() {
        let r = erm_exact_classification(array![[-1.0], [1.0]].view(), array![-1.0, 1.0].view()).unwrap();
        assert_eq!(r.empirical_risk, 0.0);
    }

    #[test]
    fn alternating_labels_on_a_line() {
        let u = array![[0.0], [1.0], [2.0], [3.0]];
        let y = array![1.0, -1.0, 1.0, -1.0];
        let r = erm_exact_classification(u.view(), y.view()).unwrap();
        assert_eq!(r.empirical_risk, 0.25);
    }

    #[test]
    fn constant_labels() {
        let u = array![[0.3, 1.0], [2.0, -1.0], [5.0, 0.0]];
        let r = erm_exact_classification(u.view(), array![-1.0, -1.0, -1.0].view()).unwrap();
        assert_eq!(r.empirical_risk, 0.0);
    }

    #[test]
    fn scale_guard() {
        let u = Array2::<f64>::zeros((5, 4));
        let y = Array1::from_elem(5, 1.0);
        assert!(matches!(erm_exact_classification(u.view(), y.view()), Err(Error::ScaleGuard(_))));
        let u = Array2::<f64>::zeros((201, 1));
        let y = Array1::from_elem(201, 1.0);
        assert!(matches!(erm_exact_classification(u.view(), y.view()), Err(Error::ScaleGuard(_))));
    }

    #[test]
    fn xor_in_the_plane() {
        let u = array![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        let y = array![1.0, 1.0, -1.0, -1.0];
        let r = erm_exact_classification(u.view(), y.view()).unwrap();
        assert_eq!(r.empirical_risk, 0.25);
    }

    #[test]
    fn duplicates_with_conflicting_labels() {
        let u = array![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [0.0, 0.0]];
        let y = array![1.0, -1.0, 1.0, -1.0];
        let r = erm_exact_classification(u.view(), y.view()).unwrap();
        assert_eq!(r.empirical_risk, 0.25);
    }

    #[test]
    fn collinear_points_in_three_dimensions() {
        let u = Array2::from_shape_fn((6, 3), |(i, j)| (i as f64) * (j as f64 + 1.0));
        let y = array![-1.0, -1.0, -1.0, 1.0, 1.0, 1.0];
        let r = erm_exact_classification(u.view(), y.view()).unwrap();
        assert_eq!(r.empirical_risk, 0.0);
    }

    #[test]
    fn matches_brute_force_in_one_dimension() {
        let mut rng = crate::seeding::rng(3);
        for _ in 0..300 {
            let n = rng.random_range(1..=12);
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64 * 0.5).collect();
            let y: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            let r = erm_exact_classification(
                Array2::from_shape_vec((n, 1), u.clone()).unwrap().view(),
                Array1::from(y.clone()).view(),
            )
            .unwrap();
            assert_eq!(r.empirical_risk, brute_force_1d(&u, &y), "u={u:?} y={y:?}");
        }
    }

    #[test]
    fn weighted_exact_uses_weights() {
        let u = array![[0.0], [1.0], [2.0]];
        let y = array![1.0, -1.0, 1.0];
        let w = array![1.0, 5.0, 1.0];
        let r = erm_exact_classification_weighted(u.view(), y.view(), Some(w.view())).unwrap();
        assert!((r.empirical_risk - 1.0f64 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn surrogate_separates_margin_data() {
        let mut rng = crate::seeding::rng(9);
        let n = 100;
        let mut u = Array2::zeros((n, 2));
        let mut y = Array1::zeros(n);
        for i in 0..n {
            let lab = if i % 2 == 0 { 1.0 } else { -1.0 };
            let along: f64 = rng.random_range(-3.0..3.0);
            let off: f64 = lab * rng.random_range(0.5..2.0);
            u[[i, 0]] = (along + off) / 2f64.sqrt();
            u[[i, 1]] = (off - along) / 2f64.sqrt();
            y[i] = lab;
        }
        let r = erm_surrogate_classification(u.view(), y.view(), &SurrogateConfig::default()).unwrap();
        assert_eq!(r.empirical_risk, 0.0);
        assert!(r.iterations <= 2000);
    }

    #[test]
    fn surrogate_single_point() {
        let r = erm_surrogate_classification(array![[2.0]].view(), array![-1.0].view(), &SurrogateConfig::default()).unwrap();
        assert_eq!(r.empirical_risk, 0.0);
    }

    #[test]
    fn surrogate_objective_is_monotone() {
        let mut rng = crate::seeding::rng(4);
        let n = 150;
        let u = Array2::from_shape_fn((n, 3), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(n, |_| if rng.random::<bool>() { 1.0 } else { -1.0 });
        let cfg = SurrogateConfig { rel_tol: 0.0, iters: 1000, ..Default::default() };
        let r = erm_surrogate_classification(u.view(), y.view(), &cfg).unwrap();
        for pair in r.objective_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-15);
        }
        let gap = r.surrogate_gap.unwrap();
        assert!(gap >= 0.0);
    }

    #[test]
    fn regression_interpolates_single_point() {
        let l = make_loss::<f64>(LossKind::Squared, 1.0).unwrap();
        let r = erm_regression(array![[1.0]].view(), array![0.5].view(), &l, 100).unwrap();
        assert!(r.empirical_risk < 1e-24);
    }

    #[test]
    fn regression_realizable_clipped() {
        let mut rng = crate::seeding::rng(12);
        let n = 50;
        let w_star = array![1.5, -0.7, 2.0];
        let u = Array2::from_shape_fn((n, 3), |_| rng.random_range(-1.0..1.0));
        let y = u.dot(&w_star).mapv(|s| clip(s - 0.2, 1.0));
        let l = make_loss::<f64>(LossKind::Squared, 1.0).unwrap();
        let r = erm_regression(u.view(), y.view(), &l, 2000).unwrap();
        assert!(r.empirical_risk <= 1e-6, "risk {}", r.empirical_risk);
    }

    #[test]
    fn regression_constant_at_clip_level() {
        let mut rng = crate::seeding::rng(2);
        let u = Array2::from_shape_fn((20, 2), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_elem(20, 1.0);
        let l = make_loss::<f64>(LossKind::Squared, 1.0).unwrap();
        let r = erm_regression(u.view(), y.view(), &l, 500).unwrap();
        assert!(r.empirical_risk < 1e-20);
    }

    #[test]
    fn regression_kl_beats_zero() {
        let mut rng = crate::seeding::rng(5);
        let u = Array2::from_shape_fn((80, 2), |_| rng.random_range(-1.0..1.0));
        let y = u.column(0).mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
        let l = make_loss::<f64>(LossKind::Kl, 2.0).unwrap();
        let r = erm_regression(u.view(), y.view(), &l, 500).unwrap();
        assert!(r.empirical_risk < 2f64.ln());
        for pair in r.objective_trace.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
    }

    #[test]
    fn regression_rejects_zero_one() {
        let l = make_loss::<f64>(LossKind::ZeroOne, 1.0).unwrap();
        assert!(erm_regression(array![[1.0]].view(), array![1.0].view(), &l, 10).is_err());
    }

    #[test]
    fn ols_solves_normal_equations() {
        let mut rng = crate::seeding::rng(8);
        let n = 40;
        let u = Array2::from_shape_fn((n, 3), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
        let (w, t) = ols_fit(u.view(), y.view(), None).unwrap();
        assert!(normal_equation_residual(u.view(), y.view(), w.view(), t) <= 1e-6 * n as f64);
    }

    #[test]
    fn predictions_respect_modes() {
        let h = LinearHypothesis::clip(array![10.0], 0.0, 2.0).unwrap();
        assert_eq!(h.predict(array![[1.0], [-1.0], [0.1]].view()).unwrap(), array![2.0, -2.0, 1.0]);
        let s = LinearHypothesis::sign(array![1.0], 1.0).unwrap();
        assert_eq!(s.predict_point(array![1.0].view()).unwrap(), 1.0);
    }

    #[test]
    fn f32_exact_solver() {
        let u = array![[0.0f32], [1.0], [2.0], [3.0]];
        let y = array![1.0f32, -1.0, 1.0, -1.0];
        assert_eq!(erm_exact_classification(u.view(), y.view()).unwrap().empirical_risk, 0.25);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn exact_never_worse_than_surrogate(seed in 0u64..10_000, n in 1usize..30, k in 1usize..=3) {
            let mut rng = crate::seeding::rng(seed);
            let u = Array2::from_shape_fn((n, k), |_| rng.random_range(-1.0..1.0));
            let y = Array1::from_shape_fn(n, |_| if rng.random::<bool>() { 1.0 } else { -1.0 });
            let cfg = SurrogateConfig { iters: 200, ..Default::default() };
            let s = erm_surrogate_classification(u.view(), y.view(), &cfg).unwrap();
            let e = erm_exact_classification(u.view(), y.view()).unwrap();
            prop_assert!(s.empirical_risk >= e.empirical_risk);
            let zo = make_loss::<f64>(LossKind::ZeroOne, 1.0).unwrap();
            let audit = empirical_risk(&e.hypothesis, &zo, u.view(), y.view(), None).unwrap();
            prop_assert!((audit - e.objective_trace[0]).abs() < 1e-12);
        }
    }
}
