//! Hypercube-indexed lower-bound family.
//!
//! For `σ ∈ {-1, +1}^q` the law `P^σ` lives on the `q + 1` points
//! `x_0 = e_0` and `x_ℓ = r·e_ℓ`, with `μ({x_0}) = 1 - v`,
//! `μ({x_ℓ}) = v/q`, `η(x_0) = 1` and `η(x_ℓ) = (1 + ε σ_ℓ)/2`.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Atom, LabelKind, LabelLaw, Law};
use crate::error::{invalid, Error, Result};
use crate::seeding;

/// Relative slack allowed when comparing quantities that agree in exact
/// arithmetic.
const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssouadParams {
    pub q: usize,
    pub r: f64,
    pub v: f64,
    pub epsilon: f64,
}

impl AssouadParams {
    /// Requires `q >= 1`, `r ∈ [1, √q]`, `v ∈ (0, 1]` and `ε ∈ (0, 1/2)`.
    pub fn new(q: usize, r: f64, v: f64, epsilon: f64) -> Result<Self> {
        let p = Self { q, r, v, epsilon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(invalid("q", "must be positive"));
        }
        let sq = (self.q as f64).sqrt();
        if !(self.r >= 1.0 && self.r <= sq * (1.0 + REL_TOL)) {
            return Err(invalid("r", format!("must lie in [1, sqrt(q)] = [1, {sq}], got {}", self.r)));
        }
        if !(self.v > 0.0 && self.v <= 1.0) {
            return Err(invalid("v", "must lie in (0, 1]"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(invalid("epsilon", "must lie in (0, 1/2)"));
        }
        Ok(())
    }

    /// `|w∘·x_ℓ - t∘| = r/√(2q)`, the margin of the perturbed atoms.
    pub fn atom_margin(&self) -> f64 {
        self.r / (2.0 * self.q as f64).sqrt()
    }
}

fn check_exponents(gamma: f64, rho: f64, alpha: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid("gamma", "must be positive"));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(invalid("rho", "must be positive"));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid("alpha", "must lie in [0, 1)"));
    }
    Ok(())
}

/// Smallest sample size for which [`build_assouad_family`] is defined:
/// `max{1 + 2^{6D/(ργ(2-α))}, 2^{D/(ργ(1-α))}}` with
/// `D = 2(γ+ρ) + γρ(2-α)`.
pub fn assouad_n0(gamma: f64, rho: f64, alpha: f64) -> Result<f64> {
    check_exponents(gamma, rho, alpha)?;
    let gr = gamma * rho;
    let d = 2.0 * (gamma + rho) + gr * (2.0 - alpha);
    let a = 1.0 + (6.0 * d / (gr * (2.0 - alpha))).exp2();
    let b = (d / (gr * (1.0 - alpha))).exp2();
    Ok(a.max(b))
}

/// Parameters of the minimax construction at sample size `n`:
/// `q = ⌈(2⁵n)^{2(γ+ρ)/D}⌉`, `r = q^{γ/(2(γ+ρ))}`,
/// `v = q^{-ργα/(2(γ+ρ))}` and `ε = q^{-γρ(1-α)/(2(γ+ρ))}`.
pub fn build_assouad_family(n: u64, gamma: f64, rho: f64, alpha: f64) -> Result<AssouadParams> {
    let n0 = assouad_n0(gamma, rho, alpha)?;
    let nf = n as f64;
    if nf < n0 {
        return Err(Error::SmallSample { n: nf, n0 });
    }
    let s = gamma + rho;
    let d = 2.0 * s + gamma * rho * (2.0 - alpha);
    let q = (32.0 * nf).powf(2.0 * s / d).ceil();
    let r = q.powf(gamma / (2.0 * s));
    let v = q.powf(-rho * gamma * alpha / (2.0 * s));
    let epsilon = q.powf(-gamma * rho * (1.0 - alpha) / (2.0 * s));
    if q >= nf {
        return Err(invalid("n", format!("construction needs q < n, got q = {q}")));
    }
    AssouadParams::new(q as usize, r, v, epsilon)
}

/// Class constants `Γ = (γ, C_G, ρ, C_M, α, C_T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipConstants {
    pub gamma: f64,
    pub c_g: f64,
    pub rho: f64,
    pub c_m: f64,
    pub alpha: f64,
    pub c_t: f64,
}

impl MembershipConstants {
    /// `C_G = 2^{γ/2}`, `C_M = C_T = 1`.
    pub fn construction(gamma: f64, rho: f64, alpha: f64) -> Self {
        Self {
            gamma,
            c_g: (gamma / 2.0).exp2(),
            rho,
            c_m: 1.0,
            alpha,
            c_t: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membership {
    pub geom: bool,
    pub moment: bool,
    pub tsybakov: bool,
}

impl Membership {
    pub fn all(&self) -> bool {
        self.geom && self.moment && self.tsybakov
    }
}

fn leq(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + REL_TOL * rhs.abs()
}

/// Sufficient conditions for class membership:
/// `εv ≤ C_G (r/√(2q))^γ`, `εv ≤ C_M r^{-ρ}` and `v ≤ C_T ε^{α/(1-α)}`.
pub fn check_membership(params: &AssouadParams, c: &MembershipConstants) -> Membership {
    let ev = params.epsilon * params.v;
    let q = params.q as f64;
    let tsy_exp = c.alpha / (1.0 - c.alpha);
    Membership {
        geom: leq(ev, c.c_g * (params.r / (2.0 * q).sqrt()).powf(c.gamma)),
        moment: leq(ev, c.c_m * params.r.powf(-c.rho)),
        tsybakov: leq(params.v, c.c_t * params.epsilon.powf(tsy_exp)),
    }
}

/// One member `P^σ` of the family.
#[derive(Debug, Clone, PartialEq)]
pub struct AssouadDist {
    params: AssouadParams,
    sigma: Vec<i8>,
}

impl AssouadDist {
    pub fn new(params: AssouadParams, sigma: Vec<i8>) -> Result<Self> {
        params.validate()?;
        if sigma.len() != params.q {
            return Err(Error::DimensionMismatch {
                expected: params.q,
                got: sigma.len(),
            });
        }
        if sigma.iter().any(|&s| s != 1 && s != -1) {
            return Err(invalid("sigma", "entries must be ±1"));
        }
        Ok(Self { params, sigma })
    }

    /// `σ` with i.i.d. uniform signs.
    pub fn random_sigma(params: AssouadParams, seed: u64) -> Result<Self> {
        let mut rng = seeding::rng(seed);
        let sigma = (0..params.q).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        Self::new(params, sigma)
    }

    pub fn params(&self) -> &AssouadParams {
        &self.params
    }

    pub fn sigma(&self) -> &[i8] {
        &self.sigma
    }

    /// The member with `σ_ℓ` flipped.
    pub fn flipped(&self, l: usize) -> Result<Self> {
        if l >= self.params.q {
            return Err(invalid("l", "index out of range"));
        }
        let mut sigma = self.sigma.clone();
        sigma[l] = -sigma[l];
        Self::new(self.params, sigma)
    }

    /// `η^σ(x_ℓ)` for `ℓ ∈ [q]` (one-based), `1` for `ℓ = 0`.
    pub fn eta(&self, l: usize) -> f64 {
        if l == 0 {
            1.0
        } else {
            0.5 * (1.0 + self.params.epsilon * f64::from(self.sigma[l - 1]))
        }
    }

    /// `μ({x_ℓ})`.
    pub fn mass(&self, l: usize) -> f64 {
        if l == 0 {
            1.0 - self.params.v
        } else {
            self.params.v / self.params.q as f64
        }
    }

    /// The support point `x_ℓ`.
    pub fn point(&self, l: usize) -> Array1<f64> {
        let mut x = Array1::zeros(self.params.q + 1);
        x[l] = if l == 0 { 1.0 } else { self.params.r };
        x
    }

    fn index_of(&self, x: ArrayView1<'_, f64>) -> Option<usize> {
        if x.len() != self.params.q + 1 {
            return None;
        }
        let mut found = None;
        for (i, &v) in x.iter().enumerate() {
            if v != 0.0 {
                if found.is_some() {
                    return None;
                }
                found = Some(i);
            }
        }
        let l = found?;
        let expect = if l == 0 { 1.0 } else { self.params.r };
        (x[l] == expect).then_some(l)
    }
}

impl Law for AssouadDist {
    fn dim(&self) -> usize {
        self.params.q + 1
    }

    fn label_kind(&self) -> LabelKind {
        LabelKind::Binary
    }

    fn sample(&self, n: usize, seed: u64) -> Result<(Array2<f64>, Array1<f64>)> {
        let mut rng = seeding::rng(seed);
        let q = self.params.q;
        let mut x = Array2::zeros((n, q + 1));
        let mut y = Array1::zeros(n);
        for i in 0..n {
            let l = if rng.random::<f64>() < self.params.v { rng.random_range(1..=q) } else { 0 };
            x[[i, l]] = if l == 0 { 1.0 } else { self.params.r };
            y[i] = if rng.random::<f64>() < self.eta(l) { 1.0 } else { -1.0 };
        }
        Ok((x, y))
    }

    fn label_law(&self, x: ArrayView1<'_, f64>) -> Result<LabelLaw> {
        let l = self
            .index_of(x)
            .ok_or_else(|| Error::Domain("point is outside the support of the Assouad law".into()))?;
        Ok(LabelLaw::Binary { eta: self.eta(l) })
    }

    fn support_size(&self) -> Option<usize> {
        Some(self.params.q + 1)
    }

    fn atoms(&self) -> Option<Box<dyn Iterator<Item = Atom> + '_>> {
        Some(Box::new((0..=self.params.q).map(move |l| Atom {
            x: self.point(l),
            prob: self.mass(l),
            labels: LabelLaw::Binary { eta: self.eta(l) },
        })))
    }

    /// `w∘ = (e_0 + q^{-1/2} Σ σ_ℓ e_ℓ)/√2`, `t∘ = 0`.
    fn reference_hyperplane(&self) -> Option<(Array1<f64>, f64)> {
        let q = self.params.q as f64;
        let mut w = Array1::zeros(self.params.q + 1);
        w[0] = 1.0 / 2f64.sqrt();
        for (l, &s) in self.sigma.iter().enumerate() {
            w[l + 1] = f64::from(s) / (2.0 * q).sqrt();
        }
        Some((w, 0.0))
    }
}

/// `χ²(P, P')` summed over every `(x_ℓ, y)`. Both laws must share
/// `(q, r, v, ε)`.
pub fn chi_square(p: &AssouadDist, p_ref: &AssouadDist) -> Result<f64> {
    if p.params != p_ref.params {
        return Err(invalid("p_ref", "laws must share their parameters"));
    }
    let mut total = 0.0;
    for l in 0..=p.params.q {
        let mass = p.mass(l);
        let (e, e_ref) = (p.eta(l), p_ref.eta(l));
        for (a, b) in [(mass * e, mass * e_ref), (mass * (1.0 - e), mass * (1.0 - e_ref))] {
            if b > 0.0 {
                total += (a - b).powi(2) / b;
            } else if a > 0.0 {
                return Ok(f64::INFINITY);
            }
        }
    }
    Ok(total)
}

/// `2⁴ ε² v / q`.
pub fn chi_square_adjacent_bound(params: &AssouadParams) -> f64 {
    16.0 * params.epsilon.powi(2) * params.v / params.q as f64
}
