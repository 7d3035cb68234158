use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;

use super::{Atom, LabelKind, LabelLaw, Law};
use crate::error::{invalid, Error, Result};
use crate::seeding;

/// Tolerance on the total mass of a finite law.
const MASS_TOL: f64 = 1e-12;

/// A law supported on finitely many points.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDist {
    d: usize,
    atoms: Vec<Atom>,
    cumulative: Vec<f64>,
    kind: LabelKind,
    reference: Option<(Array1<f64>, f64)>,
}

impl FiniteDist {
    /// Validates dimensions, label laws and total mass.
    pub fn new(atoms: Vec<Atom>, kind: LabelKind) -> Result<Self> {
        let d = atoms
            .first()
            .ok_or_else(|| invalid("atoms", "a finite law needs at least one atom"))?
            .x
            .len();
        if d == 0 {
            return Err(Error::InvalidDimension("atoms must have d >= 1".into()));
        }
        let mut total = 0.0;
        let mut cumulative = Vec::with_capacity(atoms.len());
        for a in &atoms {
            if a.x.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: a.x.len() });
            }
            if !(a.prob.is_finite() && a.prob >= 0.0) || a.x.iter().any(|v| !v.is_finite()) {
                return Err(invalid("atoms", "probabilities must be nonnegative and points finite"));
            }
            let ok = match (&a.labels, kind) {
                (LabelLaw::Binary { eta }, LabelKind::Binary) => (0.0..=1.0).contains(eta),
                (LabelLaw::Binary { .. }, LabelKind::Real) | (_, LabelKind::Binary) => false,
                (LabelLaw::Discrete(v), LabelKind::Real) => {
                    (v.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() <= MASS_TOL && v.iter().all(|p| p.1 >= 0.0)
                }
                (_, LabelKind::Real) => true,
            };
            if !ok {
                return Err(invalid("atoms", "label law does not match the label kind"));
            }
            total += a.prob;
            cumulative.push(total);
        }
        if (total - 1.0).abs() > MASS_TOL {
            return Err(invalid("atoms", format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self {
            d,
            atoms,
            cumulative,
            kind,
            reference: None,
        })
    }

    /// Attaches a reference hyperplane for the margin checker.
    pub fn with_reference(mut self, w: Array1<f64>, t: f64) -> Result<Self> {
        if w.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: w.len() });
        }
        self.reference = Some((w, t));
        Ok(self)
    }

    pub fn atom_list(&self) -> &[Atom] {
        &self.atoms
    }

    /// Support points as rows.
    pub fn points(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.atoms.len(), self.d));
        for (mut row, a) in out.outer_iter_mut().zip(&self.atoms) {
            row.assign(&a.x);
        }
        out
    }

    pub fn probabilities(&self) -> Array1<f64> {
        self.atoms.iter().map(|a| a.prob).collect()
    }

    fn locate(&self, x: ArrayView1<'_, f64>) -> Option<&Atom> {
        self.atoms.iter().find(|a| a.x.view() == x)
    }
}

impl Law for FiniteDist {
    fn dim(&self) -> usize {
        self.d
    }

    fn label_kind(&self) -> LabelKind {
        self.kind
    }

    fn sample(&self, n: usize, seed: u64) -> Result<(Array2<f64>, Array1<f64>)> {
        let mut rng = seeding::rng(seed);
        let mut x = Array2::zeros((n, self.d));
        let mut y = Array1::zeros(n);
        let total = *self.cumulative.last().expect("nonempty");
        for i in 0..n {
            let u = rng.random::<f64>() * total;
            let j = self.cumulative.partition_point(|&c| c <= u).min(self.atoms.len() - 1);
            x.row_mut(i).assign(&self.atoms[j].x);
            y[i] = self.atoms[j].labels.sample(&mut rng);
        }
        Ok((x, y))
    }

    fn label_law(&self, x: ArrayView1<'_, f64>) -> Result<LabelLaw> {
        self.locate(x)
            .map(|a| a.labels.clone())
            .ok_or_else(|| Error::Domain("point is outside the support of the finite law".into()))
    }

    fn support_size(&self) -> Option<usize> {
        Some(self.atoms.len())
    }

    fn atoms(&self) -> Option<Box<dyn Iterator<Item = Atom> + '_>> {
        Some(Box::new(self.atoms.iter().cloned()))
    }

    fn reference_hyperplane(&self) -> Option<(Array1<f64>, f64)> {
        self.reference.clone()
    }
}

/// The mixture `(1 - ζ) P₀ + ζ P₁`, where `P₁` puts mass `1/q` on each
/// `(x_j, y_{(σ_j + 1)/2})`. Atoms of `P₀` with zero resulting mass are
/// dropped, so `ζ = 1` yields `P₁` itself.
///
/// Fails with an atom-collision error when some `x_j` already carries
/// `P₀` mass. When `intended_n` is given, also requires `q >= ⌈2ζn⌉`.
pub fn build_mixture_lb(
    base: &FiniteDist,
    zeta: f64,
    points: &[Array1<f64>],
    sigma: &[i8],
    y0: f64,
    y1: f64,
    intended_n: Option<usize>,
) -> Result<FiniteDist> {
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(invalid("zeta", "must lie in (0, 1]"));
    }
    let q = points.len();
    if q == 0 || sigma.len() != q {
        return Err(invalid("sigma", "need one sign per point and at least one point"));
    }
    if sigma.iter().any(|&s| s != 1 && s != -1) {
        return Err(invalid("sigma", "entries must be ±1"));
    }
    if let Some(n) = intended_n {
        let need = (2.0 * zeta * n as f64).ceil() as usize;
        if q < need {
            return Err(invalid("points", format!("need q >= ceil(2 zeta n) = {need}, got {q}")));
        }
    }
    for (j, p) in points.iter().enumerate() {
        if p.len() != base.d {
            return Err(Error::DimensionMismatch { expected: base.d, got: p.len() });
        }
        if points[..j].iter().any(|o| o == p) {
            return Err(invalid("points", "points must be distinct"));
        }
        if base.atoms.iter().any(|a| a.prob > 0.0 && a.x == *p) {
            return Err(Error::AtomCollision(format!("point {j} carries base mass")));
        }
    }
    let binary = base.kind == LabelKind::Binary;
    if binary && [y0, y1].iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(invalid("y0", "binary mixtures need labels in {-1, +1}"));
    }
    let mut atoms: Vec<Atom> = base
        .atoms
        .iter()
        .filter(|a| (1.0 - zeta) * a.prob > 0.0)
        .map(|a| Atom {
            x: a.x.clone(),
            prob: (1.0 - zeta) * a.prob,
            labels: a.labels.clone(),
        })
        .collect();
    for (p, &s) in points.iter().zip(sigma) {
        let y = if s > 0 { y1 } else { y0 };
        atoms.push(Atom {
            x: p.clone(),
            prob: zeta / q as f64,
            labels: if binary {
                LabelLaw::Binary {
                    eta: if y > 0.0 { 1.0 } else { 0.0 },
                }
            } else {
                LabelLaw::Point { y }
            },
        });
    }
    let mut out = FiniteDist::new(atoms, base.kind)?;
    out.reference = base.reference.clone();
    Ok(out)
}

/// A random binary law on `atoms` points in `R^d` with Dirichlet(1) masses
/// and uniform `η`.
pub fn random_binary_finite(atoms: usize, d: usize, seed: u64) -> Result<FiniteDist> {
    let mut rng = seeding::rng(seed);
    let probs = dirichlet(atoms, &mut rng)?;
    let list = probs
        .into_iter()
        .map(|prob| Atom {
            x: (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
            prob,
            labels: LabelLaw::Binary { eta: rng.random() },
        })
        .collect();
    FiniteDist::new(list, LabelKind::Binary)
}

/// A random real-label law on `atoms` points with `values` label values per
/// point drawn uniformly from `[-beta, beta]`.
pub fn random_regression_finite(atoms: usize, d: usize, values: usize, beta: f64, seed: u64) -> Result<FiniteDist> {
    if values == 0 {
        return Err(invalid("values", "must be positive"));
    }
    let mut rng = seeding::rng(seed);
    let probs = dirichlet(atoms, &mut rng)?;
    let list = probs
        .into_iter()
        .map(|prob| {
            let x = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lp = dirichlet(values, &mut rng).expect("values > 0");
            let vals = lp.into_iter().map(|p| (rng.random_range(-beta..=beta), p)).collect();
            Atom {
                x,
                prob,
                labels: LabelLaw::Discrete(vals),
            }
        })
        .collect();
    FiniteDist::new(list, LabelKind::Real)
}

fn dirichlet<R: Rng>(n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("atoms", "must be positive"));
    }
    let g: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = g.iter().sum();
    let mut p: Vec<f64> = g.iter().map(|v| v / s).collect();
    // put the rounding remainder on the largest entry
    let rem = 1.0 - p.iter().sum::<f64>();
    let imax = (0..n).max_by(|&a, &b| p[a].total_cmp(&p[b])).expect("n > 0");
    p[imax] += rem;
    Ok(p)
}
