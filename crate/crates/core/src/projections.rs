//! Random linear compressions `A: R^d -> R^k`.
//!
//! Three i.i.d.-entry families are provided, each scaled so that
//! `E ||A x||^2 = ||x||^2`:
//!
//! | family              | entries                                   |
//! |---------------------|-------------------------------------------|
//! | `Gaussian`          | `N(0, 1/k)`                               |
//! | `Rademacher`        | `±1/sqrt(k)` with probability 1/2 each    |
//! | `AchlioptasSparse`  | `±sqrt(3/k)` w.p. 1/6 each, `0` w.p. 2/3  |
//!
//! Entries are drawn row-major from a single stream seeded by `seed`, and the
//! `1/sqrt(k)` scale is applied last. Consequently the first `k` rows of a
//! `K`-row map are, up to the factor `sqrt(K/k)`, the `k`-row map with the
//! same seed (nested sketches).

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use crate::seeding;

/// Sparse maps with at least this many columns are stored row-compressed.
pub const SPARSE_STORAGE_MIN_COLUMNS: usize = 10_000;

/// Default target-dimension constant for Gaussian maps, used by
/// [`jl_dimension`]: `k = ceil(C * ln(q / delta) / eps^2)`.
pub const DEFAULT_JL_CONSTANT: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionFamily {
    Gaussian,
    Rademacher,
    AchlioptasSparse,
}

impl std::str::FromStr for ProjectionFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "rademacher" => Ok(Self::Rademacher),
            "achlioptas_sparse" | "achlioptas" | "sparse" => Ok(Self::AchlioptasSparse),
            other => Err(invalid("family", format!("unknown projection family `{other}`"))),
        }
    }
}

/// The serialisable identity of a map. Matrices are never persisted; they
/// are regenerated from this descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionDescriptor {
    pub family: ProjectionFamily,
    pub k: usize,
    pub d: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
struct CsrRows<T> {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
enum Storage<T> {
    Dense(Array2<T>),
    Sparse(CsrRows<T>),
}

/// A sampled `k x d` compression matrix. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection<T: Scalar> {
    storage: Storage<T>,
    family: ProjectionFamily,
    k: usize,
    d: usize,
    seed: u64,
}

/// Draws the unscaled entry stream of a family: standard normal, `±1`, or
/// `{+sqrt 3, -sqrt 3, 0}` with probabilities `{1/6, 1/6, 2/3}`.
fn unscaled_entry<R: Rng>(family: ProjectionFamily, rng: &mut R) -> f64 {
    match family {
        ProjectionFamily::Gaussian => rng.sample(StandardNormal),
        ProjectionFamily::Rademacher => {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        }
        ProjectionFamily::AchlioptasSparse => {
            let u: f64 = rng.random();
            if u < 1.0 / 6.0 {
                3.0_f64.sqrt()
            } else if u < 2.0 / 6.0 {
                -(3.0_f64.sqrt())
            } else {
                0.0
            }
        }
    }
}

/// Samples a map of the given family. A pure function of its arguments.
pub fn sample_projection<T: Scalar>(
    family: ProjectionFamily,
    k: usize,
    d: usize,
    seed: u64,
) -> Result<Projection<T>> {
    if k == 0 || d == 0 {
        return Err(Error::InvalidDimension(format!(
            "projection needs k >= 1 and d >= 1, got k = {k}, d = {d}"
        )));
    }
    let mut rng = seeding::rng(seed);
    let scale = 1.0 / (k as f64).sqrt();
    let sparse = family == ProjectionFamily::AchlioptasSparse && d >= SPARSE_STORAGE_MIN_COLUMNS;
    let storage = if sparse {
        let mut indptr = Vec::with_capacity(k + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for _ in 0..k {
            for j in 0..d {
                let e = unscaled_entry(family, &mut rng);
                if e != 0.0 {
                    indices.push(j);
                    values.push(T::of(e * scale));
                }
            }
            indptr.push(indices.len());
        }
        Storage::Sparse(CsrRows {
            indptr,
            indices,
            values,
        })
    } else {
        let data: Vec<T> = (0..k * d)
            .map(|_| T::of(unscaled_entry(family, &mut rng) * scale))
            .collect();
        Storage::Dense(Array2::from_shape_vec((k, d), data).expect("k*d entries"))
    };
    Ok(Projection {
        storage,
        family,
        k,
        d,
        seed,
    })
}

impl<T: Scalar> Projection<T> {
    pub fn from_descriptor(desc: &ProjectionDescriptor) -> Result<Self> {
        sample_projection(desc.family, desc.k, desc.d, desc.seed)
    }

    pub fn descriptor(&self) -> ProjectionDescriptor {
        ProjectionDescriptor {
            family: self.family,
            k: self.k,
            d: self.d,
            seed: self.seed,
        }
    }

    pub fn family(&self) -> ProjectionFamily {
        self.family
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// Builds a map from an explicit matrix. Used for hand-built maps in
    /// tests and for identity-like checks; the family tag is informational.
    pub fn from_matrix(matrix: Array2<T>, family: ProjectionFamily, seed: u64) -> Result<Self> {
        let (k, d) = matrix.dim();
        if k == 0 || d == 0 {
            return Err(Error::InvalidDimension(format!("matrix is {k} x {d}")));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix", "entries must be finite"));
        }
        Ok(Self {
            storage: Storage::Dense(matrix),
            family,
            k,
            d,
            seed,
        })
    }

    /// Dense copy of the matrix (`k x d`).
    pub fn to_dense(&self) -> Array2<T> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(csr) => {
                let mut m = Array2::zeros((self.k, self.d));
                for i in 0..self.k {
                    for p in csr.indptr[i]..csr.indptr[i + 1] {
                        m[[i, csr.indices[p]]] = csr.values[p];
                    }
                }
                m
            }
        }
    }

    /// The leading `rows` rows, rescaled by `sqrt(k / rows)` so the entry
    /// variance matches a fresh `rows`-row map with the same seed.
    pub fn leading_rows(&self, rows: usize) -> Result<Self> {
        if rows == 0 || rows > self.k {
            return Err(Error::InvalidDimension(format!(
                "cannot take {rows} leading rows of a {}-row map",
                self.k
            )));
        }
        let factor = T::of((self.k as f64 / rows as f64).sqrt());
        let dense = self.to_dense();
        let sub = dense.slice(ndarray::s![..rows, ..]).mapv(|v| v * factor);
        let mut out = Self::from_matrix(sub, self.family, self.seed)?;
        out.k = rows;
        Ok(out)
    }

    /// Compresses each row of `x` (`n x d`) into `R^k`, returning `n x k`.
    pub fn apply(&self, x: ArrayView2<'_, T>) -> Result<Array2<T>> {
        if x.ncols() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.ncols(),
            });
        }
        Ok(match &self.storage {
            Storage::Dense(m) => x.dot(&m.t()),
            Storage::Sparse(csr) => {
                let mut out = Array2::zeros((x.nrows(), self.k));
                for (row, mut dst) in x.outer_iter().zip(out.outer_iter_mut()) {
                    for i in 0..self.k {
                        let mut acc = T::zero();
                        for p in csr.indptr[i]..csr.indptr[i + 1] {
                            acc = acc + csr.values[p] * row[csr.indices[p]];
                        }
                        dst[i] = acc;
                    }
                }
                out
            }
        })
    }

    /// Compresses a single point.
    pub fn apply_point(&self, x: ArrayView1<'_, T>) -> Result<Array1<T>> {
        let view = x.insert_axis(Axis(0));
        Ok(self.apply(view)?.row(0).to_owned())
    }
}

/// Target dimension `ceil(c_jl * ln(q / delta) / eps^2)`.
pub fn jl_dimension(q: usize, delta: f64, epsilon: f64, c_jl: f64) -> Result<usize> {
    if q < 2 {
        return Err(invalid("q", "need at least two points"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", "must lie in (0, 1)"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid("epsilon", "must lie in (0, 1)"));
    }
    Ok((c_jl * (q as f64 / delta).ln() / (epsilon * epsilon)).ceil() as usize)
}

/// `q` i.i.d. standard Gaussian points in `R^d`, one per row.
pub fn gaussian_cloud(q: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = seeding::rng(seed);
    Array2::from_shape_simple_fn((q, d), || rng.sample(StandardNormal))
}

/// Fraction of `trials` independent maps under which at least one pair of
/// `points` has its squared distance distorted outside
/// `[(1 - eps) D, (1 + eps) D]`. Coincident points always pass.
pub fn empirical_jl_check(
    family: ProjectionFamily,
    points: ArrayView2<'_, f64>,
    epsilon: f64,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let q = points.nrows();
    if q < 2 {
        return Err(Error::InvalidDimension(format!("need q >= 2 points, got {q}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid("epsilon", "must lie in (0, 1)"));
    }
    if trials == 0 {
        return Err(invalid("trials", "must be positive"));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(invalid("points", "entries must be finite"));
    }
    let d = points.ncols();
    let original = pairwise_sq_distances(points);

    let failures: usize = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<usize> {
            let a = sample_projection::<f64>(family, k, d, seeding::child_seed(seed, t))?;
            let projected = a.apply(points)?;
            let compressed = pairwise_sq_distances(projected.view());
            let violated = original.iter().zip(&compressed).any(|(&orig, &comp)| {
                orig > 0.0 && (comp < (1.0 - epsilon) * orig || comp > (1.0 + epsilon) * orig)
            });
            Ok(usize::from(violated))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(failures as f64 / trials as f64)
}

fn pairwise_sq_distances(points: ArrayView2<'_, f64>) -> Vec<f64> {
    let q = points.nrows();
    let mut out = Vec::with_capacity(q * (q - 1) / 2);
    for i in 0..q {
        for j in (i + 1)..q {
            let a = points.row(i);
            let b = points.row(j);
            out.push(a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum());
        }
    }
    out
}
