//! Compressive ensembles: `m` members, each an ERM fitted on an independent
//! random compression of the same sample, merged by the loss's combiner.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hypotheses::{
    erm_exact_classification_weighted, erm_regression_weighted, erm_surrogate_classification_weighted,
    ErmReport, LinearHypothesis, Solver, SurrogateConfig,
};
use crate::losses::{Combiner, LossKind, LossSpec};
use crate::projections::{sample_projection, Projection, ProjectionFamily};
use crate::riskbounds::{excess_from_predictions, test_design, RiskEstimate};
use crate::scalar::{sign, Scalar};
use crate::seeding;
use crate::synthdist::Law;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub family: ProjectionFamily,
    pub k: usize,
    pub m: usize,
    /// Solver for the zero-one loss; regression losses always use the
    /// clipped descent solver.
    pub solver: Solver,
    pub master_seed: u64,
    pub surrogate: SurrogateConfig,
    pub regression_iters: usize,
}

impl TrainConfig {
    pub fn new(family: ProjectionFamily, k: usize, m: usize, solver: Solver, master_seed: u64) -> Self {
        Self {
            family,
            k,
            m,
            solver,
            master_seed,
            surrogate: SurrogateConfig {
                exact_gap: false,
                ..SurrogateConfig::default()
            },
            regression_iters: 500,
        }
    }
}

/// Seed of member `i` under `master_seed`.
pub fn member_seed(master_seed: u64, i: usize) -> u64 {
    seeding::child_seed(master_seed, i as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member<T: Scalar> {
    pub projection: Projection<T>,
    pub hypothesis: LinearHypothesis<T>,
    pub report: Option<ErmReport<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel<T: Scalar> {
    members: Vec<Member<T>>,
    loss: LossSpec<T>,
    family: ProjectionFamily,
    k: usize,
    d: usize,
    master_seed: u64,
}

/// Fits one member per compression. Members run in parallel and the result
/// does not depend on the thread count.
pub fn train<T: Scalar>(
    x: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    loss: &LossSpec<T>,
    cfg: &TrainConfig,
) -> Result<EnsembleModel<T>> {
    train_weighted(x, y, None, loss, cfg)
}

pub fn train_weighted<T: Scalar>(
    x: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    weights: Option<ArrayView1<'_, T>>,
    loss: &LossSpec<T>,
    cfg: &TrainConfig,
) -> Result<EnsembleModel<T>> {
    let (n, d) = x.dim();
    if n == 0 {
        return Err(Error::InvalidDimension("training sample is empty".into()));
    }
    if cfg.m == 0 {
        return Err(invalid("m", "ensemble needs at least one member"));
    }
    if cfg.k == 0 {
        return Err(invalid("k", "must be positive"));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    let members = (0..cfg.m)
        .into_par_iter()
        .map(|i| -> Result<Member<T>> {
            let a = sample_projection::<T>(cfg.family, cfg.k, d, member_seed(cfg.master_seed, i))?;
            let u = a.apply(x)?;
            let report = fit_member(u.view(), y, weights, loss, cfg)?;
            Ok(Member {
                projection: a,
                hypothesis: report.hypothesis.clone(),
                report: Some(report),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleModel {
        members,
        loss: *loss,
        family: cfg.family,
        k: cfg.k,
        d,
        master_seed: cfg.master_seed,
    })
}

pub(crate) fn fit_member<T: Scalar>(
    u: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    weights: Option<ArrayView1<'_, T>>,
    loss: &LossSpec<T>,
    cfg: &TrainConfig,
) -> Result<ErmReport<T>> {
    match (loss.kind, cfg.solver) {
        (LossKind::ZeroOne, Solver::Exact) => erm_exact_classification_weighted(u, y, weights),
        (LossKind::ZeroOne, Solver::Surrogate) => erm_surrogate_classification_weighted(u, y, weights, &cfg.surrogate),
        _ => erm_regression_weighted(u, y, weights, loss, cfg.regression_iters),
    }
}

impl<T: Scalar> EnsembleModel<T> {
    /// Assembles a model from given members, which must share family, `k`
    /// and `d`.
    pub fn from_members(
        members: Vec<(Projection<T>, LinearHypothesis<T>)>,
        loss: LossSpec<T>,
        master_seed: u64,
    ) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| invalid("members", "ensemble needs at least one member"))?;
        let (family, k, d) = (first.0.family(), first.0.k(), first.0.d());
        for (a, h) in &members {
            if a.family() != family || a.k() != k || a.d() != d {
                return Err(invalid("members", "projections must share family, k and d"));
            }
            if h.k() != k {
                return Err(Error::DimensionMismatch { expected: k, got: h.k() });
            }
        }
        Ok(Self {
            members: members
                .into_iter()
                .map(|(projection, hypothesis)| Member {
                    projection,
                    hypothesis,
                    report: None,
                })
                .collect(),
            loss,
            family,
            k,
            d,
            master_seed,
        })
    }

    pub fn members(&self) -> &[Member<T>] {
        &self.members
    }

    pub fn loss(&self) -> &LossSpec<T> {
        &self.loss
    }

    pub fn m(&self) -> usize {
        self.members.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn family(&self) -> ProjectionFamily {
        self.family
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn member_seeds(&self) -> Vec<u64> {
        self.members.iter().map(|mb| mb.projection.seed()).collect()
    }

    /// Member predictions, one row per member (`m x n`).
    pub fn member_predictions(&self, x: ArrayView2<'_, T>) -> Result<Array2<T>> {
        if x.ncols() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.ncols(),
            });
        }
        let rows = self
            .members
            .par_iter()
            .map(|mb| mb.hypothesis.predict(mb.projection.apply(x)?.view()))
            .collect::<Result<Vec<_>>>()?;
        let mut out = Array2::zeros((self.m(), x.nrows()));
        for (mut dst, row) in out.outer_iter_mut().zip(rows) {
            dst.assign(&row);
        }
        Ok(out)
    }

    /// Merges member predictions column-wise under the loss's combiner.
    pub fn combine(&self, member_preds: ArrayView2<'_, T>) -> Array1<T> {
        combine(self.loss.combiner, member_preds)
    }

    pub fn predict(&self, x: ArrayView2<'_, T>) -> Result<Array1<T>> {
        Ok(self.combine(self.member_predictions(x)?.view()))
    }

    pub fn summary(&self) -> EnsembleSummary {
        EnsembleSummary {
            family: self.family,
            k: self.k,
            m: self.m(),
            d: self.d,
            loss: self.loss.kind,
            beta: self.loss.beta.as_f64(),
            master_seed: self.master_seed,
            members: self
                .members
                .iter()
                .map(|mb| MemberSummary {
                    seed: mb.projection.seed(),
                    w: mb.hypothesis.w.iter().map(|v| v.as_f64()).collect(),
                    t: mb.hypothesis.t.as_f64(),
                })
                .collect(),
        }
    }
}

/// Column-wise combination of an `m x n` prediction matrix: majority vote
/// with ties to `+1`, or the arithmetic mean.
pub fn combine<T: Scalar>(combiner: Combiner, member_preds: ArrayView2<'_, T>) -> Array1<T> {
    let m = T::of(member_preds.nrows() as f64);
    let mut sum = Array1::<T>::zeros(member_preds.ncols());
    for row in member_preds.outer_iter() {
        sum.zip_mut_with(&row, |s, &v| *s = *s + v);
    }
    match combiner {
        Combiner::Mode => sum.mapv(sign),
        Combiner::Mean => sum.mapv(|s| s / m),
    }
}

impl EnsembleModel<f64> {
    /// Excess risk of every member followed by the ensemble, all on one test
    /// design (the support itself for finite laws, else `n_test` draws).
    pub fn member_excess_risks(&self, dist: &dyn Law, n_test: usize, seed: u64) -> Result<Vec<RiskEstimate>> {
        let design = test_design(dist, n_test, seed)?;
        let preds = self.member_predictions(design.x.view())?;
        let ens = self.combine(preds.view());
        let mut out = preds
            .outer_iter()
            .map(|row| excess_from_predictions(dist, &self.loss, &design, row))
            .collect::<Result<Vec<_>>>()?;
        out.push(excess_from_predictions(dist, &self.loss, &design, ens.view())?);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub seed: u64,
    pub w: Vec<f64>,
    pub t: f64,
}

/// JSON-serialisable description of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub family: ProjectionFamily,
    pub k: usize,
    pub m: usize,
    pub d: usize,
    pub loss: LossKind,
    pub beta: f64,
    pub master_seed: u64,
    pub members: Vec<MemberSummary>,
}
