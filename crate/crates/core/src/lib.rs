//! Compressive ensemble empirical risk minimisation.
//!
//! A sample in `R^d` is compressed by `m` independent random projections to
//! `R^k`. On each compressed copy a low-dimensional linear ERM is fitted,
//! and the `m` members are merged by majority vote (zero-one loss) or by
//! averaging (squared and kl losses).
//!
//! Modules:
//! * [`projections`]: random compression maps and distortion checks.
//! * [`losses`]: the zero-one, squared and kl losses with their constants.
//! * [`hypotheses`]: sign-linear and clipped-linear classes and their ERM
//!   solvers.
//! * [`ensemble`]: training and prediction of compressive ensembles.
//! * [`synthdist`]: synthetic laws with analytic Bayes information, and
//!   checkers for the distributional conditions.
//! * [`riskbounds`]: excess-risk and compressibility estimators, bound
//!   brackets and related closed forms.
//! * [`harness`]: declarative experiment sweeps and rate fits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod harness;
pub mod hypotheses;
pub mod losses;
pub mod projections;
pub mod riskbounds;
pub mod scalar;
pub mod seeding;
pub mod stats;
pub mod synthdist;

pub use error::{Error, Result};

/// Double-precision compression map.
pub type ProjectionMap = projections::Projection<f64>;
/// Double-precision ensemble.
pub type Ensemble = ensemble::EnsembleModel<f64>;
/// Double-precision hypothesis.
pub type Hypothesis = hypotheses::LinearHypothesis<f64>;
/// Double-precision loss.
pub type Loss = losses::LossSpec<f64>;
