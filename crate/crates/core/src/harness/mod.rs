//! Declarative experiment sweeps.
//!
//! A TOML configuration names a distribution, a loss, a projection family,
//! lists of `n` and `m`, a rule for `k` and a trial count. Every
//! `(n, k, m, trial)` trains one ensemble on fresh data and records member
//! and ensemble excess risks. Results go to `<name>.csv`, with rows sorted
//! by `(n, k, m, trial)`, and `<name>.manifest.jsonl` records the config
//! hash, library version and per-cell seeds.
//!
//! Every value in the CSV except `wall_time_ms` is a pure function of the
//! configuration and does not depend on the thread budget.

mod config;
mod fit;
mod run;

pub use config::{load_experiment, sha256_hex, DistributionRef, ExperimentConfig, KRule, LoadedExperiment};
pub use fit::{fit_rate, fit_rate_rows, RateAxis, RateFit};
pub use run::{
    read_results, run_experiment, run_experiment_with_threads, trial_seed, ResultRow, RunOutput, BRACKET_DELTA,
    THREADS_ENV,
};
