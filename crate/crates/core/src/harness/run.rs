use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::LoadedExperiment;
use crate::ensemble::{train, EnsembleSummary, TrainConfig};
use crate::error::{Error, Result};
use crate::losses::{make_loss, LossSpec};
use crate::riskbounds::{ensemble_bound_bracket, estimate_compressibility, PsiConfig};
use crate::seeding;
use crate::synthdist::{labels_for_loss, Law};

/// Confidence level used for the bound bracket.
pub const BRACKET_DELTA: f64 = 0.05;

/// Environment variable overriding the thread budget.
pub const THREADS_ENV: &str = "COMPENS_THREADS";

/// One trial of one cell. Numeric fields are empty when the trial failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub trial: usize,
    pub seed: u64,
    pub member_mean_excess: Option<f64>,
    pub ensemble_excess: Option<f64>,
    pub ensemble_excess_se: Option<f64>,
    pub psi_hat: Option<f64>,
    pub bracket_total: Option<f64>,
    pub wall_time_ms: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub rows: Vec<ResultRow>,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    record: &'static str,
    name: &'a str,
    config_hash: String,
    library_version: &'static str,
    master_seed: u64,
    bracket_delta: f64,
    threads: usize,
    rows: usize,
    csv: String,
}

#[derive(Serialize)]
struct CellRecord {
    record: &'static str,
    n: usize,
    k: usize,
    m: usize,
    trial_seeds: Vec<u64>,
    psi_hat: Option<f64>,
    failures: usize,
    /// Model of the first successful trial.
    model: Option<EnsembleSummary>,
}

/// Seed of trial `trial` at sample size `n`. Shared by every `m`, so cells
/// that differ only in `m` see the same data.
pub fn trial_seed(master_seed: u64, n: usize, trial: usize) -> u64 {
    seeding::derive_seed(master_seed, &[n as u64, trial as u64])
}

fn resolve_threads(explicit: Option<usize>, configured: Option<usize>) -> Result<Option<usize>> {
    if let Some(t) = explicit {
        return Ok(Some(t));
    }
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let t = v.trim().parse::<usize>().map_err(|_| Error::Config {
            path: THREADS_ENV.into(),
            message: format!("`{v}` is not a thread count"),
        })?;
        return Ok(Some(t));
    }
    Ok(configured)
}

struct TrialOutcome {
    member_mean: f64,
    ensemble: f64,
    ensemble_se: f64,
    summary: EnsembleSummary,
}

fn run_trial(
    dist: &dyn Law,
    loss: &LossSpec<f64>,
    exp: &LoadedExperiment,
    n: usize,
    k: usize,
    m: usize,
    seed: u64,
) -> Result<TrialOutcome> {
    let cfg = &exp.config;
    let (x, y) = dist.sample(n, seeding::child_seed(seed, 0))?;
    let y = labels_for_loss(dist.label_kind(), loss, &y)?;
    let tc = TrainConfig {
        family: cfg.family,
        k,
        m,
        solver: cfg.solver,
        master_seed: seeding::child_seed(seed, 1),
        surrogate: cfg.surrogate,
        regression_iters: cfg.regression_iters,
    };
    let model = train(x.view(), y.view(), loss, &tc)?;
    let risks = model.member_excess_risks(dist, cfg.n_test, seeding::child_seed(seed, 2))?;
    let (ens, members) = risks.split_last().expect("at least one member");
    Ok(TrialOutcome {
        member_mean: members.iter().map(|r| r.value).sum::<f64>() / members.len() as f64,
        ensemble: ens.value,
        ensemble_se: ens.std_error,
        summary: model.summary(),
    })
}

/// Runs every `(n, m, trial)` of the sweep and writes `<name>.csv` and
/// `<name>.manifest.jsonl` to the output directory.
pub fn run_experiment(exp: &LoadedExperiment) -> Result<RunOutput> {
    run_experiment_with_threads(exp, None)
}

/// As [`run_experiment`], with an explicit thread budget taking precedence
/// over the environment and the configuration.
pub fn run_experiment_with_threads(exp: &LoadedExperiment, threads: Option<usize>) -> Result<RunOutput> {
    let budget = resolve_threads(threads, exp.config.threads)?;
    match budget {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::Config {
                    path: "threads".into(),
                    message: e.to_string(),
                })?;
            pool.install(|| execute(exp, t.max(1)))
        }
        None => execute(exp, rayon::current_num_threads()),
    }
}

fn execute(exp: &LoadedExperiment, threads: usize) -> Result<RunOutput> {
    let cfg = &exp.config;
    let dist = exp.distribution.build()?;
    let loss = make_loss::<f64>(cfg.loss, cfg.beta)?;

    let mut ns = cfg.n.clone();
    ns.sort_unstable();
    ns.dedup();
    let mut ms = cfg.m.clone();
    ms.sort_unstable();
    ms.dedup();
    let mut cells: Vec<(usize, usize, usize)> = Vec::new();
    for &n in &ns {
        let k = cfg.k_rule.k_for(n)?;
        for &m in &ms {
            cells.push((n, k, m));
        }
    }
    cells.sort_unstable();

    let mut psi: BTreeMap<usize, Option<f64>> = BTreeMap::new();
    if cfg.psi_reps > 0 {
        let mut smallest_n: BTreeMap<usize, usize> = BTreeMap::new();
        for &(n, k, _) in &cells {
            smallest_n.entry(k).or_insert(n);
        }
        for (&k, &n) in &smallest_n {
            let mut pc = PsiConfig::new(cfg.family, k, n, seeding::derive_seed(cfg.master_seed, &[u64::MAX, k as u64]));
            pc.reps = cfg.psi_reps;
            pc.pop_n = cfg.psi_pop_factor.max(1) * n;
            pc.n_test = cfg.n_test;
            pc.solver = cfg.solver;
            pc.surrogate = cfg.surrogate;
            pc.regression_iters = cfg.regression_iters;
            let est = estimate_compressibility(dist.as_ref(), &loss, &pc);
            if let Err(e) = &est {
                log::warn!("psi estimate for k = {k} failed: {e}");
            }
            psi.insert(k, est.ok().map(|e| e.value));
        }
    }

    let tasks: Vec<(usize, usize, usize, usize)> = cells
        .iter()
        .flat_map(|&(n, k, m)| (0..cfg.trials).map(move |t| (n, k, m, t)))
        .collect();
    let outcomes: Vec<(ResultRow, Option<EnsembleSummary>)> = tasks
        .par_iter()
        .map(|&(n, k, m, trial)| {
            let seed = trial_seed(cfg.master_seed, n, trial);
            let start = Instant::now();
            let out = run_trial(dist.as_ref(), &loss, exp, n, k, m, seed);
            let wall = start.elapsed().as_millis() as u64;
            let psi_hat = psi.get(&k).copied().flatten();
            let bracket = ensemble_bound_bracket(n as f64, k, m, BRACKET_DELTA, cfg.bracket_alpha, psi_hat.unwrap_or(0.0))
                .ok()
                .map(|b| b.total);
            match out {
                Ok(o) => (
                    ResultRow {
                        n,
                        k,
                        m,
                        trial,
                        seed,
                        member_mean_excess: Some(o.member_mean),
                        ensemble_excess: Some(o.ensemble),
                        ensemble_excess_se: Some(o.ensemble_se),
                        psi_hat,
                        bracket_total: bracket,
                        wall_time_ms: wall,
                        error: None,
                    },
                    Some(o.summary),
                ),
                Err(e) => {
                    log::warn!("cell n={n} k={k} m={m} trial={trial} failed: {e}");
                    (
                        ResultRow {
                            n,
                            k,
                            m,
                            trial,
                            seed,
                            member_mean_excess: None,
                            ensemble_excess: None,
                            ensemble_excess_se: None,
                            psi_hat,
                            bracket_total: bracket,
                            wall_time_ms: wall,
                            error: Some(e.to_string()),
                        },
                        None,
                    )
                }
            }
        })
        .collect();

    let dir = exp.output_dir();
    std::fs::create_dir_all(&dir)?;
    let csv_path = dir.join(format!("{}.csv", cfg.name));
    let manifest_path = dir.join(format!("{}.manifest.jsonl", cfg.name));

    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&csv_path)?;
    for (row, _) in &outcomes {
        w.serialize(row)?;
    }
    w.flush()?;

    let mut mf = BufWriter::new(File::create(&manifest_path)?);
    let run = RunRecord {
        record: "run",
        name: &cfg.name,
        config_hash: exp.config_hash(),
        library_version: env!("CARGO_PKG_VERSION"),
        master_seed: cfg.master_seed,
        bracket_delta: BRACKET_DELTA,
        threads,
        rows: outcomes.len(),
        csv: csv_path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
    };
    writeln!(mf, "{}", serde_json::to_string(&run)?)?;
    for (ci, &(n, k, m)) in cells.iter().enumerate() {
        let slice = &outcomes[ci * cfg.trials..(ci + 1) * cfg.trials];
        let rec = CellRecord {
            record: "cell",
            n,
            k,
            m,
            trial_seeds: slice.iter().map(|(r, _)| r.seed).collect(),
            psi_hat: psi.get(&k).copied().flatten(),
            failures: slice.iter().filter(|(r, _)| r.error.is_some()).count(),
            model: slice.iter().find_map(|(_, s)| s.clone()),
        };
        writeln!(mf, "{}", serde_json::to_string(&rec)?)?;
    }
    mf.flush()?;

    Ok(RunOutput {
        csv: csv_path,
        manifest: manifest_path,
        rows: outcomes.into_iter().map(|(r, _)| r).collect(),
    })
}

/// Reads the rows of a results file.
pub fn read_results(path: impl AsRef<std::path::Path>) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
