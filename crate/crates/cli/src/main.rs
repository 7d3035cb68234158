use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use compens::harness::{fit_rate, load_experiment, run_experiment_with_threads, RateAxis};
use compens::hypotheses::Solver;
use compens::losses::{make_loss, LossKind};
use compens::projections::{empirical_jl_check, gaussian_cloud, jl_dimension, ProjectionFamily, DEFAULT_JL_CONSTANT};
use compens::riskbounds::{estimate_compressibility, slawski_trials, PsiConfig};
use compens::synthdist::{
    build_assouad_family, check_geometric_margin, check_membership, check_moment, check_spectral_decay,
    check_tsybakov, load_distribution_spec, DistributionSpec, LabelKind, MarginWeighting, MembershipConstants,
};

#[derive(Parser)]
#[command(name = "compens", version, about = "Compressive ensemble ERM experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment sweep and write `<name>.csv` and `<name>.manifest.jsonl`.
    Run {
        config: PathBuf,
        /// Thread budget; overrides COMPENS_THREADS and the config.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Log-log rate fit of a result column against n, k or m.
    Fit {
        #[arg(long, default_value = "n")]
        x: RateAxis,
        #[arg(long, default_value = "ensemble_excess")]
        y: String,
        results: PathBuf,
    },
    /// Compressibility estimates over a list of k.
    Psi(PsiArgs),
    /// Run the margin, moment, noise and spectral checkers on a law.
    CheckDist(CheckArgs),
    /// Empirical JL failure rate on a Gaussian point cloud.
    JlCheck(JlArgs),
    /// Compressive least-squares ratio on a spectral-decay design.
    SlawskiCheck(SlawskiArgs),
}

#[derive(Args)]
struct PsiArgs {
    spec: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    k_list: Vec<usize>,
    #[arg(long, default_value = "zero_one")]
    loss: LossKind,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value = "gaussian")]
    family: ProjectionFamily,
    #[arg(long, default_value_t = 32)]
    reps: usize,
    #[arg(long, default_value_t = 20_000)]
    pop_n: usize,
    #[arg(long, default_value_t = 100_000)]
    n_test: usize,
    #[arg(long, default_value = "surrogate")]
    solver: Solver,
    #[arg(long, default_value_t = 500)]
    regression_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CheckArgs {
    spec: PathBuf,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    c_g: Option<f64>,
    #[arg(long)]
    c_m: Option<f64>,
    #[arg(long)]
    c_t: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.4,0.8")]
    xi_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "3,4,6,8,12")]
    s_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.4,0.8")]
    eps_grid: Vec<f64>,
    /// Count masses without the `|2η - 1|` weight.
    #[arg(long)]
    unweighted: bool,
    #[arg(long, default_value_t = 1_000_000)]
    mc_n: usize,
    /// Sample size for the spectral check on real-labelled laws.
    #[arg(long, default_value_t = 20_000)]
    n_spectral: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct JlArgs {
    #[arg(long, default_value_t = 50)]
    q: usize,
    #[arg(long, default_value_t = 500)]
    d: usize,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Target dimension; `ceil(8 ln(q/δ)/ε²)` when absent.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = "gaussian")]
    family: ProjectionFamily,
    #[arg(long, default_value_t = 400)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SlawskiArgs {
    #[arg(long, default_value_t = 40)]
    d: usize,
    #[arg(long, default_value_t = 40)]
    q: usize,
    #[arg(long, default_value_t = 15)]
    k: usize,
    #[arg(long, default_value_t = 5)]
    r: usize,
    #[arg(long, default_value_t = 0.5)]
    omega: f64,
    #[arg(long, default_value_t = 100)]
    sketches: usize,
    #[arg(long, default_value = "gaussian")]
    family: ProjectionFamily,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn print(v: &Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(config: PathBuf, threads: Option<usize>) -> Result<()> {
    let exp = load_experiment(&config).with_context(|| format!("loading {}", config.display()))?;
    let out = run_experiment_with_threads(&exp, threads)?;
    let failed = out.rows.iter().filter(|r| r.error.is_some()).count();
    print(&json!({
        "csv": out.csv,
        "manifest": out.manifest,
        "rows": out.rows.len(),
        "failed": failed,
    }))
}

fn psi(a: PsiArgs) -> Result<()> {
    let law = load_distribution_spec(&a.spec)?.build()?;
    let loss = make_loss::<f64>(a.loss, a.beta)?;
    let mut out = Vec::new();
    for &k in &a.k_list {
        let mut cfg = PsiConfig::new(a.family, k, a.pop_n, compens::seeding::child_seed(a.seed, k as u64));
        cfg.reps = a.reps;
        cfg.pop_n = a.pop_n;
        cfg.n_test = a.n_test;
        cfg.solver = a.solver;
        cfg.regression_iters = a.regression_iters;
        let est = estimate_compressibility(law.as_ref(), &loss, &cfg)?;
        log::info!("k = {k}: psi = {} ± {}", est.value, est.std_error);
        out.push(json!({ "k": k, "psi": est.value, "se": est.std_error }));
    }
    print(&Value::Array(out))
}

fn check_dist(a: CheckArgs) -> Result<()> {
    let spec = load_distribution_spec(&a.spec)?;
    let law = spec.build()?;
    let mut report = serde_json::Map::new();

    if law.label_kind() == LabelKind::Real {
        let (x, _) = law.sample(a.n_spectral, a.seed)?;
        report.insert("spectral".into(), serde_json::to_value(check_spectral_decay(x.view())?)?);
        return print(&Value::Object(report));
    }

    // exponents and constants the law is built to satisfy
    let (declared, consts) = match &spec {
        DistributionSpec::GaussMargin(g) => (
            Some((g.gamma, g.rho, g.alpha)),
            (1.0, (g.rho / 2.0).exp2(), 1.0),
        ),
        DistributionSpec::AssouadMinimax(s) => {
            let c = MembershipConstants::construction(s.gamma, s.rho, s.alpha);
            let params = build_assouad_family(s.n, s.gamma, s.rho, s.alpha)?;
            let m = check_membership(&params, &c);
            report.insert(
                "membership".into(),
                json!({ "geom": m.geom, "moment": m.moment, "tsybakov": m.tsybakov, "q": params.q }),
            );
            (Some((s.gamma, s.rho, s.alpha)), (c.c_g, c.c_m, c.c_t))
        }
        _ => (None, (1.0, 1.0, 1.0)),
    };
    let pick = |flag: Option<f64>, idx: usize, name: &str| -> Result<f64> {
        match (flag, declared) {
            (Some(v), _) => Ok(v),
            (None, Some(d)) => Ok([d.0, d.1, d.2][idx]),
            (None, None) => bail!("this law declares no exponents; pass --{name}"),
        }
    };
    let gamma = pick(a.gamma, 0, "gamma")?;
    let rho = pick(a.rho, 1, "rho")?;
    let alpha = pick(a.alpha, 2, "alpha")?;
    let weighting = if a.unweighted { MarginWeighting::Unweighted } else { MarginWeighting::Weighted };
    let seed = |i| compens::seeding::child_seed(a.seed, i);

    if law.reference_hyperplane().is_some() {
        let g = check_geometric_margin(law.as_ref(), &a.xi_grid, a.c_g.unwrap_or(consts.0), gamma, weighting, a.mc_n, seed(0))?;
        report.insert("geometric_margin".into(), serde_json::to_value(g)?);
    }
    let m = check_moment(law.as_ref(), &a.s_grid, a.c_m.unwrap_or(consts.1), rho, weighting, a.mc_n, seed(1))?;
    report.insert("moment".into(), serde_json::to_value(m)?);
    let t = check_tsybakov(law.as_ref(), &a.eps_grid, a.c_t.unwrap_or(consts.2), alpha, a.mc_n, seed(2))?;
    report.insert("tsybakov".into(), serde_json::to_value(t)?);
    print(&Value::Object(report))
}

fn jl_check(a: JlArgs) -> Result<()> {
    let k = match a.k {
        Some(k) => k,
        None => jl_dimension(a.q, a.delta, a.epsilon, DEFAULT_JL_CONSTANT)?,
    };
    let pts = gaussian_cloud(a.q, a.d, compens::seeding::child_seed(a.seed, 0));
    let rate = empirical_jl_check(a.family, pts.view(), a.epsilon, k, a.trials, compens::seeding::child_seed(a.seed, 1))?;
    let se = (rate * (1.0 - rate) / a.trials as f64).sqrt();
    print(&json!({ "k": k, "failure_rate": rate, "se": se, "delta": a.delta }))
}

fn slawski_check(a: SlawskiArgs) -> Result<()> {
    let ratios = slawski_trials(a.family, a.d, a.q, a.k, a.r, a.omega, a.sketches, a.seed)?;
    let within = ratios.iter().filter(|s| s.ratio <= 1.0).count();
    let max = ratios.iter().map(|s| s.ratio).fold(f64::NEG_INFINITY, f64::max);
    print(&json!({ "sketches": ratios.len(), "ratio_le_one": within, "max_ratio": max }))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run { config, threads } => run(config, threads),
        Command::Fit { x, y, results } => print(&serde_json::to_value(fit_rate(&results, x, &y)?)?),
        Command::Psi(a) => psi(a),
        Command::CheckDist(a) => check_dist(a),
        Command::JlCheck(a) => jl_check(a),
        Command::SlawskiCheck(a) => slawski_check(a),
    }
}
