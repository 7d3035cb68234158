use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hypotheses::{Solver, SurrogateConfig};
use crate::losses::LossKind;
use crate::projections::ProjectionFamily;
use crate::riskbounds::{optimal_k_classification, optimal_k_regression};
use crate::synthdist::{load_distribution_spec, DistributionSpec};

/// How `k` is chosen for a cell of sample size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum KRule {
    Fixed { k: usize },
    /// `⌈(n/log₊n)^{2(γ+ρ)/(2(γ+ρ)+γρ(2-α))}⌉`.
    Classification { gamma: f64, rho: f64, alpha: f64 },
    /// `⌈log₊n⌉`.
    Regression,
}

impl KRule {
    pub fn k_for(&self, n: usize) -> Result<usize> {
        match *self {
            KRule::Fixed { k } => Ok(k),
            KRule::Classification { gamma, rho, alpha } => optimal_k_classification(n as f64, gamma, rho, alpha),
            KRule::Regression => optimal_k_regression(n as f64),
        }
    }
}

/// Distribution given inline or as a path to a spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistributionRef {
    File(PathBuf),
    Inline(DistributionSpec),
}

fn default_beta() -> f64 {
    1.0
}

fn default_n_test() -> usize {
    100_000
}

fn default_solver() -> Solver {
    Solver::Surrogate
}

fn default_iters() -> usize {
    500
}

fn default_output() -> PathBuf {
    PathBuf::from(".")
}

fn default_surrogate() -> SurrogateConfig {
    SurrogateConfig {
        exact_gap: false,
        ..SurrogateConfig::default()
    }
}

fn default_psi_pop_factor() -> usize {
    50
}

fn default_psi_reps() -> usize {
    0
}

/// A declarative sweep over `n` and `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Stem of the output files.
    pub name: String,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub master_seed: u64,
    pub trials: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    pub loss: LossKind,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub family: ProjectionFamily,
    #[serde(default = "default_solver")]
    pub solver: Solver,
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub k_rule: KRule,
    /// Noise exponent used in the bound bracket.
    #[serde(default)]
    pub bracket_alpha: f64,
    /// Projection draws for `ψ̂(k)`; zero disables the estimate.
    #[serde(default = "default_psi_reps")]
    pub psi_reps: usize,
    /// `ψ̂(k)` is fitted on `psi_pop_factor · n` points for the smallest `n`
    /// using that `k`.
    #[serde(default = "default_psi_pop_factor")]
    pub psi_pop_factor: usize,
    #[serde(default = "default_iters")]
    pub regression_iters: usize,
    #[serde(default = "default_surrogate")]
    pub surrogate: SurrogateConfig,
    /// Thread budget; the `COMPENS_THREADS` variable takes precedence.
    #[serde(default)]
    pub threads: Option<usize>,
    pub distribution: DistributionRef,
}

fn cfg_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| cfg_err("<config>", e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Checks the sweep and the consistency of `k_rule` with the
    /// distribution's exponents.
    pub fn validate(&self, dist: &DistributionSpec) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(cfg_err("name", "must be a nonempty file stem"));
        }
        if self.trials == 0 {
            return Err(cfg_err("trials", "must be at least 1"));
        }
        if self.n_test == 0 {
            return Err(cfg_err("n_test", "must be at least 1"));
        }
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(cfg_err("n", "must be a nonempty list of positive sizes"));
        }
        if self.m.is_empty() || self.m.contains(&0) {
            return Err(cfg_err("m", "must be a nonempty list of positive sizes"));
        }
        if !(self.beta > 0.0) {
            return Err(cfg_err("beta", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.bracket_alpha) {
            return Err(cfg_err("bracket_alpha", "must lie in [0, 1]"));
        }
        if let KRule::Fixed { k: 0 } = self.k_rule {
            return Err(cfg_err("k_rule.k", "must be positive"));
        }
        if let KRule::Classification { gamma, rho, alpha } = self.k_rule {
            let declared = match dist {
                DistributionSpec::GaussMargin(g) => Some((g.gamma, g.rho, g.alpha)),
                DistributionSpec::AssouadMinimax(a) => Some((a.gamma, a.rho, a.alpha)),
                _ => None,
            };
            if let Some((g, r, a)) = declared {
                for (field, want, got) in [("gamma", g, gamma), ("rho", r, rho), ("alpha", a, alpha)] {
                    if want != got {
                        return Err(cfg_err(
                            &format!("k_rule.{field}"),
                            format!("{got} disagrees with the distribution's {want}"),
                        ));
                    }
                }
            }
        }
        for (i, &n) in self.n.iter().enumerate() {
            self.k_rule
                .k_for(n)
                .map_err(|e| cfg_err(&format!("n[{i}]"), e.to_string()))?;
        }
        Ok(())
    }
}

/// A parsed configuration with its source text and resolved distribution.
#[derive(Debug, Clone)]
pub struct LoadedExperiment {
    pub config: ExperimentConfig,
    pub distribution: DistributionSpec,
    /// Text whose SHA-256 is recorded in the manifest.
    pub source: String,
    /// Directory against which relative paths resolve.
    pub base_dir: PathBuf,
}

impl LoadedExperiment {
    /// Resolves and validates an in-memory configuration.
    pub fn from_config(config: ExperimentConfig, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let source = config.to_toml_string()?;
        Self::build(config, source, base_dir.into())
    }

    fn build(config: ExperimentConfig, source: String, base_dir: PathBuf) -> Result<Self> {
        let distribution = match &config.distribution {
            DistributionRef::Inline(spec) => spec.clone(),
            DistributionRef::File(p) => {
                let full = if p.is_absolute() { p.clone() } else { base_dir.join(p) };
                load_distribution_spec(&full).map_err(|e| cfg_err("distribution", e.to_string()))?
            }
        };
        config.validate(&distribution)?;
        Ok(Self {
            config,
            distribution,
            source,
            base_dir,
        })
    }

    pub fn config_hash(&self) -> String {
        sha256_hex(self.source.as_bytes())
    }

    /// `output_dir` resolved against the base directory.
    pub fn output_dir(&self) -> PathBuf {
        if self.config.output_dir.is_absolute() {
            self.config.output_dir.clone()
        } else {
            self.base_dir.join(&self.config.output_dir)
        }
    }
}

/// Reads, resolves and validates a TOML experiment file.
pub fn load_experiment(path: impl AsRef<Path>) -> Result<LoadedExperiment> {
    let path = path.as_ref();
    let source = std::fs::read_to_string(path)?;
    let config = ExperimentConfig::from_toml_str(&source).map_err(|e| match e {
        Error::Config { message, .. } => cfg_err(&path.display().to_string(), message),
        other => other,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    LoadedExperiment::build(config, source, base)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
