//! Declarative TOML descriptions of the synthetic laws.
//!
//! The `variant` key selects the family. Example:
//!
//! ```toml
//! variant = "regression"
//! d = 20
//! omega = 0.5
//! beta = 1.0
//! w_max = 1.0
//! noise = { kind = "none" }
//! ```

use std::path::Path;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::{
    build_assouad_family, build_mixture_lb, Atom, AssouadDist, AssouadParams, FiniteDist, GaussMarginDist, LabelKind,
    LabelLaw, Law, RegressionDist, RegressionNoise,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum DistributionSpec {
    /// Explicit `(q, r, v, ε)`.
    Assouad(AssouadSpec),
    /// `(q, r, v, ε)` from [`build_assouad_family`].
    AssouadMinimax(AssouadMinimaxSpec),
    GaussMargin(GaussMarginSpec),
    Regression(RegressionSpec),
    Finite(FiniteSpec),
    Mixture(MixtureSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssouadSpec {
    pub q: usize,
    pub r: f64,
    pub v: f64,
    pub epsilon: f64,
    /// Explicit signs; drawn from `sigma_seed` when absent.
    #[serde(default)]
    pub sigma: Option<Vec<i8>>,
    #[serde(default)]
    pub sigma_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssouadMinimaxSpec {
    pub n: u64,
    pub gamma: f64,
    pub rho: f64,
    pub alpha: f64,
    #[serde(default)]
    pub sigma_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussMarginSpec {
    pub d: usize,
    pub gamma: f64,
    pub rho: f64,
    pub alpha: f64,
    /// Reference direction; `e_1` when absent.
    #[serde(default)]
    pub w: Option<Vec<f64>>,
    #[serde(default)]
    pub t: f64,
    #[serde(default)]
    pub radial_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionSpec {
    pub d: usize,
    #[serde(default = "one")]
    pub c_sp: f64,
    pub omega: f64,
    pub beta: f64,
    pub w_max: f64,
    /// Weights; when absent every coordinate is `w_norm/√d`.
    #[serde(default)]
    pub w: Option<Vec<f64>>,
    /// Norm of the default weights; `w_max` when absent.
    #[serde(default)]
    pub w_norm: Option<f64>,
    #[serde(default)]
    pub t: f64,
    #[serde(default = "no_noise")]
    pub noise: RegressionNoise,
}

fn one() -> f64 {
    1.0
}

fn no_noise() -> RegressionNoise {
    RegressionNoise::None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKindSpec {
    Binary,
    Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub x: Vec<f64>,
    pub prob: f64,
    /// `P(Y = 1)` for binary laws.
    #[serde(default)]
    pub eta: Option<f64>,
    /// Deterministic real label.
    #[serde(default)]
    pub y: Option<f64>,
    /// `(value, probability)` pairs for a discrete real label.
    #[serde(default)]
    pub values: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteSpec {
    pub labels: LabelKindSpec,
    pub atoms: Vec<AtomSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub base: FiniteSpec,
    pub zeta: f64,
    pub points: Vec<Vec<f64>>,
    pub sigma: Vec<i8>,
    pub y0: f64,
    pub y1: f64,
}

fn config_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl FiniteSpec {
    pub fn build_finite(&self) -> Result<FiniteDist> {
        let kind = match self.labels {
            LabelKindSpec::Binary => LabelKind::Binary,
            LabelKindSpec::Real => LabelKind::Real,
        };
        let atoms = self
            .atoms
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let labels = match (kind, a.eta, a.y, &a.values) {
                    (LabelKind::Binary, Some(eta), None, None) => LabelLaw::Binary { eta },
                    (LabelKind::Real, None, Some(y), None) => LabelLaw::Point { y },
                    (LabelKind::Real, None, None, Some(v)) => LabelLaw::Discrete(v.clone()),
                    _ => {
                        return Err(config_err(
                            &format!("atoms[{i}]"),
                            "binary atoms need `eta`; real atoms need exactly one of `y` or `values`",
                        ))
                    }
                };
                Ok(Atom {
                    x: Array1::from(a.x.clone()),
                    prob: a.prob,
                    labels,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        FiniteDist::new(atoms, kind)
    }
}

impl DistributionSpec {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn build(&self) -> Result<Box<dyn Law>> {
        Ok(match self {
            DistributionSpec::Assouad(s) => {
                let params = AssouadParams::new(s.q, s.r, s.v, s.epsilon)?;
                Box::new(match &s.sigma {
                    Some(sig) => AssouadDist::new(params, sig.clone())?,
                    None => AssouadDist::random_sigma(params, s.sigma_seed)?,
                })
            }
            DistributionSpec::AssouadMinimax(s) => {
                let params = build_assouad_family(s.n, s.gamma, s.rho, s.alpha)?;
                Box::new(AssouadDist::random_sigma(params, s.sigma_seed)?)
            }
            DistributionSpec::GaussMargin(s) => {
                let w = match &s.w {
                    Some(w) if w.len() != s.d => {
                        return Err(config_err("w", format!("expected {} entries, got {}", s.d, w.len())))
                    }
                    Some(w) => Array1::from(w.clone()),
                    None => {
                        let mut w = Array1::zeros(s.d);
                        if s.d > 0 {
                            w[0] = 1.0;
                        }
                        w
                    }
                };
                Box::new(GaussMarginDist::new(w, s.t, s.gamma, s.rho, s.alpha, s.radial_max)?)
            }
            DistributionSpec::Regression(s) => {
                let w = match &s.w {
                    Some(w) if w.len() != s.d => {
                        return Err(config_err("w", format!("expected {} entries, got {}", s.d, w.len())))
                    }
                    Some(w) => Array1::from(w.clone()),
                    None => {
                        let norm = s.w_norm.unwrap_or(s.w_max);
                        Array1::from_elem(s.d, norm / (s.d.max(1) as f64).sqrt())
                    }
                };
                Box::new(RegressionDist::new(s.c_sp, s.omega, w, s.t, s.beta, s.w_max, s.noise)?)
            }
            DistributionSpec::Finite(s) => Box::new(s.build_finite()?),
            DistributionSpec::Mixture(s) => {
                let base = s.base.build_finite()?;
                let pts: Vec<Array1<f64>> = s.points.iter().map(|p| Array1::from(p.clone())).collect();
                Box::new(build_mixture_lb(&base, s.zeta, &pts, &s.sigma, s.y0, s.y1, None)?)
            }
        })
    }
}

/// Reads a [`DistributionSpec`] from a TOML file.
pub fn load_distribution_spec(path: impl AsRef<Path>) -> Result<DistributionSpec> {
    let text = std::fs::read_to_string(path.as_ref())?;
    DistributionSpec::from_toml_str(&text).map_err(|e| match e {
        Error::TomlDe(inner) => config_err(&path.as_ref().display().to_string(), inner.to_string()),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_roundtrip() {
        let text = "variant = \"regression\"\nd = 4\nomega = 0.5\nbeta = 1.0\nw_max = 1.0\n";
        let spec = DistributionSpec::from_toml_str(text).unwrap();
        let law = spec.build().unwrap();
        assert_eq!(law.dim(), 4);
        let again = DistributionSpec::from_toml_str(&spec.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn gauss_margin_and_assouad() {
        let g = DistributionSpec::from_toml_str("variant = \"gauss_margin\"\nd = 3\ngamma = 2.0\nrho = 2.0\nalpha = 0.0\n")
            .unwrap();
        assert_eq!(g.build().unwrap().dim(), 3);
        let a = DistributionSpec::from_toml_str(
            "variant = \"assouad\"\nq = 4\nr = 2.0\nv = 0.5\nepsilon = 0.25\nsigma = [1, -1, 1, 1]\n",
        )
        .unwrap();
        assert_eq!(a.build().unwrap().support_size(), Some(5));
    }

    #[test]
    fn finite_and_mixture() {
        let text = r#"
variant = "mixture"
zeta = 0.5
points = [[1.0, 0.0], [0.0, 1.0]]
sigma = [1, -1]
y0 = -1.0
y1 = 1.0
[base]
labels = "binary"
atoms = [{ x = [0.0, 0.0], prob = 1.0, eta = 0.9 }]
"#;
        let law = DistributionSpec::from_toml_str(text).unwrap().build().unwrap();
        let masses: Vec<f64> = law.atoms().unwrap().map(|a| a.prob).collect();
        assert_eq!(masses, vec![0.5, 0.25, 0.25]);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = "variant = \"gauss_margin\"\nd = 3\ngamma = 2.0\nrho = 2.0\nalpha = 0.0\nbogus = 1\n";
        assert!(DistributionSpec::from_toml_str(text).is_err());
    }

    #[test]
    fn mismatched_atom_labels() {
        let text = "variant = \"finite\"\nlabels = \"real\"\natoms = [{ x = [0.0], prob = 1.0, eta = 0.5 }]\n";
        let err = DistributionSpec::from_toml_str(text).unwrap().build().unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }
}
