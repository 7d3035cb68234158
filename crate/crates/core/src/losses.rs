//! The three example losses and their certified constants.
//!
//! | kind       | labels        | predictions | `B`        | `Λ_Lip` | `H`                | `Λ_qc` | combiner |
//! |------------|---------------|-------------|------------|---------|--------------------|--------|----------|
//! | `zero_one` | `{-1, +1}`    | `{-1, +1}`  | `1`        | `1/2`   | `0`                | `2`    | mode     |
//! | `squared`  | `[-β, β]`     | `[-β, β]`   | `4β²`      | `4β`    | `2`                | `1`    | mean     |
//! | `kl`       | `{0, 1}`      | `[-β, β]`   | `β + ln 2` | `1`     | `e^β / (1+e^β)²`   | `1`    | mean     |
//!
//! The kl loss acts on a logit `v` through `π(v) = e^v / (1 + e^v)` and is
//! evaluated as `ln(1 + exp(-(2y - 1) v))`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    ZeroOne,
    Squared,
    Kl,
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero_one" => Ok(Self::ZeroOne),
            "squared" => Ok(Self::Squared),
            "kl" => Ok(Self::Kl),
            other => Err(invalid("kind", format!("unknown loss `{other}`"))),
        }
    }
}

/// How member predictions are merged into an ensemble prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    /// Majority vote, ties to `+1`.
    Mode,
    /// Arithmetic mean.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec<T: Scalar> {
    pub kind: LossKind,
    /// Range bound. Stored as `1` for `zero_one`, where it is unused.
    pub beta: T,
    pub b: T,
    pub lambda_lip: T,
    pub h: T,
    pub lambda_qc: T,
    pub combiner: Combiner,
}

/// Builds a loss with its constants. `beta` is ignored for `zero_one`.
pub fn make_loss<T: Scalar>(kind: LossKind, beta: T) -> Result<LossSpec<T>> {
    let one = T::one();
    let two = T::of(2.0);
    match kind {
        LossKind::ZeroOne => Ok(LossSpec {
            kind,
            beta: one,
            b: one,
            lambda_lip: T::of(0.5),
            h: T::zero(),
            lambda_qc: two,
            combiner: Combiner::Mode,
        }),
        LossKind::Squared | LossKind::Kl => {
            if !(beta > T::zero() && beta.is_finite()) {
                return Err(invalid("beta", format!("must be positive and finite, got {beta}")));
            }
            Ok(if kind == LossKind::Squared {
                LossSpec {
                    kind,
                    beta,
                    b: T::of(4.0) * beta * beta,
                    lambda_lip: T::of(4.0) * beta,
                    h: two,
                    lambda_qc: one,
                    combiner: Combiner::Mean,
                }
            } else {
                let e = beta.exp();
                LossSpec {
                    kind,
                    beta,
                    b: beta + two.ln(),
                    lambda_lip: one,
                    h: e / ((one + e) * (one + e)),
                    lambda_qc: one,
                    combiner: Combiner::Mean,
                }
            })
        }
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
pub fn softplus<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Logistic function `e^z / (1 + e^z)`.
#[inline]
pub fn logistic<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> LossSpec<T> {
    /// `4 Λ_Lip² / H`, defined only for strongly mid-point convex losses.
    pub fn bernstein_constant(&self) -> Result<T> {
        if self.h <= T::zero() {
            return Err(Error::Undefined(format!(
                "Bernstein constant needs H > 0; {:?} has H = 0",
                self.kind
            )));
        }
        Ok(T::of(4.0) * self.lambda_lip * self.lambda_lip / self.h)
    }

    /// Checks that `v` is an admissible prediction.
    pub fn check_prediction(&self, v: T) -> Result<()> {
        let ok = match self.kind {
            LossKind::ZeroOne => v == T::one() || v == -T::one(),
            _ => v.is_finite() && v.abs() <= self.beta,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("prediction {v} not admissible for {:?}", self.kind)))
        }
    }

    /// Checks that `y` is an admissible label.
    pub fn check_label(&self, y: T) -> Result<()> {
        let ok = match self.kind {
            LossKind::ZeroOne => y == T::one() || y == -T::one(),
            LossKind::Squared => y.is_finite() && y.abs() <= self.beta,
            LossKind::Kl => y == T::zero() || y == T::one(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("label {y} not admissible for {:?}", self.kind)))
        }
    }

    /// Loss value with domain checks.
    pub fn eval(&self, v: T, y: T) -> Result<T> {
        self.check_prediction(v)?;
        self.check_label(y)?;
        Ok(self.eval_unchecked(v, y))
    }

    /// Loss value for inputs already known to be in the domain.
    #[inline]
    pub fn eval_unchecked(&self, v: T, y: T) -> T {
        match self.kind {
            LossKind::ZeroOne => {
                if v == y {
                    T::zero()
                } else {
                    T::one()
                }
            }
            LossKind::Squared => (v - y) * (v - y),
            LossKind::Kl => softplus(-(T::of(2.0) * y - T::one()) * v),
        }
    }

    /// Expected loss `E[L(v, Y)]` for a binary label with `P(Y = 1) = eta`.
    /// The negative class is `-1` for `zero_one` and `0` for `kl`; for
    /// `squared` the label is `±β`.
    pub fn expected_binary(&self, v: T, eta: T) -> T {
        let one = T::one();
        match self.kind {
            LossKind::ZeroOne => {
                if v > T::zero() {
                    one - eta
                } else {
                    eta
                }
            }
            LossKind::Squared => {
                eta * (v - self.beta) * (v - self.beta) + (one - eta) * (v + self.beta) * (v + self.beta)
            }
            LossKind::Kl => eta * softplus(-v) + (one - eta) * softplus(v),
        }
    }

    /// Pointwise minimiser of [`expected_binary`](Self::expected_binary).
    pub fn bayes_action_binary(&self, eta: T) -> T {
        let one = T::one();
        match self.kind {
            LossKind::ZeroOne => crate::scalar::sign(T::of(2.0) * eta - one),
            LossKind::Squared => (T::of(2.0) * eta - one) * self.beta,
            LossKind::Kl => {
                if eta <= T::zero() {
                    -self.beta
                } else if eta >= one {
                    self.beta
                } else {
                    crate::scalar::clip((eta / (one - eta)).ln(), self.beta)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn constants_table() {
        let z = make_loss::<f64>(LossKind::ZeroOne, 7.0).unwrap();
        assert_eq!((z.b, z.lambda_lip, z.h, z.lambda_qc), (1.0, 0.5, 0.0, 2.0));
        assert_eq!(z.combiner, Combiner::Mode);
        let s = make_loss::<f64>(LossKind::Squared, 1.0).unwrap();
        assert_eq!((s.b, s.lambda_lip, s.h, s.lambda_qc), (4.0, 4.0, 2.0, 1.0));
        let k = make_loss::<f64>(LossKind::Kl, 1.0).unwrap();
        assert_eq!(k.b, 1.0 + 2f64.ln());
        assert_eq!(k.h, 1f64.exp() / (1.0 + 1f64.exp()).powi(2));
    }

    #[test]
    fn rejects_bad_beta() {
        assert!(make_loss::<f64>(LossKind::Squared, 0.0).is_err());
        assert!(make_loss::<f64>(LossKind::Kl, -1.0).is_err());
        assert!(make_loss::<f64>(LossKind::Kl, f64::NAN).is_err());
    }

    #[test]
    fn eval_examples() {
        let z = make_loss::<f64>(LossKind::ZeroOne, 1.0).unwrap();
        assert_eq!(z.eval(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(z.eval(-1.0, 1.0).unwrap(), 1.0);
        let s = make_loss::<f64>(LossKind::Squared, 3.0).unwrap();
        assert_eq!(s.eval(-3.0, 3.0).unwrap(), s.b);
        let k = make_loss::<f64>(LossKind::Kl, 1.0).unwrap();
        assert_eq!(k.eval(0.0, 1.0).unwrap(), 2f64.ln());
    }

    #[test]
    fn domain_errors() {
        let z = make_loss::<f64>(LossKind::ZeroOne, 1.0).unwrap();
        assert!(matches!(z.eval(0.3, 1.0), Err(Error::Domain(_))));
        let s = make_loss::<f64>(LossKind::Squared, 1.0).unwrap();
        assert!(s.eval(1.5, 0.0).is_err());
        let k = make_loss::<f64>(LossKind::Kl, 1.0).unwrap();
        assert!(k.eval(0.0, -1.0).is_err());
    }

    #[test]
    fn bernstein_constants() {
        let s1 = make_loss::<f64>(LossKind::Squared, 1.0).unwrap();
        assert_eq!(s1.bernstein_constant().unwrap(), 32.0);
        let s2 = make_loss::<f64>(LossKind::Squared, 2.0).unwrap();
        assert_eq!(s2.bernstein_constant().unwrap(), 128.0);
        let k = make_loss::<f64>(LossKind::Kl, 1.0).unwrap();
        let e = 1f64.exp();
        assert_relative_eq!(k.bernstein_constant().unwrap(), 4.0 * (1.0 + e).powi(2) / e, max_relative = 1e-15);
        let z = make_loss::<f64>(LossKind::ZeroOne, 1.0).unwrap();
        assert!(matches!(z.bernstein_constant(), Err(Error::Undefined(_))));
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0f64), 1000.0);
        assert_eq!(softplus(-1000.0f64), 0.0);
        assert_relative_eq!(softplus(0.0f64), 2f64.ln());
    }

    #[test]
    fn f32_constants_match() {
        let k = make_loss::<f32>(LossKind::Kl, 1.0).unwrap();
        assert_relative_eq!(k.b, 1.0 + 2f32.ln());
    }

    #[test]
    fn bayes_action_minimises_expected_loss() {
        for kind in [LossKind::ZeroOne, LossKind::Squared, LossKind::Kl] {
            let l = make_loss::<f64>(kind, 1.5).unwrap();
            for i in 0..=20 {
                let eta = i as f64 / 20.0;
                let best = l.expected_binary(l.bayes_action_binary(eta), eta);
                for j in 0..=60 {
                    let v = if kind == LossKind::ZeroOne {
                        if j % 2 == 0 { 1.0 } else { -1.0 }
                    } else {
                        -1.5 + 3.0 * j as f64 / 60.0
                    };
                    assert!(best <= l.expected_binary(v, eta) + 1e-12, "{kind:?} eta={eta} v={v}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn bounded(v in -2.0f64..2.0, y in -2.0f64..2.0, bit in any::<bool>()) {
            let s = make_loss::<f64>(LossKind::Squared, 2.0).unwrap();
            let val = s.eval(v, y).unwrap();
            prop_assert!((0.0..=s.b).contains(&val));
            let k = make_loss::<f64>(LossKind::Kl, 2.0).unwrap();
            let val = k.eval(v, if bit { 1.0 } else { 0.0 }).unwrap();
            prop_assert!((0.0..=k.b).contains(&val));
        }

        #[test]
        fn lipschitz(v0 in -1.0f64..1.0, v1 in -1.0f64..1.0, y in -1.0f64..1.0, bit in any::<bool>()) {
            let s = make_loss::<f64>(LossKind::Squared, 1.0).unwrap();
            prop_assert!((s.eval(v0, y).unwrap() - s.eval(v1, y).unwrap()).abs() <= s.lambda_lip * (v0 - v1).abs() + 1e-12);
            let k = make_loss::<f64>(LossKind::Kl, 1.0).unwrap();
            let yb = if bit { 1.0 } else { 0.0 };
            prop_assert!((k.eval(v0, yb).unwrap() - k.eval(v1, yb).unwrap()).abs() <= k.lambda_lip * (v0 - v1).abs() + 1e-12);
        }

        #[test]
        fn strong_midpoint_convexity(v0 in -1.0f64..1.0, v1 in -1.0f64..1.0, y in -1.0f64..1.0, bit in any::<bool>()) {
            let s = make_loss::<f64>(LossKind::Squared, 1.0).unwrap();
            let mid = s.eval((v0 + v1) / 2.0, y).unwrap();
            prop_assert!(mid <= (s.eval(v0, y).unwrap() + s.eval(v1, y).unwrap()) / 2.0 - s.h / 8.0 * (v0 - v1).powi(2) + 1e-12);
            let k = make_loss::<f64>(LossKind::Kl, 1.0).unwrap();
            let yb = if bit { 1.0 } else { 0.0 };
            let mid = k.eval((v0 + v1) / 2.0, yb).unwrap();
            prop_assert!(mid <= (k.eval(v0, yb).unwrap() + k.eval(v1, yb).unwrap()) / 2.0 - k.h / 8.0 * (v0 - v1).powi(2) + 1e-12);
        }
    }
}
