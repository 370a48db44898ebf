use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{field} must be {requirement}, got {value}")]
    OutOfRange {
        field: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("basic reproduction number must exceed 1 for the limit process, got {0}")]
    NotSupercritical(f64),
}

/// Constants of the SIR epidemic with demography and importation.
///
/// Rates are per year. The infection rate is `lambda = r0 * gamma` and the
/// fraction of births that are infective is `kappa / n`, so the importation
/// rate of infectives is exactly `mu * kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams<T> {
    /// Target (mean) population size; need not be an integer.
    pub n: T,
    /// Per-capita death rate, equal to the per-capita birth rate at size `n`.
    pub mu: T,
    /// Basic reproduction number.
    pub r0: T,
    /// Recovery rate of an infective.
    pub gamma: T,
    /// Importation intensity scale.
    pub kappa: T,
}

impl<T: Scalar> ModelParams<T> {
    /// Validated constructor. `r0 <= 1` is accepted (see [`Self::is_subcritical`]);
    /// the limit-process types reject it separately.
    pub fn new(n: T, mu: T, r0: T, gamma: T, kappa: T) -> Result<Self, ParamError> {
        let p = Self {
            n,
            mu,
            r0,
            gamma,
            kappa,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let check = |ok: bool, field, requirement, value: T| {
            if ok {
                Ok(())
            } else {
                Err(ParamError::OutOfRange {
                    field,
                    requirement,
                    value: value.as_f64(),
                })
            }
        };
        let finite_pos = |x: T| x.is_finite() && x > T::zero();
        check(finite_pos(self.n), "n", "finite and > 0", self.n)?;
        check(finite_pos(self.mu), "mu", "finite and > 0", self.mu)?;
        check(finite_pos(self.gamma), "gamma", "finite and > 0", self.gamma)?;
        check(
            self.r0.is_finite() && self.r0 >= T::zero(),
            "r0",
            "finite and >= 0",
            self.r0,
        )?;
        check(
            self.kappa.is_finite() && self.kappa >= T::zero(),
            "kappa",
            "finite and >= 0",
            self.kappa,
        )?;
        check(self.kappa <= self.n, "kappa", "<= n", self.kappa)?;
        Ok(())
    }

    /// Raw CTMC runs are allowed with `r0 <= 1`, but no limit process exists.
    pub fn is_subcritical(&self) -> bool {
        self.r0 <= T::one()
    }

    pub fn require_supercritical(&self) -> Result<(), ParamError> {
        if self.is_subcritical() {
            Err(ParamError::NotSupercritical(self.r0.as_f64()))
        } else {
            Ok(())
        }
    }

    /// Infection-rate parameter `r0 * gamma`.
    pub fn lambda(&self) -> T {
        self.r0 * self.gamma
    }

    /// Fraction of births that are infective.
    pub fn kappa_n(&self) -> T {
        self.kappa / self.n
    }

    /// Birth rate of infectives, `mu * kappa`.
    pub fn importation_rate(&self) -> T {
        self.mu * self.kappa
    }

    /// Critical susceptible fraction `1 / r0`.
    pub fn critical_level(&self) -> T {
        self.r0.recip()
    }

    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams {
            n: U::lit(self.n.as_f64()),
            mu: U::lit(self.mu.as_f64()),
            r0: U::lit(self.r0.as_f64()),
            gamma: U::lit(self.gamma.as_f64()),
            kappa: U::lit(self.kappa.as_f64()),
        }
    }
}
