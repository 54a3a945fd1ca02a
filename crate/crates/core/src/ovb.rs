//! Omitted-variable-bias algebra in partial-R² form.
//!
//! Adding one covariate `Z` to a regression of `Y` on `D` and `X` moves the
//! coefficient of `D` by at most `BF · se_r · √df` and rescales its standard
//! error by `SEF · √(df / (df - 1))`, where
//!
//! ```text
//! BF  = √( R²_y · R²_d / (1 - R²_d) )
//! SEF = √( (1 - R²_y) / (1 - R²_d) )
//! ```
//!
//! with `R²_y` the partial R² of `Z` with `Y` given `D, X` and `R²_d` the
//! partial R² of `Z` with `D` given `X`. These identities are exact for OLS.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Summary of the observed (restricted) regression for the coefficient of
/// interest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RestrictedFit {
    estimate: f64,
    std_error: f64,
    df: u64,
    null_value: f64,
}

impl RestrictedFit {
    pub fn new(estimate: f64, std_error: f64, df: u64, null_value: f64) -> Result<Self> {
        if !estimate.is_finite() || !null_value.is_finite() {
            return Err(Error::domain("estimate and null value must be finite"));
        }
        if !(std_error > 0.0 && std_error.is_finite()) {
            return Err(Error::domain(format!(
                "standard error must be positive and finite, got {std_error}"
            )));
        }
        if df < 2 {
            return Err(Error::domain(format!(
                "need at least 2 residual degrees of freedom, got {df}"
            )));
        }
        Ok(Self {
            estimate,
            std_error,
            df,
            null_value,
        })
    }

    /// A fit known only through its t-statistic (unit standard error, zero null).
    pub fn from_t(t: f64, df: u64) -> Result<Self> {
        Self::new(t, 1.0, df, 0.0)
    }

    pub fn estimate(&self) -> f64 {
        self.estimate
    }

    pub fn std_error(&self) -> f64 {
        self.std_error
    }

    pub fn df(&self) -> u64 {
        self.df
    }

    pub fn null_value(&self) -> f64 {
        self.null_value
    }

    /// `t_r = (estimate - null) / se`.
    pub fn t(&self) -> f64 {
        (self.estimate - self.null_value) / self.std_error
    }

    /// `f_r = |t_r| / √df`.
    pub fn f(&self) -> f64 {
        self.t().abs() / (self.df as f64).sqrt()
    }
}

/// A postulated pair of partial R² values for an added covariate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrengthPair {
    pub r2_y: f64,
    pub r2_d: f64,
}

impl StrengthPair {
    /// Both components must lie in `[0, 1]`. Operations that divide by
    /// `1 - r2_d` reject `r2_d == 1` separately with [`Error::Pole`].
    pub fn new(r2_y: f64, r2_d: f64) -> Result<Self> {
        for (name, v) in [("r2_y", r2_y), ("r2_d", r2_d)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} = {v} not in [0, 1]")));
            }
        }
        Ok(Self { r2_y, r2_d })
    }

    pub const ZERO: StrengthPair = StrengthPair { r2_y: 0.0, r2_d: 0.0 };
}

/// A t-statistic magnitude that may be unbounded (when `R²_y = 1` the
/// adjusted standard error vanishes).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TStat {
    Finite(f64),
    Unbounded,
}

impl TStat {
    /// The value as `f64`, with `Unbounded` mapped to `+∞`.
    pub fn value(self) -> f64 {
        match self {
            TStat::Finite(v) => v,
            TStat::Unbounded => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            TStat::Finite(v) => Some(v),
            TStat::Unbounded => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, TStat::Unbounded)
    }
}

impl fmt::Display for TStat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TStat::Finite(v) => fmt::Display::fmt(v, f),
            TStat::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl Serialize for TStat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TStat::Finite(v) => s.serialize_f64(*v),
            TStat::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for TStat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(TStat::Finite(v)),
            Raw::Str(s) if s == "unbounded" => Ok(TStat::Unbounded),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"unbounded\", got {s:?}"
            ))),
        }
    }
}

/// Inference for the coefficient of interest after adjusting for a covariate
/// of the given strength.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdjustedInference {
    /// `estimate - BF · se_r · √df`
    pub estimate_lower: f64,
    /// `estimate + BF · se_r · √df`
    pub estimate_upper: f64,
    pub std_error: f64,
    /// `|t|` under the bias direction that moves the estimate away from the null.
    pub t_adversarial: TStat,
    pub null_value: f64,
}

impl AdjustedInference {
    /// Signed t-statistics for the two bias directions, `(lower, upper)`.
    /// `None` when the adjusted standard error is zero.
    pub fn signed_t(&self) -> Option<(f64, f64)> {
        (self.std_error > 0.0).then(|| {
            (
                (self.estimate_lower - self.null_value) / self.std_error,
                (self.estimate_upper - self.null_value) / self.std_error,
            )
        })
    }
}

fn check_pole(s: &StrengthPair) -> Result<()> {
    if s.r2_d >= 1.0 {
        Err(Error::Pole)
    } else {
        Ok(())
    }
}

pub fn bias_factor(s: &StrengthPair) -> Result<f64> {
    check_pole(s)?;
    Ok((s.r2_y * s.r2_d / (1.0 - s.r2_d)).sqrt())
}

pub fn se_factor(s: &StrengthPair) -> Result<f64> {
    check_pole(s)?;
    Ok(((1.0 - s.r2_y) / (1.0 - s.r2_d)).sqrt())
}

/// `(f_r √(1 - r2_d) + √(r2_y r2_d)) · √df_eff / √(1 - r2_y)`.
///
/// Unlike [`adjust`] this stays finite at `r2_d = 1`, which the optimizers
/// need as a limit point.
pub(crate) fn adjusted_t(f_r: f64, r2_y: f64, r2_d: f64, df_eff: f64) -> TStat {
    let num = f_r * (1.0 - r2_d).sqrt() + (r2_y * r2_d).sqrt();
    if r2_y >= 1.0 {
        // t ≡ 0 along the whole approach when nothing moves the estimate
        return if num == 0.0 {
            TStat::Finite(0.0)
        } else {
            TStat::Unbounded
        };
    }
    TStat::Finite(num * (df_eff / (1.0 - r2_y)).sqrt())
}

/// Adjusted estimate, standard error and adversarial `|t|` after adding one
/// covariate of strength `s` to `fit`.
pub fn adjust(fit: &RestrictedFit, s: &StrengthPair) -> Result<AdjustedInference> {
    let bf = bias_factor(s)?;
    let sef = se_factor(s)?;
    let df = fit.df() as f64;
    let shift = bf * fit.std_error() * df.sqrt();
    Ok(AdjustedInference {
        estimate_lower: fit.estimate() - shift,
        estimate_upper: fit.estimate() + shift,
        std_error: sef * fit.std_error() * (df / (df - 1.0)).sqrt(),
        t_adversarial: adjusted_t(fit.f(), s.r2_y, s.r2_d, df - 1.0),
        null_value: fit.null_value(),
    })
}
