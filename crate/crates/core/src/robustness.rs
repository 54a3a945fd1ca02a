//! Maximum adjusted t-statistic and robustness values for insignificance.
//!
//! All formulas work on the degrees-of-freedom normalized scale
//! `f_r = |t_r| / √df` and `f* = t*_{α,df-1} / √(df - 1)`.
//!
//! * [`t_max`]: the largest `|t|` reachable by a covariate whose partial R²
//!   values are bounded by [`StrengthBounds`].
//! * [`xrvi0`]: minimal `R²_y` when the covariate is orthogonal to the treatment.
//! * [`xrvi1`]: minimal `R²_y` with no restriction on `R²_d`.
//! * [`xrvi`]: minimal `R²_y` for an arbitrary cap on `R²_d`.
//! * [`rvi`]: minimal common bound on both partial R² values.
//!
//! They satisfy `xrvi1 <= rvi <= xrvi0`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dist;
use crate::error::{Error, Result};
use crate::ovb::{adjusted_t, RestrictedFit, StrengthPair, TStat};

/// Tolerance (relative to `t*`) used when verifying quadratic roots.
const ROOT_TOLERANCE: f64 = 1e-6;

/// Upper bounds on the partial R² of the added covariate with `Y` and `D`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrengthBounds {
    pub r2_y_max: f64,
    pub r2_d_max: f64,
}

impl StrengthBounds {
    pub fn new(r2_y_max: f64, r2_d_max: f64) -> Result<Self> {
        for (name, v) in [("r2_y_max", r2_y_max), ("r2_d_max", r2_d_max)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} = {v} not in [0, 1]")));
            }
        }
        Ok(Self { r2_y_max, r2_d_max })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Both bounds bind.
    Boundary,
    /// Only the `R²_y` bound binds; `R²_d` sits at the stationary point.
    Interior,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TMaxSolution {
    pub t_max: TStat,
    /// The maximizing pair. `r2_y` always equals the bound. `r2_d` can be 1
    /// only when `f_r = 0` and `r2_d_max = 1`, where the maximum is a supremum.
    pub optimizer: StrengthPair,
    pub regime: Regime,
    pub df_effective: u64,
}

/// Result of a minimal-strength search: either a fraction in `[0, 1]`, or
/// impossible (no covariate orthogonal to `D` can move a zero t-statistic).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RobustnessValue {
    Value(f64),
    Impossible,
}

impl RobustnessValue {
    pub fn value(self) -> Option<f64> {
        match self {
            RobustnessValue::Value(v) => Some(v),
            RobustnessValue::Impossible => None,
        }
    }
}

impl fmt::Display for RobustnessValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RobustnessValue::Value(v) => fmt::Display::fmt(v, f),
            RobustnessValue::Impossible => f.write_str("impossible"),
        }
    }
}

impl Serialize for RobustnessValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RobustnessValue::Value(v) => s.serialize_f64(*v),
            RobustnessValue::Impossible => s.serialize_str("impossible"),
        }
    }
}

impl<'de> Deserialize<'de> for RobustnessValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(RobustnessValue::Value(v)),
            Raw::Str(s) if s == "impossible" => Ok(RobustnessValue::Impossible),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"impossible\", got {s:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XrviAt {
    pub r2_d_max: f64,
    pub value: RobustnessValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub alpha: f64,
    pub df: u64,
    pub t: f64,
    /// `t*_{α,df-1}`, the threshold after spending one degree of freedom.
    pub t_critical: f64,
    pub already_significant: bool,
    pub xrvi1: f64,
    pub rvi: f64,
    pub xrvi0: RobustnessValue,
    pub xrvi_at: Vec<XrviAt>,
}

/// Normalized observed and critical statistics for one fit at one level.
#[derive(Clone, Copy, Debug)]
struct Scale {
    f_r: f64,
    f_star: f64,
    t_star: f64,
    df_eff: f64,
}

impl Scale {
    fn new(fit: &RestrictedFit, alpha: f64) -> Result<Self> {
        let df_eff = fit.df() - 1;
        let t_star = dist::t_critical(alpha, df_eff)?;
        Ok(Self {
            f_r: fit.f(),
            f_star: t_star / (df_eff as f64).sqrt(),
            t_star,
            df_eff: df_eff as f64,
        })
    }

    fn significant(&self) -> bool {
        self.f_star < self.f_r
    }

    fn xrvi1(&self) -> f64 {
        if self.significant() {
            return 0.0;
        }
        let fs2 = self.f_star * self.f_star;
        ((fs2 - self.f_r * self.f_r) / (1.0 + fs2)).max(0.0)
    }
}

/// Closed-form maximizer on the normalized scale: `(t_max, r2_d*, regime)`.
fn solve_t_max(f_r: f64, r2_y_max: f64, r2_d_max: f64, df_eff: f64) -> (TStat, f64, Regime) {
    let f2 = f_r * f_r;
    let (r2_d, regime) = if f2 * r2_d_max < r2_y_max * (1.0 - r2_d_max) {
        (r2_d_max, Regime::Boundary)
    } else {
        let denom = f2 + r2_y_max;
        let stationary = if denom > 0.0 { r2_y_max / denom } else { 0.0 };
        (stationary.min(r2_d_max), Regime::Interior)
    };
    (adjusted_t(f_r, r2_y_max, r2_d, df_eff), r2_d, regime)
}

/// Maximum adjusted `|t|` over covariates (or blocks of `m` covariates)
/// whose partial R² values respect `bounds`.
pub fn t_max(fit: &RestrictedFit, bounds: &StrengthBounds, m: u64) -> Result<TMaxSolution> {
    if m == 0 {
        return Err(Error::domain("number of added covariates must be positive"));
    }
    if fit.df() <= m {
        return Err(Error::domain(format!(
            "df = {} leaves no residual degrees of freedom after adding {m} covariate(s)",
            fit.df()
        )));
    }
    let df_effective = fit.df() - m;
    let (t, r2_d, regime) = solve_t_max(
        fit.f(),
        bounds.r2_y_max,
        bounds.r2_d_max,
        df_effective as f64,
    );
    Ok(TMaxSolution {
        t_max: t,
        optimizer: StrengthPair {
            r2_y: bounds.r2_y_max,
            r2_d,
        },
        regime,
        df_effective,
    })
}

/// Critical value `t*_{α,df-1}` that an adjusted t-statistic must exceed.
pub fn critical_value(fit: &RestrictedFit, alpha: f64) -> Result<f64> {
    Ok(Scale::new(fit, alpha)?.t_star)
}

/// Minimal `R²_y` for a covariate orthogonal to the treatment.
pub fn xrvi0(fit: &RestrictedFit, alpha: f64) -> Result<RobustnessValue> {
    let s = Scale::new(fit, alpha)?;
    Ok(xrvi0_scaled(&s))
}

fn xrvi0_scaled(s: &Scale) -> RobustnessValue {
    if s.significant() {
        RobustnessValue::Value(0.0)
    } else if s.f_r == 0.0 {
        RobustnessValue::Impossible
    } else {
        let ratio = s.f_r / s.f_star;
        RobustnessValue::Value((1.0 - ratio * ratio).max(0.0))
    }
}

/// Minimal `R²_y` when the association with the treatment is unrestricted.
pub fn xrvi1(fit: &RestrictedFit, alpha: f64) -> Result<f64> {
    Ok(Scale::new(fit, alpha)?.xrvi1())
}

/// Minimal common bound on `R²_y` and `R²_d`.
pub fn rvi(fit: &RestrictedFit, alpha: f64) -> Result<f64> {
    Ok(rvi_scaled(&Scale::new(fit, alpha)?))
}

fn rvi_scaled(s: &Scale) -> f64 {
    if s.significant() {
        return 0.0;
    }
    let both_bind = s.f_r < s.f_star && s.f_star * s.f_r < 1.0;
    if both_bind {
        let d = s.f_star - s.f_r;
        let d2 = d * d;
        0.5 * ((d2 * d2 + 4.0 * d2).sqrt() - d2)
    } else {
        s.xrvi1()
    }
}

/// Minimal `R²_y` when `R²_d` is capped at `r2_d_max`.
///
/// In the regime where both bounds bind, the value is a root of a quadratic;
/// the root is chosen by checking which candidate actually brings `t_max` to
/// the critical value.
pub fn xrvi(fit: &RestrictedFit, alpha: f64, r2_d_max: f64) -> Result<RobustnessValue> {
    if !(0.0..=1.0).contains(&r2_d_max) {
        return Err(Error::domain(format!("r2_d_max = {r2_d_max} not in [0, 1]")));
    }
    let s = Scale::new(fit, alpha)?;
    xrvi_scaled(&s, r2_d_max)
}

fn xrvi_scaled(s: &Scale, r2_d_max: f64) -> Result<RobustnessValue> {
    if s.significant() {
        return Ok(RobustnessValue::Value(0.0));
    }
    if r2_d_max == 0.0 {
        return Ok(xrvi0_scaled(s));
    }
    let x1 = s.xrvi1();
    let f2 = s.f_r * s.f_r;
    if f2 * r2_d_max >= x1 * (1.0 - r2_d_max) {
        return Ok(RobustnessValue::Value(x1));
    }

    let fs2 = s.f_star * s.f_star;
    let r = r2_d_max;
    let denom = fs2 + r;
    let k = (fs2 - (1.0 - r) * f2) / denom;
    let b = -2.0 * (k + 2.0 * f2 * (1.0 - r) * r / (denom * denom));
    let c = k * k;
    let disc = (b * b - 4.0 * c).max(0.0);
    // b < 0, so -b + √disc never cancels; the other root follows from Vieta.
    let big = 0.5 * (-b + disc.sqrt());
    let small = if big > 0.0 { c / big } else { 0.0 };

    let hits = |x: f64| {
        let (t, _, _) = solve_t_max(s.f_r, x, r, s.df_eff);
        (t.value() - s.t_star).abs() <= ROOT_TOLERANCE * s.t_star
    };
    [small, big]
        .into_iter()
        .filter(|x| (-1e-12..=1.0 + 1e-12).contains(x))
        .map(|x| x.clamp(0.0, 1.0))
        .find(|&x| hits(x))
        .map(RobustnessValue::Value)
        .ok_or_else(|| {
            Error::Internal(format!(
                "no quadratic root reaches t* (f_r = {}, f* = {}, r2_d_max = {r}, roots {small}, {big})",
                s.f_r, s.f_star
            ))
        })
}

/// Approximate 95th percentile of `R²_d` for a covariate unrelated to a
/// randomized treatment: `q_{0.95}(χ²₁) / df`.
pub fn q95_r2d(df: u64) -> Result<f64> {
    if df == 0 {
        return Err(Error::domain("degrees of freedom must be positive"));
    }
    let q = dist::chi2_critical_1df(0.95)? / df as f64;
    if q >= 1.0 {
        return Err(Error::domain(format!(
            "df = {df} is too small: the 95th percentile of R2_d would be {q}"
        )));
    }
    Ok(q)
}

/// All robustness values for one fit at one significance level, plus the
/// general value at each requested cap on `R²_d`.
pub fn report(fit: &RestrictedFit, alpha: f64, r2_d_caps: &[f64]) -> Result<RobustnessReport> {
    let s = Scale::new(fit, alpha)?;
    let xrvi_at = r2_d_caps
        .iter()
        .map(|&r2_d_max| {
            if !(0.0..=1.0).contains(&r2_d_max) {
                return Err(Error::domain(format!("r2_d_max = {r2_d_max} not in [0, 1]")));
            }
            Ok(XrviAt {
                r2_d_max,
                value: xrvi_scaled(&s, r2_d_max)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RobustnessReport {
        alpha,
        df: fit.df(),
        t: fit.t(),
        t_critical: s.t_star,
        already_significant: s.significant(),
        xrvi1: s.xrvi1(),
        rvi: rvi_scaled(&s),
        xrvi0: xrvi0_scaled(&s),
        xrvi_at,
    })
}
