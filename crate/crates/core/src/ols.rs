//! Ordinary least squares with classical standard errors, FWL
//! residualization and partial-R² measurement.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, least_squares, norm, LsFit, RANK_TOL};
use crate::ovb::{RestrictedFit, StrengthPair};

pub const INTERCEPT: &str = "(Intercept)";

/// Named numeric columns of equal length with no missing values.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    n: usize,
    dropped_rows: usize,
}

impl Dataset {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::InvalidSpec(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidSpec(format!("duplicate column `{name}`")));
            }
        }
        let n = columns.first().map_or(0, Vec::len);
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::InvalidSpec(format!(
                    "column `{name}` has {} rows, expected {n}",
                    col.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "column `{name}` contains non-finite values"
                )));
            }
        }
        Ok(Self {
            names,
            columns,
            n,
            dropped_rows: 0,
        })
    }

    /// Builds a dataset from columns with missing entries, dropping every row
    /// that has a missing (or non-finite) value in any column.
    pub fn with_missing(names: Vec<String>, columns: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        if let Some((name, col)) = names.iter().zip(&columns).find(|(_, c)| c.len() != n) {
            return Err(Error::InvalidSpec(format!(
                "column `{name}` has {} rows, expected {n}",
                col.len()
            )));
        }
        let keep: Vec<bool> = (0..n)
            .map(|i| {
                columns
                    .iter()
                    .all(|c| c[i].is_some_and(|v| v.is_finite()))
            })
            .collect();
        let dropped = keep.iter().filter(|k| !**k).count();
        let dense = columns
            .into_iter()
            .map(|c| {
                c.into_iter()
                    .zip(&keep)
                    .filter_map(|(v, &k)| if k { v } else { None })
                    .collect()
            })
            .collect();
        let mut data = Self::new(names, dense)?;
        data.dropped_rows = dropped;
        Ok(data)
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    /// Rows removed by listwise deletion at construction.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelSpec {
    pub outcome: String,
    pub treatment: String,
    pub covariates: Vec<String>,
    pub include_intercept: bool,
}

impl ModelSpec {
    pub fn new<S: Into<String>>(
        outcome: impl Into<String>,
        treatment: impl Into<String>,
        covariates: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            outcome: outcome.into(),
            treatment: treatment.into(),
            covariates: covariates.into_iter().map(Into::into).collect(),
            include_intercept: true,
        }
    }

    pub fn without_intercept(mut self) -> Self {
        self.include_intercept = false;
        self
    }

    pub fn validate(&self, data: &Dataset) -> Result<()> {
        if self.outcome == self.treatment {
            return Err(Error::InvalidSpec(
                "outcome and treatment must be different columns".into(),
            ));
        }
        let mut seen = HashSet::new();
        for c in &self.covariates {
            if c == &self.outcome || c == &self.treatment {
                return Err(Error::InvalidSpec(format!(
                    "`{c}` cannot be both a covariate and the outcome or treatment"
                )));
            }
            if !seen.insert(c.as_str()) {
                return Err(Error::InvalidSpec(format!("covariate `{c}` listed twice")));
            }
        }
        for c in self.regressor_names(false).iter().chain([&self.outcome]) {
            data.column(c)?;
        }
        Ok(())
    }

    /// Treatment followed by covariates, optionally led by the intercept.
    fn regressor_names(&self, with_intercept: bool) -> Vec<String> {
        let mut names = Vec::with_capacity(self.covariates.len() + 2);
        if with_intercept {
            names.push(INTERCEPT.to_string());
        }
        names.push(self.treatment.clone());
        names.extend(self.covariates.iter().cloned());
        names
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    /// Regressor names in design order (intercept first when present).
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub df: usize,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub r_squared: f64,
}

impl FitResult {
    fn index(&self, term: &str) -> Result<usize> {
        self.terms
            .iter()
            .position(|t| t == term)
            .ok_or_else(|| Error::UnknownColumn(term.to_string()))
    }

    pub fn coefficient(&self, term: &str) -> Result<f64> {
        Ok(self.coefficients[self.index(term)?])
    }

    pub fn std_error(&self, term: &str) -> Result<f64> {
        Ok(self.std_errors[self.index(term)?])
    }

    pub fn t_stat(&self, term: &str) -> Result<f64> {
        Ok(self.t_stats[self.index(term)?])
    }
}

/// Regression of `target` on the named columns, optionally with an intercept.
pub(crate) fn regress(
    data: &Dataset,
    target: &str,
    regressors: &[&str],
    intercept: bool,
) -> Result<(Vec<String>, LsFit)> {
    let ones = vec![1.0; data.n_rows()];
    let mut names: Vec<String> = Vec::with_capacity(regressors.len() + 1);
    let mut cols: Vec<&[f64]> = Vec::with_capacity(regressors.len() + 1);
    if intercept {
        names.push(INTERCEPT.to_string());
        cols.push(&ones);
    }
    for &r in regressors {
        names.push(r.to_string());
        cols.push(data.column(r)?);
    }
    let y = data.column(target)?;
    if data.n_rows() <= cols.len() {
        return Err(Error::TooFewRows {
            n: data.n_rows(),
            k: cols.len(),
        });
    }
    match least_squares(&cols, y) {
        Ok(fit) => Ok((names, fit)),
        Err(idx) => Err(Error::SingularDesign {
            columns: idx.into_iter().map(|i| names[i].clone()).collect(),
        }),
    }
}

/// Fits `outcome ~ treatment + covariates (+ intercept)` with classical
/// (homoskedastic) standard errors.
pub fn fit(data: &Dataset, spec: &ModelSpec) -> Result<FitResult> {
    spec.validate(data)?;
    let regressors = spec.regressor_names(false);
    let refs: Vec<&str> = regressors.iter().map(String::as_str).collect();
    let (terms, ls) = regress(data, &spec.outcome, &refs, spec.include_intercept)?;
    let df = data.n_rows() - terms.len();
    let sigma2 = ls.rss / df as f64;
    let std_errors: Vec<f64> = ls.xtx_inv_diag.iter().map(|d| (sigma2 * d).sqrt()).collect();
    let t_stats = ls
        .coef
        .iter()
        .zip(&std_errors)
        .map(|(b, s)| b / s)
        .collect();
    let y = data.column(&spec.outcome)?;
    let tss = if spec.include_intercept {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
    } else {
        dot(y, y)
    };
    let r_squared = if tss > 0.0 {
        (1.0 - ls.rss / tss).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(FitResult {
        terms,
        coefficients: ls.coef,
        std_errors,
        t_stats,
        df,
        residuals: ls.residuals,
        rss: ls.rss,
        r_squared,
    })
}

/// The treatment row of [`fit`], packaged for sensitivity analysis.
pub fn restricted_fit(data: &Dataset, spec: &ModelSpec, null_value: f64) -> Result<RestrictedFit> {
    let f = fit(data, spec)?;
    RestrictedFit::new(
        f.coefficient(&spec.treatment)?,
        f.std_error(&spec.treatment)?,
        f.df as u64,
        null_value,
    )
}

/// Residuals of `target` regressed on `on` plus an intercept.
pub fn residualize(data: &Dataset, target: &str, on: &[&str]) -> Result<Vec<f64>> {
    residualize_with(data, target, on, true)
}

fn residualize_with(data: &Dataset, target: &str, on: &[&str], intercept: bool) -> Result<Vec<f64>> {
    if on.is_empty() && !intercept {
        return Ok(data.column(target)?.to_vec());
    }
    Ok(regress(data, target, on, intercept)?.1.residuals)
}

/// Squared correlation of two residual vectors; zero if either vanishes.
fn residual_r2(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (dot(a, a), dot(b, b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let ab = dot(a, b);
    (ab * ab / (na * nb)).clamp(0.0, 1.0)
}

/// Partial R² of column `z` with the outcome (given treatment and
/// covariates) and with the treatment (given covariates).
///
/// A `z` lying in the span of the covariates has strength `(0, 0)`.
pub fn observed_strength(data: &Dataset, spec: &ModelSpec, z: &str) -> Result<StrengthPair> {
    spec.validate(data)?;
    if z == spec.outcome || z == spec.treatment {
        return Err(Error::InvalidSpec(format!(
            "benchmark `{z}` must differ from the outcome and treatment"
        )));
    }
    let z_col = data.column(z)?;
    let z_scale = norm(z_col);
    let covs: Vec<&str> = spec.covariates.iter().map(String::as_str).collect();
    let mut with_d = vec![spec.treatment.as_str()];
    with_d.extend(&covs);
    let icpt = spec.include_intercept;

    let z_given_x = residualize_with(data, z, &covs, icpt)?;
    if z_scale == 0.0 || norm(&z_given_x) < RANK_TOL * z_scale {
        return Ok(StrengthPair::ZERO);
    }
    let z_given_dx = residualize_with(data, z, &with_d, icpt)?;
    if norm(&z_given_dx) < RANK_TOL * z_scale {
        return Err(Error::SingularDesign {
            columns: vec![z.to_string()],
        });
    }
    let y_given_dx = residualize_with(data, &spec.outcome, &with_d, icpt)?;
    let d_given_x = residualize_with(data, &spec.treatment, &covs, icpt)?;
    StrengthPair::new(
        residual_r2(&y_given_dx, &z_given_dx),
        residual_r2(&d_given_x, &z_given_x),
    )
}

/// Partial R² of a block of columns with `target` after `given`:
/// `1 - RSS(target | given, added) / RSS(target | given)`.
pub fn block_partial_r2(
    data: &Dataset,
    target: &str,
    given: &[&str],
    added: &[&str],
    intercept: bool,
) -> Result<f64> {
    if added.is_empty() {
        return Ok(0.0);
    }
    let short = regress(data, target, given, intercept)?.1.rss;
    let all: Vec<&str> = given.iter().chain(added).copied().collect();
    let long = regress(data, target, &all, intercept)?.1.rss;
    if short <= 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 - long / short).clamp(0.0, 1.0))
}
