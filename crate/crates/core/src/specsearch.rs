//! Specification search over subsets of optional covariates: a closed-form
//! bound on the largest treatment `|t|`, and exact parallel enumeration.
//!
//! Enumeration first partials the intercept and base covariates out of every
//! column, then reduces `[optional..., D, Y - λ₀D]` to its `(p+2) × (p+2)`
//! triangular factor. Regressions on columns of that factor reproduce the
//! full regressions exactly, so each subset costs `O(p²)` once the factor is
//! updated incrementally along a Gray-code walk.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::dist;
use crate::error::{Error, Result};
use crate::linalg::{dot, least_squares, norm, r_factor, RANK_TOL};
use crate::ols::{self, Dataset, ModelSpec};
use crate::ovb::{StrengthPair, TStat};
use crate::robustness::{self, StrengthBounds, TMaxSolution};

pub const DEFAULT_CAP: usize = 24;

/// Subsets per work unit. Fixed so that results never depend on how many
/// workers share the index space.
const BLOCK: u64 = 1024;

#[derive(Clone, Debug)]
pub struct SearchProblem {
    pub data: Dataset,
    pub outcome: String,
    pub treatment: String,
    pub base_covariates: Vec<String>,
    pub optional_covariates: Vec<String>,
    pub null_value: f64,
    pub alpha: f64,
    pub include_intercept: bool,
}

impl SearchProblem {
    pub fn new<B: Into<String>, O: Into<String>>(
        data: Dataset,
        outcome: impl Into<String>,
        treatment: impl Into<String>,
        base: impl IntoIterator<Item = B>,
        optional: impl IntoIterator<Item = O>,
    ) -> Self {
        Self {
            data,
            outcome: outcome.into(),
            treatment: treatment.into(),
            base_covariates: base.into_iter().map(Into::into).collect(),
            optional_covariates: optional.into_iter().map(Into::into).collect(),
            null_value: 0.0,
            alpha: 0.05,
            include_intercept: true,
        }
    }

    pub fn p(&self) -> usize {
        self.optional_covariates.len()
    }

    fn base_spec(&self) -> ModelSpec {
        ModelSpec {
            outcome: self.outcome.clone(),
            treatment: self.treatment.clone(),
            covariates: self.base_covariates.clone(),
            include_intercept: self.include_intercept,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!("alpha = {} outside (0, 1)", self.alpha)));
        }
        let base: HashSet<&str> = self.base_covariates.iter().map(String::as_str).collect();
        if let Some(c) = self
            .optional_covariates
            .iter()
            .find(|c| base.contains(c.as_str()))
        {
            return Err(Error::InvalidSpec(format!(
                "`{c}` is listed as both a base and an optional covariate"
            )));
        }
        let mut all = self.base_spec();
        all.covariates.extend(self.optional_covariates.iter().cloned());
        all.validate(&self.data)
    }
}

/// How the closed-form bound counts the added columns.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BoundMode {
    /// One degree of freedom, as if the optional set were a single covariate.
    #[default]
    SingleColumn,
    /// One degree of freedom per optional covariate.
    Strict,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhackBound {
    /// Signed t-statistic of the base model.
    pub t_r: f64,
    pub df: u64,
    /// Joint partial R² of the whole optional set.
    pub strengths: StrengthPair,
    /// The closed-form maximum over non-empty subsets.
    pub t_max: TMaxSolution,
    /// `max(|t_r|, t_max)`: covers the base model itself as well.
    pub bound: TStat,
}

/// Closed-form bound on `|t|` over every subset of the optional covariates.
pub fn phack_bound(problem: &SearchProblem, mode: BoundMode) -> Result<PhackBound> {
    problem.validate()?;
    let spec = problem.base_spec();
    let fit = ols::restricted_fit(&problem.data, &spec, problem.null_value)?;

    let base: Vec<&str> = problem.base_covariates.iter().map(String::as_str).collect();
    let opt: Vec<&str> = problem.optional_covariates.iter().map(String::as_str).collect();
    let mut with_d = vec![problem.treatment.as_str()];
    with_d.extend(&base);
    let icpt = problem.include_intercept;
    let strengths = StrengthPair::new(
        ols::block_partial_r2(&problem.data, &problem.outcome, &with_d, &opt, icpt)?,
        ols::block_partial_r2(&problem.data, &problem.treatment, &base, &opt, icpt)?,
    )?;

    let m = match mode {
        BoundMode::SingleColumn => 1,
        BoundMode::Strict => problem.p().max(1) as u64,
    };
    let t_max = robustness::t_max(
        &fit,
        &StrengthBounds::new(strengths.r2_y, strengths.r2_d)?,
        m,
    )?;
    let bound = match t_max.t_max {
        TStat::Finite(v) => TStat::Finite(v.max(fit.t().abs())),
        TStat::Unbounded => TStat::Unbounded,
    };
    Ok(PhackBound {
        t_r: fit.t(),
        df: fit.df(),
        strengths,
        t_max,
        bound,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    /// Largest `p` that [`enumerate`] accepts.
    pub cap: usize,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    pub mode: BoundMode,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            cap: DEFAULT_CAP,
            threads: None,
            mode: BoundMode::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpecSearchResult {
    /// Absent when the full optional set is collinear, so the joint
    /// strengths are undefined even though some subsets can be fit.
    pub bound: Option<PhackBound>,
    pub exact_max_t: f64,
    pub argmax_subset: Vec<String>,
    /// Bit `i` set means optional covariate `i` is included.
    pub argmax_mask: u64,
    pub n_significant: u64,
    pub n_total: u64,
    /// Subsets skipped because their design was rank deficient.
    pub n_singular: u64,
}

/// Treatment statistic of one specification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SubsetFit {
    pub mask: u64,
    /// `None` for a rank-deficient specification.
    pub t: Option<f64>,
    pub df: u64,
}

/// Fits every subset of the optional covariates and summarizes the
/// treatment `|t|` across them.
pub fn enumerate(problem: &SearchProblem, config: &SearchConfig) -> Result<SpecSearchResult> {
    let bound = match phack_bound(problem, config.mode) {
        Ok(b) => Some(b),
        Err(Error::SingularDesign { .. }) => None,
        Err(e) => return Err(e),
    };
    let engine = Engine::new(problem, config.cap)?;
    let summary = run(config.threads, || {
        (0..engine.n_blocks())
            .into_par_iter()
            .map(|b| {
                let mut acc = Summary::default();
                engine.walk_block(b, |s| acc.push(s, &engine));
                acc
            })
            .reduce(Summary::default, Summary::merge)
    })?;
    let Some((best_t, best_mask)) = summary.best else {
        return Err(Error::AllSingular);
    };
    Ok(SpecSearchResult {
        bound,
        exact_max_t: best_t,
        argmax_subset: problem
            .optional_covariates
            .iter()
            .enumerate()
            .filter(|(i, _)| best_mask >> i & 1 == 1)
            .map(|(_, c)| c.clone())
            .collect(),
        argmax_mask: best_mask,
        n_significant: summary.significant,
        n_total: engine.n_total(),
        n_singular: summary.singular,
    })
}

/// Per-subset statistics, indexed by bitmask.
pub fn subset_fits(problem: &SearchProblem, config: &SearchConfig) -> Result<Vec<SubsetFit>> {
    problem.validate()?;
    let engine = Engine::new(problem, config.cap)?;
    let blocks: Vec<Vec<SubsetFit>> = run(config.threads, || {
        (0..engine.n_blocks())
            .into_par_iter()
            .map(|b| {
                let mut out = Vec::new();
                engine.walk_block(b, |s| out.push(s));
                out
            })
            .collect()
    })?;
    let mut fits = vec![
        SubsetFit {
            mask: 0,
            t: None,
            df: 0
        };
        engine.n_total() as usize
    ];
    for s in blocks.into_iter().flatten() {
        fits[s.mask as usize] = s;
    }
    Ok(fits)
}

fn run<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    Ok(pool.install(job))
}

#[derive(Default)]
struct Summary {
    best: Option<(f64, u64)>,
    significant: u64,
    singular: u64,
}

impl Summary {
    fn push(&mut self, s: SubsetFit, engine: &Engine) {
        let Some(t) = s.t else {
            self.singular += 1;
            return;
        };
        let abs = t.abs();
        if abs > engine.critical[engine.size(s.mask)] {
            self.significant += 1;
        }
        self.best = better(self.best, Some((abs, s.mask)));
    }

    fn merge(self, other: Self) -> Self {
        Self {
            best: better(self.best, other.best),
            significant: self.significant + other.significant,
            singular: self.singular + other.singular,
        }
    }
}

/// Larger `|t|` wins; ties go to the smaller bitmask.
fn better(a: Option<(f64, u64)>, b: Option<(f64, u64)>) -> Option<(f64, u64)> {
    match (a, b) {
        (Some(x), Some(y)) => {
            if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
                Some(y)
            } else {
                Some(x)
            }
        }
        (x, None) => x,
        (None, y) => y,
    }
}

/// Shared read-only state for the subset walk.
struct Engine {
    p: usize,
    /// Triangular factor of `[optional..., D, Y']`, column-major.
    factor: Vec<Vec<f64>>,
    /// Norms of the raw data columns, used for the rank test.
    scale: Vec<f64>,
    /// Residual degrees of freedom of the base model with `D`.
    df0: i64,
    /// `t*` indexed by subset size.
    critical: Vec<f64>,
}

impl Engine {
    fn new(problem: &SearchProblem, cap: usize) -> Result<Self> {
        let p = problem.p();
        if p > cap || p > 62 {
            return Err(Error::TooManyCovariates { p, cap: cap.min(62) });
        }
        let data = &problem.data;
        let n = data.n_rows();
        let d = data.column(&problem.treatment)?;
        let y: Vec<f64> = data
            .column(&problem.outcome)?
            .iter()
            .zip(d)
            .map(|(y, d)| y - problem.null_value * d)
            .collect();

        let ones = vec![1.0; n];
        let mut base_cols: Vec<&[f64]> = Vec::new();
        let mut base_names: Vec<String> = Vec::new();
        if problem.include_intercept {
            base_cols.push(&ones);
            base_names.push(ols::INTERCEPT.to_string());
        }
        for c in &problem.base_covariates {
            base_cols.push(data.column(c)?);
            base_names.push(c.clone());
        }
        let k0 = base_cols.len() + 1;
        if n <= k0 {
            return Err(Error::TooFewRows { n, k: k0 });
        }
        let partial = |v: &[f64]| -> Result<Vec<f64>> {
            if base_cols.is_empty() {
                return Ok(v.to_vec());
            }
            least_squares(&base_cols, v)
                .map(|f| f.residuals)
                .map_err(|idx| Error::SingularDesign {
                    columns: idx.into_iter().map(|i| base_names[i].clone()).collect(),
                })
        };

        let mut cols = Vec::with_capacity(p + 2);
        let mut scale = Vec::with_capacity(p + 1);
        for c in &problem.optional_covariates {
            let raw = data.column(c)?;
            scale.push(norm(raw));
            cols.push(partial(raw)?);
        }
        scale.push(norm(d));
        cols.push(partial(d)?);
        cols.push(partial(&y)?);

        let df0 = (n - k0) as i64;
        let critical = (0..=p)
            .map(|s| {
                let df = df0 - s as i64;
                if df >= 1 {
                    dist::t_critical(problem.alpha, df as u64)
                } else {
                    Ok(f64::INFINITY)
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            p,
            factor: r_factor(&cols),
            scale,
            df0,
            critical,
        })
    }

    fn n_total(&self) -> u64 {
        1u64 << self.p
    }

    fn n_blocks(&self) -> u64 {
        self.n_total().div_ceil(BLOCK)
    }

    fn size(&self, mask: u64) -> usize {
        mask.count_ones() as usize
    }

    /// Visits Gray-code indices `[b·BLOCK, (b+1)·BLOCK)`, starting each block
    /// from a freshly built factorization.
    fn walk_block(&self, b: u64, mut visit: impl FnMut(SubsetFit)) {
        let start = b * BLOCK;
        let end = (start + BLOCK).min(self.n_total());
        let mut state = Walk::new(self);
        let mask0 = gray(start);
        for j in 0..self.p {
            if mask0 >> j & 1 == 1 {
                state.add(j);
            }
        }
        visit(state.evaluate(mask0));
        for i in start + 1..end {
            let bit = i.trailing_zeros() as usize;
            if gray(i) >> bit & 1 == 1 {
                state.add(bit);
            } else {
                state.remove(bit);
            }
            visit(state.evaluate(gray(i)));
        }
    }
}

fn gray(i: u64) -> u64 {
    i ^ (i >> 1)
}

/// Mutable factorization for one block of the walk.
///
/// `a` holds `Qᵀ` times every column of the engine's factor. The first
/// `order.len()` rows of the columns listed in `order` form an upper
/// triangle; rows below that are the residuals after projecting them out.
struct Walk<'e> {
    engine: &'e Engine,
    a: Vec<Vec<f64>>,
    order: Vec<usize>,
    /// Included columns that were collinear with `order` when added.
    pending: Vec<usize>,
}

impl<'e> Walk<'e> {
    fn new(engine: &'e Engine) -> Self {
        Self {
            engine,
            a: engine.factor.clone(),
            order: Vec::with_capacity(engine.p),
            pending: Vec::new(),
        }
    }

    fn add(&mut self, j: usize) {
        if !self.try_insert(j) {
            self.pending.push(j);
        }
    }

    fn remove(&mut self, j: usize) {
        if let Some(pos) = self.pending.iter().position(|&c| c == j) {
            self.pending.remove(pos);
            return;
        }
        let pos = self
            .order
            .iter()
            .position(|&c| c == j)
            .expect("removed column must be present");
        self.order.remove(pos);
        // Columns after `pos` now carry one subdiagonal entry each.
        for k in pos..self.order.len() {
            self.rotate(k, k + 1, self.order[k]);
        }
        let waiting = std::mem::take(&mut self.pending);
        for c in waiting {
            self.add(c);
        }
    }

    /// Appends column `j` to the triangle, or reports it as collinear.
    fn try_insert(&mut self, j: usize) -> bool {
        let s = self.order.len();
        let tail = norm(&self.a[j][s..]);
        if tail < RANK_TOL * self.engine.scale[j] || tail == 0.0 {
            return false;
        }
        for row in (s + 1..self.a[j].len()).rev() {
            if self.a[j][row] != 0.0 {
                self.rotate(row - 1, row, j);
            }
        }
        self.order.push(j);
        true
    }

    /// Givens rotation on rows `(top, bottom)` zeroing `a[pivot][bottom]`,
    /// applied to every column.
    fn rotate(&mut self, top: usize, bottom: usize, pivot: usize) {
        let (x, y) = (self.a[pivot][top], self.a[pivot][bottom]);
        if y == 0.0 {
            return;
        }
        let r = x.hypot(y);
        let (c, s) = (x / r, y / r);
        for col in self.a.iter_mut() {
            let (u, v) = (col[top], col[bottom]);
            col[top] = c * u + s * v;
            col[bottom] = c * v - s * u;
        }
        self.a[pivot][bottom] = 0.0;
    }

    fn evaluate(&self, mask: u64) -> SubsetFit {
        let e = self.engine;
        let size = e.size(mask);
        let df = e.df0 - size as i64;
        let singular = SubsetFit { mask, t: None, df: df.max(0) as u64 };
        if !self.pending.is_empty() || df < 1 {
            return singular;
        }
        let s = self.order.len();
        let d = &self.a[e.p][s..];
        let y = &self.a[e.p + 1][s..];
        let dd = dot(d, d);
        if dd.sqrt() < RANK_TOL * e.scale[e.p] || dd == 0.0 {
            return singular;
        }
        let beta = dot(d, y) / dd;
        let rss: f64 = d.iter().zip(y).map(|(d, y)| (y - beta * d).powi(2)).sum();
        let se = (rss / df as f64 / dd).sqrt();
        SubsetFit {
            mask,
            t: Some(beta / se),
            df: df as u64,
        }
    }
}
