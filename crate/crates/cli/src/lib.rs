//! Command implementations behind the `rvi` binary.

pub mod args;
mod input;
mod report;

use std::fs;
use std::io::{self, Write};

use rvi_core::robustness::{self, q95_r2d, StrengthBounds};
use rvi_core::specsearch::{self, BoundMode, SearchConfig, SearchProblem};
use rvi_core::{ols, Error, ModelSpec, RestrictedFit};

use args::{AnalyzeArgs, Cli, Command, Common, EnumerateArgs, FitArgs, GridArgs, SearchArgs};
use report::{AnalyzeOut, BenchmarkOut, BoundOut, EnumerateOut, Render, SummaryOut};

/// Tolerance for cross-checking `--t` against `--estimate`/`--se`.
const T_AGREEMENT: f64 = 1e-6;

pub const ENV_THREADS: &str = "RVI_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Domain(_) | Error::Pole | Error::InvalidSpec(_) => CliError::Usage(msg),
            Error::UnknownColumn(_)
            | Error::SingularDesign { .. }
            | Error::TooFewRows { .. }
            | Error::TooManyCovariates { .. }
            | Error::AllSingular => CliError::Data(msg),
            Error::Internal(_) => CliError::Numerical(msg),
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let common = &cli.common;
    if !(common.alpha > 0.0 && common.alpha < 1.0) {
        return Err(CliError::Usage(format!(
            "--alpha must lie in (0, 1), got {}",
            common.alpha
        )));
    }
    let rendered = match &cli.command {
        Command::Summary(a) => summary(common, a)?.render(common.format),
        Command::Analyze(a) => analyze(common, a)?.render(common.format),
        Command::Grid(a) => grid(common, a)?.render(common.format),
        Command::Bound(a) => bound(common, a)?.render(common.format),
        Command::Enumerate(a) => enumerate(common, a)?.render(common.format),
    }?;
    emit(common, &rendered)
}

fn emit(common: &Common, text: &str) -> Result<(), CliError> {
    match &common.output {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Data(format!("cannot write to stdout: {e}"))),
    }
}

fn fit_from_args(common: &Common, a: &FitArgs) -> Result<(RestrictedFit, bool), CliError> {
    match (a.t, a.estimate, a.std_error) {
        (None, Some(est), Some(se)) => {
            Ok((RestrictedFit::new(est, se, a.df, common.null_value)?, true))
        }
        (Some(t), None, None) => {
            if common.null_value != 0.0 {
                return Err(CliError::Usage(
                    "--null needs --estimate and --se; a bare --t is already centered".into(),
                ));
            }
            Ok((RestrictedFit::from_t(t, a.df)?, false))
        }
        (Some(t), Some(est), Some(se)) => {
            let fit = RestrictedFit::new(est, se, a.df, common.null_value)?;
            if (fit.t() - t).abs() > T_AGREEMENT {
                return Err(CliError::Usage(format!(
                    "--t {t} disagrees with (estimate - null) / se = {}",
                    fit.t()
                )));
            }
            Ok((fit, true))
        }
        _ => Err(CliError::Usage(
            "give either --t or both --estimate and --se".into(),
        )),
    }
}

fn summary(common: &Common, a: &FitArgs) -> Result<SummaryOut, CliError> {
    let (fit, has_estimate) = fit_from_args(common, a)?;
    let mut caps = a.r2d_caps.clone();
    if a.q95 {
        caps.push(q95_r2d(fit.df())?);
    }
    let rep = robustness::report(&fit, common.alpha, &caps)?;
    Ok(SummaryOut::new(&fit, has_estimate, rep))
}

fn threads() -> Result<Option<usize>, CliError> {
    match std::env::var(ENV_THREADS) {
        Err(_) => Ok(None),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(|n| (n > 0).then_some(n))
            .map_err(|_| CliError::Usage(format!("{ENV_THREADS}={v} is not a worker count"))),
    }
}

/// Column names in first-seen order without repeats.
fn unique<'a>(names: impl IntoIterator<Item = &'a String>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for n in names {
        if !out.contains(&n.as_str()) {
            out.push(n);
        }
    }
    out
}

fn analyze(common: &Common, a: &AnalyzeArgs) -> Result<AnalyzeOut, CliError> {
    let d = &a.data;
    let wanted = unique(
        [&d.outcome, &d.treatment]
            .into_iter()
            .chain(&a.covariates)
            .chain(&a.benchmarks),
    );
    let data = input::read_columns(&d.data, &wanted)?;
    let mut spec = ModelSpec::new(d.outcome.clone(), d.treatment.clone(), a.covariates.clone());
    spec.include_intercept = !d.no_intercept;
    let fit = ols::restricted_fit(&data, &spec, common.null_value)?;
    let rep = robustness::report(&fit, common.alpha, &[])?;

    let mut benchmarks = Vec::with_capacity(a.benchmarks.len());
    for z in &a.benchmarks {
        let s = ols::observed_strength(&data, &spec, z)?;
        let t_max = robustness::t_max(&fit, &StrengthBounds::new(s.r2_y, s.r2_d)?, 1)?.t_max;
        let verdict = if rep.already_significant {
            "already significant"
        } else if s.r2_y < rep.rvi && s.r2_d < rep.rvi {
            "below RVI: cannot overturn"
        } else if t_max.value() > rep.t_critical {
            "could overturn"
        } else {
            "cannot overturn"
        };
        benchmarks.push(BenchmarkOut {
            name: z.clone(),
            r2_y: s.r2_y,
            r2_d: s.r2_d,
            t_max,
            verdict: verdict.to_string(),
        });
    }
    Ok(AnalyzeOut {
        n: data.n_rows(),
        dropped_rows: data.dropped_rows(),
        outcome: d.outcome.clone(),
        treatment: d.treatment.clone(),
        covariates: a.covariates.clone(),
        summary: SummaryOut::new(&fit, true, rep),
        benchmarks,
    })
}

fn grid(common: &Common, a: &GridArgs) -> Result<rvi_core::GridSheet, CliError> {
    let (fit, _) = fit_from_args(common, &a.fit)?;
    Ok(rvi_core::grid(
        &fit,
        common.alpha,
        a.r2_y_max,
        a.r2_d_max,
        a.resolution,
    )?)
}

fn problem(common: &Common, a: &SearchArgs) -> Result<SearchProblem, CliError> {
    let d = &a.data;
    let wanted = unique(
        [&d.outcome, &d.treatment]
            .into_iter()
            .chain(&a.base)
            .chain(&a.optional),
    );
    let data = input::read_columns(&d.data, &wanted)?;
    let mut prob = SearchProblem::new(
        data,
        d.outcome.clone(),
        d.treatment.clone(),
        a.base.clone(),
        a.optional.clone(),
    );
    prob.alpha = common.alpha;
    prob.null_value = common.null_value;
    prob.include_intercept = !d.no_intercept;
    Ok(prob)
}

fn mode(a: &SearchArgs) -> BoundMode {
    if a.strict {
        BoundMode::Strict
    } else {
        BoundMode::SingleColumn
    }
}

fn bound(common: &Common, a: &SearchArgs) -> Result<BoundOut, CliError> {
    let prob = problem(common, a)?;
    let b = specsearch::phack_bound(&prob, mode(a))?;
    Ok(BoundOut::new(&b, a.strict, prob.data.dropped_rows()))
}

fn enumerate(common: &Common, a: &EnumerateArgs) -> Result<EnumerateOut, CliError> {
    let prob = problem(common, &a.search)?;
    let dropped = prob.data.dropped_rows();
    let config = SearchConfig {
        cap: a.cap,
        threads: threads()?,
        mode: mode(&a.search),
    };
    match specsearch::enumerate(&prob, &config) {
        Ok(res) => Ok(EnumerateOut::exact(&res, a.search.strict, dropped)),
        Err(Error::TooManyCovariates { p, cap }) => {
            let b = specsearch::phack_bound(&prob, config.mode)?;
            Ok(EnumerateOut::bound_only(
                BoundOut::new(&b, a.search.strict, dropped),
                format!(
                    "{p} optional covariates exceed the enumeration cap of {cap}; \
                     reporting the closed-form bound only"
                ),
            ))
        }
        Err(e) => Err(e.into()),
    }
}
