//! Text, JSON and CSV renderings of command results.

use std::fmt::Write as _;

use serde::Serialize;

use rvi_core::robustness::{RobustnessReport, XrviAt};
use rvi_core::specsearch::{PhackBound, SpecSearchResult};
use rvi_core::{GridSheet, Regime, RestrictedFit, RobustnessValue, TStat};

use crate::args::Format;
use crate::CliError;

pub trait Render: Serialize {
    fn text(&self) -> String;

    /// Header row plus data rows.
    fn table(&self) -> (Vec<String>, Vec<Vec<String>>);

    fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Text => Ok(self.text()),
            Format::Json => json(self),
            Format::Csv => {
                let (header, rows) = self.table();
                csv_text(Some(header), rows)
            }
        }
    }
}

/// Pretty JSON with keys in sorted order, so parsing and re-rendering the
/// output reproduces it byte for byte.
fn json<T: Serialize + ?Sized>(value: &T) -> Result<String, CliError> {
    let v = serde_json::to_value(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Numerical(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_text(header: Option<Vec<String>>, rows: Vec<Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Data(e.to_string());
    if let Some(h) = header {
        w.write_record(&h).map_err(err)?;
    }
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Data(e.to_string()))
}

/// `x` rounded to `digits` significant digits.
pub fn sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else { "inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding can carry into a new leading digit (9.995 -> 10.00).
    let carried = format!("{:.prec$e}", x, prec = digits - 1);
    let again: f64 = carried.parse().unwrap_or(x);
    if again.abs().log10().floor() as i64 > magnitude && decimals > 0 {
        let d = decimals - 1;
        return format!("{again:.d$}");
    }
    s
}

pub fn percent(x: f64) -> String {
    format!("{}%", sig(100.0 * x, 3))
}

fn value_pct(v: RobustnessValue) -> String {
    match v {
        RobustnessValue::Value(x) => percent(x),
        RobustnessValue::Impossible => "impossible".into(),
    }
}

fn value_raw(v: RobustnessValue) -> String {
    match v {
        RobustnessValue::Value(x) => x.to_string(),
        RobustnessValue::Impossible => "impossible".into(),
    }
}

fn tstat_raw(t: TStat) -> String {
    match t {
        TStat::Finite(x) => x.to_string(),
        TStat::Unbounded => "unbounded".into(),
    }
}

fn tstat_text(t: TStat) -> String {
    match t {
        TStat::Finite(x) => sig(x, 6),
        TStat::Unbounded => "unbounded".into(),
    }
}

fn opt_raw(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

fn row(cells: &[String], widths: &[usize]) -> String {
    let mut s = String::from(" ");
    for (c, w) in cells.iter().zip(widths) {
        let _ = write!(s, " {c:<w$}");
    }
    s.trim_end().to_string() + "\n"
}

fn aligned(header: &[&str], values: &[String]) -> String {
    let widths: Vec<usize> = header
        .iter()
        .zip(values)
        .map(|(h, v)| h.chars().count().max(v.chars().count()) + 2)
        .collect();
    let head: Vec<String> = header.iter().map(|h| h.to_string()).collect();
    row(&head, &widths) + &row(values, &widths)
}

#[derive(Debug, Serialize)]
pub struct SummaryOut {
    pub estimate: Option<f64>,
    pub std_error: Option<f64>,
    pub null_value: f64,
    pub df: u64,
    pub alpha: f64,
    pub t: f64,
    pub t_critical: f64,
    pub already_significant: bool,
    pub xrvi1: f64,
    pub rvi: f64,
    pub xrvi0: RobustnessValue,
    pub xrvi_at: Vec<XrviAt>,
}

impl SummaryOut {
    pub fn new(fit: &RestrictedFit, has_estimate: bool, rep: RobustnessReport) -> Self {
        Self {
            estimate: has_estimate.then(|| fit.estimate()),
            std_error: has_estimate.then(|| fit.std_error()),
            null_value: fit.null_value(),
            df: rep.df,
            alpha: rep.alpha,
            t: rep.t,
            t_critical: rep.t_critical,
            already_significant: rep.already_significant,
            xrvi1: rep.xrvi1,
            rvi: rep.rvi,
            xrvi0: rep.xrvi0,
            xrvi_at: rep.xrvi_at,
        }
    }

    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = [
            "estimate", "std_error", "null_value", "df", "alpha", "t", "t_critical",
            "already_significant", "xrvi1", "rvi", "xrvi0",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        h.extend(self.xrvi_at.iter().map(|x| format!("xrvi_at_{}", x.r2_d_max)));
        h
    }

    fn cells(&self) -> Vec<String> {
        let mut c = vec![
            opt_raw(self.estimate),
            opt_raw(self.std_error),
            self.null_value.to_string(),
            self.df.to_string(),
            self.alpha.to_string(),
            self.t.to_string(),
            self.t_critical.to_string(),
            self.already_significant.to_string(),
            self.xrvi1.to_string(),
            self.rvi.to_string(),
            value_raw(self.xrvi0),
        ];
        c.extend(self.xrvi_at.iter().map(|x| value_raw(x.value)));
        c
    }
}

impl Render for SummaryOut {
    fn text(&self) -> String {
        let mut out = format!(
            "df = {}, null = {}, alpha = {}\n\n",
            self.df, self.null_value, self.alpha
        );
        let mut header = Vec::new();
        let mut values = Vec::new();
        if let (Some(e), Some(s)) = (self.estimate, self.std_error) {
            header.extend(["Estimate", "Std. error"]);
            values.extend([sig(e, 4), sig(s, 4)]);
        }
        header.extend(["t-value", "XRVI1", "RVI", "XRVI0"]);
        values.extend([
            sig(self.t, 4),
            percent(self.xrvi1),
            percent(self.rvi),
            value_pct(self.xrvi0),
        ]);
        out += &aligned(&header, &values);
        let _ = writeln!(
            out,
            "\ncritical value t*({}, df - 1) = {}",
            self.alpha,
            sig(self.t_critical, 6)
        );
        for x in &self.xrvi_at {
            let _ = writeln!(
                out,
                "XRVI with R2_d capped at {}: {}",
                sig(x.r2_d_max, 4),
                value_pct(x.value)
            );
        }
        if self.already_significant {
            let _ = writeln!(
                out,
                "already significant at alpha = {}: every robustness value is 0",
                self.alpha
            );
        } else if self.xrvi0 == RobustnessValue::Impossible {
            out += "XRVI0 is impossible: with t = 0 a covariate orthogonal to the treatment cannot help\n";
        }
        out
    }

    fn table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        (self.header(), vec![self.cells()])
    }
}

#[derive(Debug, Serialize)]
pub struct BenchmarkOut {
    pub name: String,
    pub r2_y: f64,
    pub r2_d: f64,
    /// Largest `|t|` a covariate this strong could produce.
    pub t_max: TStat,
    pub verdict: String,
}

#[derive(Debug, Serialize)]
pub struct AnalyzeOut {
    pub n: usize,
    pub dropped_rows: usize,
    pub outcome: String,
    pub treatment: String,
    pub covariates: Vec<String>,
    #[serde(flatten)]
    pub summary: SummaryOut,
    pub benchmarks: Vec<BenchmarkOut>,
}

impl Render for AnalyzeOut {
    fn text(&self) -> String {
        let covs = if self.covariates.is_empty() {
            "none".to_string()
        } else {
            self.covariates.join(", ")
        };
        let mut out = format!(
            "{} on {} (covariates: {covs})\nn = {}, rows dropped for missing values = {}\n",
            self.outcome, self.treatment, self.n, self.dropped_rows
        );
        out += &self.summary.text();
        if !self.benchmarks.is_empty() {
            out += "\nbenchmark covariates\n";
            let header = ["name", "R2_y", "R2_d", "t_max", "verdict"];
            let rows: Vec<Vec<String>> = self
                .benchmarks
                .iter()
                .map(|b| {
                    vec![
                        b.name.clone(),
                        percent(b.r2_y),
                        percent(b.r2_d),
                        tstat_text(b.t_max),
                        b.verdict.clone(),
                    ]
                })
                .collect();
            let widths: Vec<usize> = (0..header.len())
                .map(|i| {
                    rows.iter()
                        .map(|r| r[i].chars().count())
                        .chain([header[i].len()])
                        .max()
                        .unwrap_or(0)
                        + 2
                })
                .collect();
            out += &row(&header.map(String::from), &widths);
            for r in &rows {
                out += &row(r, &widths);
            }
        }
        out
    }

    fn table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let mut header: Vec<String> = ["benchmark", "r2_y", "r2_d", "t_max", "verdict", "n", "dropped_rows"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend(self.summary.header());
        let fit = |mut lead: Vec<String>| {
            lead.extend([self.n.to_string(), self.dropped_rows.to_string()]);
            lead.extend(self.summary.cells());
            lead
        };
        let rows = if self.benchmarks.is_empty() {
            vec![fit(vec![String::new(); 5])]
        } else {
            self.benchmarks
                .iter()
                .map(|b| {
                    fit(vec![
                        b.name.clone(),
                        b.r2_y.to_string(),
                        b.r2_d.to_string(),
                        tstat_raw(b.t_max),
                        b.verdict.clone(),
                    ])
                })
                .collect()
        };
        (header, rows)
    }
}

impl Render for GridSheet {
    fn text(&self) -> String {
        let mut out = format!(
            "adjusted |t| (rows: R2_y, columns: R2_d); critical value {}\n",
            sig(self.critical_value, 6)
        );
        let cell = |x: f64| format!("{x:>9.4}");
        out += &format!("{:>9}", "");
        for d in &self.axis_d {
            out += &format!(" {}", cell(*d));
        }
        out.push('\n');
        for (y, r) in self.axis_y.iter().zip(&self.t_values) {
            out += &cell(*y);
            for v in r {
                out += &format!(" {}", cell(*v));
            }
            out.push('\n');
        }
        out
    }

    /// First row is the R²_d axis, first column the R²_y axis; the corner
    /// cell carries the critical value.
    fn table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let mut header = vec![self.critical_value.to_string()];
        header.extend(self.axis_d.iter().map(|d| d.to_string()));
        let rows = self
            .axis_y
            .iter()
            .zip(&self.t_values)
            .map(|(y, r)| {
                let mut cells = vec![y.to_string()];
                cells.extend(r.iter().map(|v| v.to_string()));
                cells
            })
            .collect();
        (header, rows)
    }
}

#[derive(Debug, Serialize)]
pub struct BoundOut {
    pub t_r: f64,
    pub df: u64,
    pub r2_y: f64,
    pub r2_d: f64,
    /// Closed-form maximum over specifications that add covariates.
    pub t_max: TStat,
    pub regime: Regime,
    pub df_effective: u64,
    /// Bound over every specification, the base model included.
    pub bound: TStat,
    pub strict: bool,
    pub dropped_rows: usize,
}

impl BoundOut {
    pub fn new(b: &PhackBound, strict: bool, dropped_rows: usize) -> Self {
        Self {
            t_r: b.t_r,
            df: b.df,
            r2_y: b.strengths.r2_y,
            r2_d: b.strengths.r2_d,
            t_max: b.t_max.t_max,
            regime: b.t_max.regime,
            df_effective: b.t_max.df_effective,
            bound: b.bound,
            strict,
            dropped_rows,
        }
    }

    fn header() -> Vec<String> {
        [
            "t_r", "df", "r2_y", "r2_d", "t_max", "regime", "df_effective", "bound", "strict",
            "dropped_rows",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.t_r.to_string(),
            self.df.to_string(),
            self.r2_y.to_string(),
            self.r2_d.to_string(),
            tstat_raw(self.t_max),
            regime_name(self.regime).into(),
            self.df_effective.to_string(),
            tstat_raw(self.bound),
            self.strict.to_string(),
            self.dropped_rows.to_string(),
        ]
    }
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Boundary => "boundary",
        Regime::Interior => "interior",
    }
}

impl Render for BoundOut {
    fn text(&self) -> String {
        let mut out = format!(
            "base model: t = {}, df = {} (rows dropped for missing values = {})\n",
            sig(self.t_r, 6),
            self.df,
            self.dropped_rows
        );
        let _ = writeln!(
            out,
            "joint strength of the optional set: R2_y = {}, R2_d = {}",
            percent(self.r2_y),
            percent(self.r2_d)
        );
        let _ = writeln!(
            out,
            "closed-form maximum when adding covariates: {} ({} regime, df {}{})",
            tstat_text(self.t_max),
            regime_name(self.regime),
            self.df_effective,
            if self.strict { ", strict" } else { "" }
        );
        let _ = writeln!(out, "bound on |t| over all specifications: {}", tstat_text(self.bound));
        out
    }

    fn table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        (Self::header(), vec![self.cells()])
    }
}

#[derive(Debug, Serialize)]
pub struct EnumerateOut {
    /// Absent when the full optional set is collinear.
    #[serde(flatten)]
    pub bound: Option<BoundOut>,
    pub exact_max_t: Option<f64>,
    pub argmax_subset: Option<Vec<String>>,
    pub n_significant: Option<u64>,
    pub n_total: Option<u64>,
    pub n_singular: Option<u64>,
    pub notice: Option<String>,
}

impl EnumerateOut {
    pub fn exact(res: &SpecSearchResult, strict: bool, dropped_rows: usize) -> Self {
        Self {
            bound: res.bound.as_ref().map(|b| BoundOut::new(b, strict, dropped_rows)),
            exact_max_t: Some(res.exact_max_t),
            argmax_subset: Some(res.argmax_subset.clone()),
            n_significant: Some(res.n_significant),
            n_total: Some(res.n_total),
            n_singular: Some(res.n_singular),
            notice: res
                .bound
                .is_none()
                .then(|| "the optional set is jointly collinear; no closed-form bound".to_string()),
        }
    }

    pub fn bound_only(bound: BoundOut, notice: String) -> Self {
        Self {
            bound: Some(bound),
            exact_max_t: None,
            argmax_subset: None,
            n_significant: None,
            n_total: None,
            n_singular: None,
            notice: Some(notice),
        }
    }
}

impl Render for EnumerateOut {
    fn text(&self) -> String {
        let mut out = self.bound.as_ref().map_or(String::new(), Render::text);
        if let (Some(max), Some(sub), Some(sig_n), Some(total), Some(sing)) = (
            self.exact_max_t,
            &self.argmax_subset,
            self.n_significant,
            self.n_total,
            self.n_singular,
        ) {
            let subset = if sub.is_empty() {
                "base model only".to_string()
            } else {
                sub.join(", ")
            };
            let _ = writeln!(out, "largest |t| over {total} specifications: {} ({subset})", sig(max, 6));
            let _ = writeln!(out, "significant specifications: {sig_n} of {total}");
            if sing > 0 {
                let _ = writeln!(out, "skipped as rank deficient: {sing}");
            }
        }
        if let Some(n) = &self.notice {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }

    fn table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let mut header = BoundOut::header();
        let mut cells = self
            .bound
            .as_ref()
            .map_or(vec![String::new(); header.len()], BoundOut::cells);
        header.extend(
            ["exact_max_t", "argmax_subset", "n_significant", "n_total", "n_singular", "notice"]
                .iter()
                .map(|s| s.to_string()),
        );
        let count = |x: Option<u64>| x.map_or(String::new(), |v| v.to_string());
        cells.extend([
            opt_raw(self.exact_max_t),
            self.argmax_subset.as_ref().map_or(String::new(), |s| s.join(";")),
            count(self.n_significant),
            count(self.n_total),
            count(self.n_singular),
            self.notice.clone().unwrap_or_default(),
        ]);
        (header, vec![cells])
    }
}
