//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rvi_core::robustness::{self, q95_r2d, report, rvi, t_max, xrvi, xrvi0, xrvi1};
use rvi_core::specsearch::{self, subset_fits, BoundMode};
use rvi_core::{
    adjust, dist, ols, ovb, Dataset, ModelSpec, Regime, RestrictedFit, SearchConfig,
    SearchProblem, StrengthBounds,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure(
        (got - want).abs() <= tol,
        format!("{name} = {got:.6}, expected {want} ± {tol}"),
    )
}

fn pct(x: f64) -> f64 {
    100.0 * x
}

fn c1_vote_by_mail_summary() -> Outcome {
    let fit = RestrictedFit::new(0.103, 0.873, 4307, 0.0).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let rep = report(&fit, 0.05, &[]).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    within("t", rep.t, 0.118, 0.001)?;
    within("XRVI1 (%)", pct(rep.xrvi1), 0.089, 0.005)?;
    within("RVI (%)", pct(rep.rvi), 2.77, 0.05)?;
    within("XRVI0 (%)", pct(rep.xrvi0.value().unwrap_or(f64::NAN)), 99.6, 0.1)?;
    ensure(elapsed < Duration::from_millis(1), format!("took {elapsed:?}"))?;
    Ok(format!(
        "t={:.4} XRVI1={:.4}% RVI={:.3}% XRVI0={:.2}% in {elapsed:?}",
        rep.t,
        pct(rep.xrvi1),
        pct(rep.rvi),
        pct(rep.xrvi0.value().unwrap())
    ))
}

fn c2_worked_examples() -> Outcome {
    let e = |r: rvi_core::Result<f64>| r.map_err(|e| e.to_string());
    let fit = RestrictedFit::from_t(1.0, 100).map_err(|e| e.to_string())?;
    let x0 = xrvi0(&fit, 0.05).map_err(|e| e.to_string())?.value().unwrap_or(f64::NAN);
    let x1 = e(xrvi1(&fit, 0.05))?;
    let r = e(rvi(&fit, 0.05))?;
    within("XRVI0 (%)", pct(x0), 75.0, 1.0)?;
    within("XRVI1 (%)", pct(x1), 2.9, 0.2)?;
    within("RVI (%)", pct(r), 9.5, 0.5)?;

    let fit1000 = RestrictedFit::from_t(1.0, 1000).map_err(|e| e.to_string())?;
    let x1k = e(xrvi1(&fit1000, 0.05))?;
    let r1k = e(rvi(&fit1000, 0.05))?;
    within("XRVI1 df=1000 (%)", pct(x1k), 0.29, 0.03)?;
    within("RVI df=1000 (%)", pct(r1k), 3.0, 0.3)?;

    let sol = t_max(&fit, &StrengthBounds::new(x1, 1.0).unwrap(), 1).map_err(|e| e.to_string())?;
    let sef = e(ovb::se_factor(&sol.optimizer))?;
    let inflation = 1.0 + e(ovb::bias_factor(&sol.optimizer))? * (fit.df() as f64).sqrt();
    within("SEF", sef, 1.94, 0.01)?;
    within("1+BF*sqrt(df)", inflation, 3.88, 0.05)?;
    Ok(format!(
        "df=100: {:.2}%/{:.2}%/{:.2}%, df=1000: {:.3}%/{:.2}%, SEF={sef:.4}, inflation={inflation:.4}",
        pct(x1),
        pct(r),
        pct(x0),
        pct(x1k),
        pct(r1k)
    ))
}

fn c3_phack_example() -> Outcome {
    let fit = RestrictedFit::from_t(1.0, 100).unwrap();
    let sol = t_max(&fit, &StrengthBounds::new(0.08, 0.08).unwrap(), 1).map_err(|e| e.to_string())?;
    within("t_max", sol.t_max.value(), 1.83, 0.01)?;
    ensure(sol.regime == Regime::Boundary, format!("regime {:?}", sol.regime))?;
    Ok(format!("t_max={:.4}, regime=boundary", sol.t_max.value()))
}

fn c4_q95_grid() -> Outcome {
    let df = 100_000;
    let cap = q95_r2d(df).map_err(|e| e.to_string())?;
    let ts = [0.25, 0.50, 0.75, 1.00, 1.25, 1.50, 1.75];
    let q95_row = [0.41, 0.32, 0.24, 0.16, 0.10, 0.05, 0.01];
    let x0_row = [0.98, 0.93, 0.85, 0.74, 0.59, 0.41, 0.20];
    let mut got_q = Vec::new();
    let mut got_0 = Vec::new();
    for ((&t, &wq), &w0) in ts.iter().zip(&q95_row).zip(&x0_row) {
        let fit = RestrictedFit::from_t(t, df).unwrap();
        let q = xrvi(&fit, 0.05, cap).map_err(|e| e.to_string())?.value().unwrap_or(f64::NAN);
        let z = xrvi0(&fit, 0.05).map_err(|e| e.to_string())?.value().unwrap_or(f64::NAN);
        within(&format!("XRVI^q95 at t={t}"), q, wq, 0.01)?;
        within(&format!("XRVI0 at t={t}"), z, w0, 0.01)?;
        got_q.push(format!("{q:.3}"));
        got_0.push(format!("{z:.3}"));
    }
    Ok(format!(
        "q95 cap={cap:.3e}; XRVI^q95 [{}]; XRVI0 [{}]",
        got_q.join(", "),
        got_0.join(", ")
    ))
}

fn c5_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5eed_0005);
    let mut worst = 0.0f64;
    let trials = 1000;
    for _ in 0..trials {
        let n = rng.random_range(30..=500);
        let p = rng.random_range(0..=10);
        let data = common::synthetic(&mut rng, n, p);
        let y = data.column("y").unwrap().to_vec();
        let d = data.column("d").unwrap().to_vec();
        let a = rng.random_range(-1.0..1.0);
        let b = rng.random_range(-1.0..1.0);
        let noise = common::normals(&mut rng, n);
        let z: Vec<f64> = (0..n).map(|i| a * y[i] + b * d[i] + noise[i]).collect();
        let data = common::with_column(&data, "z", z);
        let covs = common::x_names(p);

        let spec = ModelSpec::new("y", "d", covs.clone());
        let fit = ols::restricted_fit(&data, &spec, 0.0).map_err(|e| e.to_string())?;
        let s = ols::observed_strength(&data, &spec, "z").map_err(|e| e.to_string())?;
        let adj = adjust(&fit, &s).map_err(|e| e.to_string())?;

        let mut long_covs = covs;
        long_covs.push("z".into());
        let long = ols::fit(&data, &ModelSpec::new("y", "d", long_covs)).map_err(|e| e.to_string())?;
        let change = (long.coefficient("d").unwrap() - fit.estimate()).abs();
        let predicted = adj.estimate_upper - fit.estimate();
        let rel_b = (change - predicted).abs() / predicted.abs();
        let se_long = long.std_error("d").unwrap();
        let rel_s = (se_long - adj.std_error).abs() / se_long;
        worst = worst.max(rel_b).max(rel_s);
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-8, format!("worst relative error {worst:.3e}"))?;
    ensure(elapsed < Duration::from_secs(30), format!("took {elapsed:?}"))?;
    Ok(format!(
        "{trials} datasets, worst relative error {worst:.2e}, {:.2}s",
        elapsed.as_secs_f64()
    ))
}

fn c6_grid_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed_0006);
    let mut worst_slack = 0.0f64;
    let instances = 200;
    for _ in 0..instances {
        let df = rng.random_range(5..20_000);
        let t = rng.random_range(-3.0..3.0);
        let ry = rng.random_range(0.0..0.95);
        let rd = rng.random_range(0.0..0.98);
        let fit = RestrictedFit::from_t(t, df).unwrap();
        let closed = t_max(&fit, &StrengthBounds::new(ry, rd).unwrap(), 1)
            .map_err(|e| e.to_string())?
            .t_max
            .value();
        let brute = common::grid_max(t, df, ry, rd, 2001);
        ensure(
            closed >= brute * (1.0 - 1e-12),
            format!("closed form {closed} below grid {brute} (t={t}, df={df}, bounds {ry}, {rd})"),
        )?;
        let slack = (closed - brute) / brute;
        ensure(
            slack < 1e-3,
            format!("slack {slack:.3e} (t={t}, df={df}, bounds {ry}, {rd})"),
        )?;
        worst_slack = worst_slack.max(slack);
    }
    Ok(format!(
        "{instances} instances on a 2001x2001 grid, max relative slack {worst_slack:.2e}"
    ))
}

fn c7_thresholds() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed_0007);
    let mut checked = 0;
    let mut worst_hit = 0.0f64;
    for _ in 0..500 {
        let df: u64 = 10f64.powf(rng.random_range(0.5..5.0)) as u64 + 3;
        let alpha = [0.01, 0.05, 0.10][rng.random_range(0..3)];
        let fit0 = RestrictedFit::from_t(1.0, df).unwrap();
        let t_star = robustness::critical_value(&fit0, alpha).unwrap();
        // |t| below the level where the base model is already significant
        let t = rng.random_range(0.0..0.999) * t_star * (df as f64 / (df - 1) as f64).sqrt();
        let fit = RestrictedFit::from_t(t, df).unwrap();
        let err = |e: rvi_core::Error| e.to_string();
        let v1 = xrvi1(&fit, alpha).map_err(err)?;
        let vr = rvi(&fit, alpha).map_err(err)?;
        let v0 = xrvi0(&fit, alpha).map_err(err)?.value();

        let mut cases = vec![("XRVI1", v1, 1.0), ("RVI", vr, vr)];
        if let Some(v) = v0 {
            cases.push(("XRVI0", v, 0.0));
            ensure(v1 <= vr && vr <= v, format!("ordering {v1} {vr} {v} (t={t}, df={df})"))?;
        } else {
            ensure(v1 <= vr, format!("ordering {v1} {vr} (t={t}, df={df})"))?;
        }
        for (name, v, rd) in cases {
            let rd = if name == "RVI" { v } else { rd };
            let at = t_max(&fit, &StrengthBounds::new(v, rd).unwrap(), 1).map_err(err)?;
            let hit = (at.t_max.value() - t_star).abs() / t_star;
            ensure(hit <= 1e-6, format!("{name}: t_max {} vs t* {t_star} (t={t}, df={df})", at.t_max))?;
            worst_hit = worst_hit.max(hit);
            let below = (v - 1e-4).max(0.0);
            let rd_below = if name == "RVI" { below } else { rd };
            let miss = t_max(&fit, &StrengthBounds::new(below, rd_below).unwrap(), 1).map_err(err)?;
            ensure(
                miss.t_max.value() < t_star,
                format!("{name}: still significant at value - 1e-4 (t={t}, df={df})"),
            )?;
        }
        let fixed = xrvi(&fit, alpha, vr).map_err(err)?.value().unwrap_or(f64::NAN);
        ensure(
            (fixed - vr).abs() <= 1e-8,
            format!("XRVI at cap RVI = {fixed}, RVI = {vr} (t={t}, df={df})"),
        )?;
        checked += 1;
    }
    Ok(format!("{checked} fits, worst threshold miss {worst_hit:.2e} relative"))
}

fn c8_dominance() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed_0008);
    // Hardware parallelism, but never fewer than 4 so the split is exercised.
    let max_threads = std::thread::available_parallelism().map_or(4, |n| n.get().max(4));
    let problems = 60;
    let mut subsets = 0usize;
    for k in 0..problems {
        let n = rng.random_range(40..300);
        let p = rng.random_range(0..=10);
        let data = common::synthetic(&mut rng, n, p);
        let mut prob = SearchProblem::new(data, "y", "d", ["b"], common::x_names(p));
        prob.null_value = if k % 3 == 0 { rng.random_range(-0.2..0.2) } else { 0.0 };
        let cfg = |t| SearchConfig {
            threads: Some(t),
            ..SearchConfig::default()
        };
        let bound = specsearch::phack_bound(&prob, BoundMode::SingleColumn).map_err(|e| e.to_string())?;
        let fits = subset_fits(&prob, &cfg(1)).map_err(|e| e.to_string())?;
        for f in &fits {
            let t = f.t.ok_or("unexpected singular subset")?.abs();
            ensure(
                t <= bound.bound.value() * (1.0 + 1e-12),
                format!("problem {k}: subset {:b} has |t|={t} above bound {}", f.mask, bound.bound),
            )?;
            subsets += 1;
        }
        let runs: Vec<_> = [1, 2, max_threads]
            .into_iter()
            .map(|t| rvi_core::enumerate(&prob, &cfg(t)))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        ensure(
            runs.windows(2).all(|w| w[0] == w[1]),
            format!("problem {k}: results differ across worker counts"),
        )?;
    }

    let data: Dataset = common::suppressor(&mut rng, 200, 4);
    let opt = ["w0", "w1", "z", "w2", "w3"];
    let prob = SearchProblem::new(data, "y", "d", Vec::<String>::new(), opt);
    let res = rvi_core::enumerate(&prob, &SearchConfig::default()).map_err(|e| e.to_string())?;
    let bound = res.bound.as_ref().ok_or("bound missing")?;
    let base_crit = dist::t_critical(0.05, bound.df).unwrap();
    ensure(
        bound.t_r.abs() <= base_crit,
        format!("base model already significant (t={})", bound.t_r),
    )?;
    ensure(res.n_significant >= 1, "no significant specification found")?;
    ensure(
        res.argmax_subset.iter().any(|c| c == "z"),
        format!("argmax {:?} lacks the suppressor", res.argmax_subset),
    )?;
    ensure(res.exact_max_t > base_crit, "maximum below the critical value")?;
    ensure(res.exact_max_t <= bound.bound.value(), "suppressor instance exceeds bound")?;
    Ok(format!(
        "{problems} problems, {subsets} subsets within bound, identical for 1/2/{max_threads} workers; \
         suppressor: base t={:.3}, max |t|={:.3} with {:?}, {} of {} significant",
        bound.t_r, res.exact_max_t, res.argmax_subset, res.n_significant, res.n_total
    ))
}

fn c9_quantiles() -> Outcome {
    let t99 = dist::t_critical(0.05, 99).map_err(|e| e.to_string())?;
    let t4306 = dist::t_critical(0.05, 4306).map_err(|e| e.to_string())?;
    let chi = dist::chi2_critical_1df(0.95).map_err(|e| e.to_string())?;
    within("t*(0.05, 99)", t99, 1.98422, 1e-4)?;
    within("t*(0.05, 4306)", t4306, 1.9605, 1e-3)?;
    within("chi2_1(0.95)", chi, 3.84146, 1e-4)?;
    let o99 = common::t_critical(0.05, 99);
    let o4306 = common::t_critical(0.05, 4306);
    let ochi = common::chi2_1df_quantile(0.95);
    within("oracle gap t*(0.05, 99)", t99, o99, 1e-9)?;
    within("oracle gap t*(0.05, 4306)", t4306, o4306, 1e-9)?;
    within("oracle gap chi2_1(0.95)", chi, ochi, 1e-9)?;
    Ok(format!(
        "t*(99)={t99:.6} (oracle {o99:.6}), t*(4306)={t4306:.6} (oracle {o4306:.6}), \
         chi2={chi:.6} (oracle {ochi:.6})"
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("robustness values from summary statistics (est 0.103, se 0.873, df 4307)", c1_vote_by_mail_summary),
        ("worked robustness-value examples", c2_worked_examples),
        ("p-hacking bound example", c3_phack_example),
        ("q95-capped and orthogonal values at df=100000", c4_q95_grid),
        ("adjustment formula vs long regression", c5_exactness),
        ("t_max vs 2001x2001 grid", c6_grid_oracle),
        ("robustness-value thresholds and minimality", c7_thresholds),
        ("specification-search dominance and determinism", c8_dominance),
        ("quantile kernel", c9_quantiles),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
