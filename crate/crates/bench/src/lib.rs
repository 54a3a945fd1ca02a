//! Synthetic inputs shared by the benchmarks.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rvi_core::{Dataset, RestrictedFit, SearchProblem};

/// Restricted fits with `|t|` below 2 and df in `[50, 5000)`.
pub fn fits(count: usize, seed: u64) -> Vec<RestrictedFit> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let t = rng.random_range(-2.0..2.0);
            let df = rng.random_range(50..5000);
            RestrictedFit::from_t(t, df).expect("valid fit")
        })
        .collect()
}

/// A search problem with one base covariate and `p` optional ones.
pub fn search_problem(n: usize, p: usize, seed: u64) -> SearchProblem {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.sample(StandardNormal)).collect() };
    let base = draw(n);
    let opts: Vec<Vec<f64>> = (0..p).map(|_| draw(n)).collect();
    let noise_d = draw(n);
    let noise_y = draw(n);
    let d: Vec<f64> = (0..n)
        .map(|i| noise_d[i] + 0.5 * base[i] + opts.iter().map(|o| 0.2 * o[i]).sum::<f64>())
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| 0.05 * d[i] + base[i] + noise_y[i] + opts.iter().map(|o| 0.1 * o[i]).sum::<f64>())
        .collect();
    let mut names = vec!["y".to_string(), "d".to_string(), "base".to_string()];
    let mut cols = vec![y, d, base];
    for (j, o) in opts.into_iter().enumerate() {
        names.push(format!("x{j}"));
        cols.push(o);
    }
    let optional: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
    let data = Dataset::new(names, cols).expect("consistent columns");
    SearchProblem::new(data, "y", "d", vec!["base".to_string()], optional)
}
