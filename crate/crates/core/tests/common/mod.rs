//! Reference implementations that share no code with the library.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rvi_core::Dataset;

/// `P(|T| <= t)` for integer `df`, from the finite trigonometric series.
pub fn t_central_mass(t: f64, df: u64) -> f64 {
    let theta = (t / (df as f64).sqrt()).atan();
    let (s, c) = theta.sin_cos();
    let c2 = c * c;
    if df % 2 == 1 {
        if df == 1 {
            return 2.0 * theta / std::f64::consts::PI;
        }
        // cos θ (1 + 2/3 cos²θ + 2·4/(3·5) cos⁴θ + ...), up to cos^{df-2}θ
        let mut term = c;
        let mut sum = c;
        let mut k = 1u64;
        while 2 * k < df - 2 {
            term *= c2 * (2 * k) as f64 / (2 * k + 1) as f64;
            sum += term;
            k += 1;
        }
        2.0 / std::f64::consts::PI * (theta + s * sum)
    } else {
        // 1 + 1/2 cos²θ + 1·3/(2·4) cos⁴θ + ..., up to cos^{df-2}θ
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1u64;
        while 2 * k <= df - 2 {
            term *= c2 * (2 * k - 1) as f64 / (2 * k) as f64;
            sum += term;
            k += 1;
        }
        s * sum
    }
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    // f increasing, f(lo) < 0 < f(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Two-sided critical value by bisection on the series above.
pub fn t_critical(alpha: f64, df: u64) -> f64 {
    let mut hi = 2.0;
    while t_central_mass(hi, df) < 1.0 - alpha {
        hi *= 2.0;
    }
    bisect(0.0, hi, |t| t_central_mass(t, df) - (1.0 - alpha))
}

/// Maclaurin series for erf, adequate for |x| < 3.
pub fn erf(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    for n in 1..200 {
        term *= -x2 / n as f64;
        let add = term / (2 * n + 1) as f64;
        sum += add;
        if add.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

/// Upper-`p` point of χ²₁, since `P(χ²₁ <= x) = erf(√(x/2))`.
pub fn chi2_1df_quantile(p: f64) -> f64 {
    bisect(0.0, 20.0, |x| erf((x / 2.0).sqrt()) - p)
}

/// Coefficients and `(XᵀX)⁻¹` diagonal from the normal equations, solved by
/// Gauss–Jordan elimination with partial pivoting.
pub fn normal_equations(cols: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = cols.len();
    let mut a = vec![vec![0.0; 2 * k + 1]; k];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = cols[i].iter().zip(&cols[j]).map(|(u, v)| u * v).sum();
        }
        a[i][k + i] = 1.0;
        a[i][2 * k] = cols[i].iter().zip(y).map(|(u, v)| u * v).sum();
    }
    for c in 0..k {
        let piv = (c..k)
            .max_by(|&r, &s| a[r][c].abs().total_cmp(&a[s][c].abs()))
            .unwrap();
        a.swap(c, piv);
        let d = a[c][c];
        for v in a[c].iter_mut() {
            *v /= d;
        }
        for r in 0..k {
            if r != c {
                let f = a[r][c];
                let row_c = a[c].clone();
                for (v, w) in a[r].iter_mut().zip(&row_c) {
                    *v -= f * w;
                }
            }
        }
    }
    let coef = (0..k).map(|i| a[i][2 * k]).collect();
    let diag = (0..k).map(|i| a[i][k + i]).collect();
    (coef, diag)
}

/// Adversarial `|t|` straight from the bias and standard-error factors.
pub fn adjusted_abs_t(t_r: f64, df: u64, r2_y: f64, r2_d: f64) -> f64 {
    let df = df as f64;
    let bf = (r2_y * r2_d / (1.0 - r2_d)).sqrt();
    let sef = ((1.0 - r2_y) / (1.0 - r2_d)).sqrt();
    // unit standard error
    let shift = bf * df.sqrt();
    let se = sef * (df / (df - 1.0)).sqrt();
    (t_r.abs() + shift) / se
}

/// Brute-force maximum of [`adjusted_abs_t`] on an `n × n` grid.
pub fn grid_max(t_r: f64, df: u64, r2_y_max: f64, r2_d_max: f64, n: usize) -> f64 {
    let step = |hi: f64, i: usize| hi * i as f64 / (n - 1) as f64;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let ry = step(r2_y_max, i);
            (0..n)
                .map(|j| adjusted_abs_t(t_r, df, ry, step(r2_d_max, j)))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

pub fn normals(rng: &mut StdRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// `y`, `d`, optional base column `b`, and `p` covariates `x0..`, with the
/// treatment and outcome both loading on every covariate.
pub fn synthetic(rng: &mut StdRng, n: usize, p: usize) -> Dataset {
    let b = normals(rng, n);
    let xs: Vec<Vec<f64>> = (0..p).map(|_| normals(rng, n)).collect();
    let gd: Vec<f64> = (0..p).map(|_| rng.random_range(-0.6..0.6)).collect();
    let gy: Vec<f64> = (0..p).map(|_| rng.random_range(-0.6..0.6)).collect();
    let effect = rng.random_range(-0.15..0.15);
    let ed = normals(rng, n);
    let ey = normals(rng, n);
    let d: Vec<f64> = (0..n)
        .map(|i| ed[i] + 0.4 * b[i] + (0..p).map(|j| gd[j] * xs[j][i]).sum::<f64>())
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            1.0 + effect * d[i] - 0.3 * b[i]
                + ey[i]
                + (0..p).map(|j| gy[j] * xs[j][i]).sum::<f64>()
        })
        .collect();
    let mut names = vec!["y".to_string(), "d".to_string(), "b".to_string()];
    let mut cols = vec![y, d, b];
    for (j, x) in xs.into_iter().enumerate() {
        names.push(format!("x{j}"));
        cols.push(x);
    }
    Dataset::new(names, cols).unwrap()
}

pub fn x_names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

/// Copy of `data` with one more column.
pub fn with_column(data: &Dataset, name: &str, col: Vec<f64>) -> Dataset {
    let mut names = data.names().to_vec();
    let mut cols: Vec<Vec<f64>> = names
        .iter()
        .map(|n| data.column(n).unwrap().to_vec())
        .collect();
    names.push(name.to_string());
    cols.push(col);
    Dataset::new(names, cols).unwrap()
}

/// Outcome and treatment driven by a confounder `z` so that dropping `z`
/// masks a real effect: the base model's estimate is exactly zero.
pub fn suppressor(rng: &mut StdRng, n: usize, noise_covariates: usize) -> Dataset {
    let z = normals(rng, n);
    let u = normals(rng, n);
    let e = normals(rng, n);
    let d: Vec<f64> = z.iter().zip(&u).map(|(z, u)| z + u).collect();
    let y: Vec<f64> = (0..n).map(|i| 0.3 * d[i] - 0.6 * z[i] + e[i]).collect();
    // Remove the base-model slope so the treatment looks null without z.
    let dm = d.iter().sum::<f64>() / n as f64;
    let ym = y.iter().sum::<f64>() / n as f64;
    let sxy: f64 = (0..n).map(|i| (d[i] - dm) * (y[i] - ym)).sum();
    let sxx: f64 = d.iter().map(|v| (v - dm) * (v - dm)).sum();
    let slope = sxy / sxx;
    let y: Vec<f64> = y.iter().zip(&d).map(|(y, d)| y - slope * d).collect();
    let mut names = vec!["y".to_string(), "d".to_string(), "z".to_string()];
    let mut cols = vec![y, d, z];
    for j in 0..noise_covariates {
        names.push(format!("w{j}"));
        cols.push(normals(rng, n));
    }
    Dataset::new(names, cols).unwrap()
}
