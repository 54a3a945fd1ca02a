//! Householder QR least squares on column-major data.

/// Columns whose residual norm, after projecting out the preceding columns,
/// falls below this fraction of their own norm are treated as collinear.
pub(crate) const RANK_TOL: f64 = 1e-10;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Apply the reflector `I - 2 v vᵀ / (vᵀv)` to `x`. `v` and `x` share offsets.
fn reflect(v: &[f64], vv: f64, x: &mut [f64]) {
    let s = 2.0 * dot(v, x) / vv;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= s * vi;
    }
}

/// Householder vector for `x`: returns `(v, vᵀv, alpha)` with `H x = alpha e₁`,
/// or `None` when `x` is exactly zero.
fn householder(x: &[f64]) -> Option<(Vec<f64>, f64, f64)> {
    let nx = norm(x);
    if nx == 0.0 {
        return None;
    }
    let alpha = if x[0] > 0.0 { -nx } else { nx };
    let mut v = x.to_vec();
    v[0] -= alpha;
    let vv = dot(&v, &v);
    if vv == 0.0 {
        return None;
    }
    Some((v, vv, alpha))
}

/// Outcome of a full-rank least-squares fit.
#[derive(Clone, Debug)]
pub(crate) struct LsFit {
    pub coef: Vec<f64>,
    /// Diagonal of `(XᵀX)⁻¹`.
    pub xtx_inv_diag: Vec<f64>,
    pub rss: f64,
    pub residuals: Vec<f64>,
}

/// Least squares of `y` on `cols`. On rank deficiency returns the indices of
/// every column found collinear with the columns before it.
pub(crate) fn least_squares(cols: &[&[f64]], y: &[f64]) -> Result<LsFit, Vec<usize>> {
    let n = y.len();
    let k = cols.len();
    let mut work: Vec<Vec<f64>> = cols.iter().map(|c| c.to_vec()).collect();
    let mut qty = y.to_vec();
    let mut r = vec![vec![0.0; k]; k]; // r[row][col]
    let mut collinear = Vec::new();
    let mut row = 0;

    for j in 0..k {
        let scale = norm(cols[j]);
        if row >= n {
            collinear.push(j);
            continue;
        }
        let resid = norm(&work[j][row..]);
        if scale == 0.0 || resid < RANK_TOL * scale {
            collinear.push(j);
            continue;
        }
        let Some((v, vv, alpha)) = householder(&work[j][row..]) else {
            collinear.push(j);
            continue;
        };
        for c in work.iter_mut().skip(j + 1) {
            reflect(&v, vv, &mut c[row..]);
        }
        reflect(&v, vv, &mut qty[row..]);
        work[j][row] = alpha;
        for jj in j..k {
            r[row][jj] = work[jj][row];
        }
        row += 1;
    }
    if !collinear.is_empty() {
        return Err(collinear);
    }

    // Back substitution for β, and R⁻¹ for the covariance diagonal.
    let mut coef = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = qty[i];
        for j in i + 1..k {
            s -= r[i][j] * coef[j];
        }
        coef[i] = s / r[i][i];
    }
    let mut rinv = vec![vec![0.0; k]; k];
    for j in 0..k {
        rinv[j][j] = 1.0 / r[j][j];
        for i in (0..j).rev() {
            let mut s = 0.0;
            for l in i + 1..=j {
                s += r[i][l] * rinv[l][j];
            }
            rinv[i][j] = -s / r[i][i];
        }
    }
    let xtx_inv_diag = (0..k)
        .map(|i| rinv[i][i..].iter().map(|v| v * v).sum())
        .collect();

    let rss = qty[k..].iter().map(|v| v * v).sum();
    let mut residuals = y.to_vec();
    for (c, b) in cols.iter().zip(&coef) {
        for (e, x) in residuals.iter_mut().zip(c.iter()) {
            *e -= b * x;
        }
    }
    Ok(LsFit {
        coef,
        xtx_inv_diag,
        rss,
        residuals,
    })
}

/// The `m × m` upper-triangular factor `R` of an `n × m` matrix, with no
/// rank checks. Returned column-major: `r[col][row]`.
pub(crate) fn r_factor(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = cols.len();
    let n = cols.first().map_or(0, Vec::len);
    let mut work = cols.to_vec();
    let rows = m.min(n);
    for j in 0..rows {
        if let Some((v, vv, alpha)) = householder(&work[j][j..]) {
            for c in work.iter_mut().skip(j + 1) {
                reflect(&v, vv, &mut c[j..]);
            }
            work[j][j] = alpha;
            for x in work[j][j + 1..].iter_mut() {
                *x = 0.0;
            }
        }
    }
    work.into_iter()
        .map(|mut c| {
            c.truncate(m);
            c.resize(m, 0.0);
            c
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let ones = [1.0; 3];
        let x = [0.0, 1.0, 2.0];
        let y = [2.0, 5.0, 8.0];
        let fit = least_squares(&[&ones, &x], &y).unwrap();
        assert!((fit.coef[0] - 2.0).abs() < 1e-12);
        assert!((fit.coef[1] - 3.0).abs() < 1e-12);
        assert!(fit.rss < 1e-24);
    }

    #[test]
    fn reports_all_collinear_columns() {
        let ones = [1.0; 4];
        let x = [1.0, 2.0, 3.0, 5.0];
        let twice = [2.0, 4.0, 6.0, 10.0];
        let shifted = [2.0, 3.0, 4.0, 6.0];
        let zero = [0.0; 4];
        let y = [1.0, 0.0, 2.0, 1.0];
        let err = least_squares(&[&ones, &x, &twice, &zero, &shifted], &y).unwrap_err();
        assert_eq!(err, vec![2, 3, 4]);
    }

    #[test]
    fn r_factor_preserves_gram() {
        let cols = vec![
            vec![1.0, 2.0, 0.5, -1.0, 3.0],
            vec![0.0, 1.0, 4.0, 2.0, -2.0],
            vec![1.0, 1.0, 1.0, 1.0, 1.0],
        ];
        let r = r_factor(&cols);
        for a in 0..3 {
            for b in 0..3 {
                let g = dot(&cols[a], &cols[b]);
                let h = dot(&r[a], &r[b]);
                assert!((g - h).abs() < 1e-12 * g.abs().max(1.0));
            }
            assert!(r[a][a + 1..].iter().all(|&v| v == 0.0));
        }
    }
}
