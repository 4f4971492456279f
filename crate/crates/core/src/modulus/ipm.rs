//! Primal-dual interior-point solver for the covering program
//!
//! ```text
//! minimize  sum_i x_i^p   subject to  sum_{i in row_j} x_i >= 1,  x >= 0
//! ```
//!
//! with `p >= 1`. Each Newton step solves the reduced normal equations
//! `(H + Z/X + A^T (Y/S) A) dx = rhs` by Cholesky.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpmOptions {
    /// Bound on every complementarity product at exit.
    pub tol: f64,
    /// Bound on the dual residual, scaled by the gradient magnitude. This
    /// floors near 1e-10 from roundoff, so it is kept separate from `tol`.
    pub dual_tol: f64,
    pub max_iter: usize,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self { tol: 1e-11, dual_tol: 1e-9, max_iter: 500 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpmOutcome {
    /// Primal solution over all `n` variables (zero for unused ones).
    pub x: Vec<f64>,
    /// Multipliers of the rows.
    pub y: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Solve the covering program. Rows must be nonempty; variables that appear
/// in no row are fixed at zero.
pub fn solve_covering(n: usize, rows: &[Vec<usize>], p: f64, opts: IpmOptions) -> IpmOutcome {
    assert!(p >= 1.0, "covering solver needs p >= 1");
    let m = rows.len();
    let mut col = vec![usize::MAX; n];
    let mut vars = Vec::new();
    for row in rows {
        assert!(!row.is_empty(), "empty covering row");
        for &i in row {
            if col[i] == usize::MAX {
                col[i] = vars.len();
                vars.push(i);
            }
        }
    }
    if m == 0 {
        return IpmOutcome { x: vec![0.0; n], y: Vec::new(), iterations: 0, residual: 0.0, converged: true };
    }
    let nv = vars.len();
    let a: Vec<Vec<usize>> = rows.iter().map(|r| r.iter().map(|&i| col[i]).collect()).collect();
    let min_len = a.iter().map(|r| r.len()).min().unwrap() as f64;
    let mut rows_of = vec![Vec::new(); nv];
    for (j, r) in a.iter().enumerate() {
        for &i in r {
            rows_of[i].push(j);
        }
    }

    let mut x = vec![2.0 / min_len; nv];
    let mut y = vec![1.0; m];
    let mut z = vec![1.0; nv];
    let ax = |x: &[f64]| -> Vec<f64> { a.iter().map(|r| r.iter().map(|&i| x[i]).sum()).collect() };
    let mut s: Vec<f64> = ax(&x).iter().map(|v| v - 1.0).collect();

    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut sigma_center = 0.1;
    while iterations < opts.max_iter {
        let g: Vec<f64> = x.iter().map(|&v| p * v.powf(p - 1.0)).collect();
        let h: Vec<f64> = x.iter().map(|&v| if p == 1.0 { 0.0 } else { p * (p - 1.0) * v.powf(p - 2.0) }).collect();
        let mut aty = vec![0.0; nv];
        for (j, r) in a.iter().enumerate() {
            for &i in r {
                aty[i] += y[j];
            }
        }
        let rd: Vec<f64> = (0..nv).map(|i| g[i] - aty[i] - z[i]).collect();
        let gmax = g.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let rd_norm = rd.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) / (1.0 + gmax);
        let comp_max = x
            .iter()
            .zip(&z)
            .map(|(a, b)| a * b)
            .chain(s.iter().zip(&y).map(|(a, b)| a * b))
            .fold(0.0f64, f64::max);
        residual = rd_norm.max(comp_max);
        if rd_norm <= opts.dual_tol && comp_max <= opts.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mu = (x.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>()
            + s.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>())
            / (nv + m) as f64;
        let mu_t = sigma_center * mu;

        let d: Vec<f64> = (0..nv).map(|i| h[i] + z[i] / x[i]).collect();
        let mut rhs = DVector::<f64>::zeros(nv);
        for i in 0..nv {
            rhs[i] = -rd[i] + (mu_t - x[i] * z[i]) / x[i];
        }
        let w: Vec<f64> = (0..m).map(|j| y[j] / s[j]).collect();
        // with p = 1 the diagonal can vanish on active variables, so D^-1 is unusable
        let dx = if m < nv && p > 1.0 {
            // row terms enter as W^-1 c, which stays bounded as the slacks close
            let wc: Vec<f64> = (0..m).map(|j| (mu_t - s[j] * y[j]) / y[j]).collect();
            newton_by_rows(&a, &rows_of, &d, &w, rhs, &wc)
        } else {
            for (j, r) in a.iter().enumerate() {
                let cj = (mu_t - s[j] * y[j]) / s[j];
                for &i in r {
                    rhs[i] += cj;
                }
            }
            newton_by_vars(&a, &d, &w, rhs)
        };
        let ds = ax(dx.as_slice());
        let dy: Vec<f64> = (0..m).map(|j| (mu_t - s[j] * y[j] - y[j] * ds[j]) / s[j]).collect();
        let dz: Vec<f64> = (0..nv).map(|i| (mu_t - x[i] * z[i] - z[i] * dx[i]) / x[i]).collect();
        if !dx.iter().chain(&dy).chain(&dz).all(|v| v.is_finite()) {
            // numerical breakdown: keep the current (feasible) iterate
            break;
        }

        let mut step = 1.0f64;
        let mut limit = |v: &[f64], dv: &[f64]| {
            for (a, b) in v.iter().zip(dv) {
                if *b < 0.0 {
                    step = step.min(-0.995 * a / b);
                }
            }
        };
        limit(&x, dx.as_slice());
        limit(&s, &ds);
        limit(&y, &dy);
        limit(&z, &dz);
        for i in 0..nv {
            x[i] = (x[i] + step * dx[i]).max(f64::MIN_POSITIVE);
            z[i] = (z[i] + step * dz[i]).max(f64::MIN_POSITIVE);
        }
        for j in 0..m {
            y[j] = (y[j] + step * dy[j]).max(f64::MIN_POSITIVE);
        }
        // recompute the slack from x so primal feasibility never drifts
        s = ax(&x).iter().map(|v| v - 1.0).collect();
        for (j, sj) in s.iter_mut().enumerate() {
            if *sj <= 0.0 {
                *sj = (ds[j] * step).abs().max(f64::MIN_POSITIVE);
            }
        }
        sigma_center = if step > 0.9 { 0.05 } else if step > 0.5 { 0.1 } else { 0.3 };
    }
    let mut full = vec![0.0; n];
    for (c, &i) in vars.iter().enumerate() {
        full[i] = x[c];
    }
    IpmOutcome { x: full, y, iterations, residual, converged }
}

/// Newton direction from `(D + A^T W A) dx = rhs` assembled over variables.
fn newton_by_vars(a: &[Vec<usize>], d: &[f64], w: &[f64], rhs: DVector<f64>) -> DVector<f64> {
    let nv = d.len();
    let mut mat = DMatrix::<f64>::from_diagonal(&DVector::from_column_slice(d));
    for (j, r) in a.iter().enumerate() {
        for &i in r {
            for &k in r {
                mat[(i, k)] += w[j];
            }
        }
    }
    debug_assert_eq!(mat.nrows(), nv);
    solve_spd(mat, rhs)
}

/// Same Newton step through the m x m system (W^-1 + A D^-1 A^T) v = A D^-1 r - W^-1 c,
/// then dx = D^-1 (r - A^T v). Cheaper when there are fewer rows than variables.
fn newton_by_rows(
    a: &[Vec<usize>],
    rows_of: &[Vec<usize>],
    d: &[f64],
    w: &[f64],
    rhs: DVector<f64>,
    wc: &[f64],
) -> DVector<f64> {
    let m = a.len();
    let mut mat = DMatrix::<f64>::from_diagonal(&DVector::from_iterator(m, w.iter().map(|v| 1.0 / v)));
    for (i, rows) in rows_of.iter().enumerate() {
        let inv = 1.0 / d[i];
        for &j in rows {
            for &k in rows {
                mat[(j, k)] += inv;
            }
        }
    }
    let b = DVector::from_iterator(
        m,
        a.iter().zip(wc).map(|(r, c)| r.iter().map(|&i| rhs[i] / d[i]).sum::<f64>() - c),
    );
    let v = solve_spd(mat, b);
    let mut dx = rhs;
    for (j, r) in a.iter().enumerate() {
        for &i in r {
            dx[i] -= v[j];
        }
    }
    for (i, x) in dx.iter_mut().enumerate() {
        *x /= d[i];
    }
    dx
}

fn solve_spd(mat: DMatrix<f64>, rhs: DVector<f64>) -> DVector<f64> {
    let scale = (0..mat.nrows()).map(|i| mat[(i, i)].abs()).fold(0.0f64, f64::max).max(1.0);
    let mut reg = 0.0;
    loop {
        let mut m = mat.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += reg;
        }
        if let Some(ch) = m.cholesky() {
            return ch.solve(&rhs);
        }
        reg = if reg == 0.0 { scale * 1e-14 } else { reg * 100.0 };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row() {
        for &(m, p) in &[(3usize, 2.0f64), (4, 3.0), (5, 1.5)] {
            let out = solve_covering(m, &[(0..m).collect()], p, IpmOptions::default());
            assert!(out.converged);
            let v: f64 = out.x.iter().map(|x| x.powf(p)).sum();
            assert!((v - (m as f64).powf(1.0 - p)).abs() < 1e-10, "{m} {p} {v}");
        }
    }

    #[test]
    fn linear_case() {
        let out = solve_covering(3, &[vec![0, 1, 2]], 1.0, IpmOptions::default());
        let v: f64 = out.x.iter().sum();
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unused_variables_are_zero() {
        let out = solve_covering(4, &[vec![1, 2]], 2.0, IpmOptions::default());
        assert_eq!(out.x[0], 0.0);
        assert_eq!(out.x[3], 0.0);
    }
}
