//! Small dense nonnegative least squares, Lawson-Hanson active-set style.
//!
//! Solves `min ||A x - b||^2 subject to x >= 0`. The passive-set least
//! squares solve goes through an SVD pseudo-inverse so that linearly
//! dependent columns (common when the columns are map values `F(y_i)` at
//! clustered points) do not break the iteration.

use nalgebra::{DMatrix, DVector};

/// Solution of `min ||A x - b||, x >= 0`.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    if n == 0 {
        return x;
    }
    let mut passive = vec![false; n];
    let scale = a.amax().max(b.amax()).max(1.0);
    let tol = 1e-12 * scale;
    let max_outer = 6 * n + 30;

    for _ in 0..max_outer {
        let residual = b - a * &x;
        let w = a.transpose() * &residual;
        // most violated stationarity among the active (zero) variables
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if !passive[j] && w[j] > tol {
                if best.map_or(true, |(_, bw)| w[j] > bw) {
                    best = Some((j, w[j]));
                }
            }
        }
        let Some((j, _)) = best else { break };
        passive[j] = true;

        loop {
            let z = ls_on_passive(a, b, &passive);
            let min_passive = (0..n)
                .filter(|&i| passive[i])
                .map(|i| z[i])
                .fold(f64::INFINITY, f64::min);
            if min_passive > tol {
                x = z;
                break;
            }
            // step toward z until the first passive variable hits zero
            let mut alpha = f64::INFINITY;
            for i in 0..n {
                if passive[i] && z[i] <= tol {
                    let denom = x[i] - z[i];
                    if denom > 0.0 {
                        alpha = alpha.min(x[i] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            x = &x + (&z - &x) * alpha;
            for i in 0..n {
                if passive[i] && x[i] <= tol {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                return x;
            }
        }
    }
    x
}

fn ls_on_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let cols: Vec<usize> = (0..a.ncols()).filter(|&i| passive[i]).collect();
    let sub = a.select_columns(cols.iter());
    let svd = sub.svd(true, true);
    let sol = svd
        .solve(b, 1e-12 * svd.singular_values.max().max(1.0))
        .expect("svd solve");
    let mut z = DVector::zeros(a.ncols());
    for (k, &i) in cols.iter().enumerate() {
        z[i] = sol[k];
    }
    z
}

/// Projection of `v` onto the finitely generated cone `{G mu : mu >= 0}`
/// where the columns of `G` are `generators`.
pub fn project_onto_cone(generators: &[DVector<f64>], v: &DVector<f64>) -> DVector<f64> {
    if generators.is_empty() {
        return DVector::zeros(v.len());
    }
    let g = DMatrix::from_columns(generators);
    let mu = solve(&g, v);
    g * mu
}
