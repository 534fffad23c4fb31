//! Convex hull membership and Caratheodory reduction.

use nalgebra::{DMatrix, DVector};

use crate::nnls;
use crate::{Error, Result};

/// Tolerance for reproducing the target from the reduced combination.
pub const HULL_TOL: f64 = 1e-9;

/// A convex combination of at most `n + 1` points.
#[derive(Debug, Clone)]
pub struct ConvexCombination {
    pub points: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
}

impl ConvexCombination {
    pub fn combined(&self) -> DVector<f64> {
        let n = self.points.first().map_or(0, |p| p.len());
        let mut out = DVector::zeros(n);
        for (p, &w) in self.points.iter().zip(&self.weights) {
            out += p * w;
        }
        out
    }
}

/// Expresses `target` as a convex combination of at most `n + 1` of the given
/// points, where `n` is the ambient dimension.
///
/// The hull membership problem is solved as a simplex-constrained least
/// squares (nonnegative least squares on the system augmented with the
/// weight-sum row); the support is then pruned to `n + 1` points by the
/// classical pivoting argument: any affinely dependent support admits a null
/// direction along which some weight can be driven to zero.
pub fn caratheodory_reduce(
    points: &[DVector<f64>],
    target: &DVector<f64>,
) -> Result<ConvexCombination> {
    if points.is_empty() {
        return Err(Error::TargetNotInHull {
            residual: f64::INFINITY,
        });
    }
    let n = target.len();
    let scale = points
        .iter()
        .map(|p| p.amax())
        .fold(target.amax(), f64::max)
        .max(1.0);

    // weights on the simplex minimizing the reproduction error
    let mut weights = simplex_weights(points, target, scale);
    let mut support: Vec<usize> = (0..points.len())
        .filter(|&i| weights[i] > 1e-14)
        .collect();
    if support.is_empty() {
        // degenerate NNLS output; fall back to the nearest single point
        let best = (0..points.len())
            .min_by(|&i, &j| {
                (&points[i] - target)
                    .norm()
                    .total_cmp(&(&points[j] - target).norm())
            })
            .unwrap();
        support = vec![best];
        weights = vec![0.0; points.len()];
        weights[best] = 1.0;
    }

    // pivot support down to at most n + 1 points
    while support.len() > n + 1 {
        let k = support.len();
        // affine dependence: rows are the points with a trailing 1
        let mut sys = DMatrix::zeros(n + 1, k);
        for (col, &i) in support.iter().enumerate() {
            for r in 0..n {
                sys[(r, col)] = points[i][r];
            }
            sys[(n, col)] = 1.0;
        }
        let Some(z) = null_vector(&sys) else { break };
        // move along +z or -z until the first weight hits zero
        let mut theta = f64::INFINITY;
        let mut sign = 1.0;
        for (col, &i) in support.iter().enumerate() {
            if z[col] > 1e-14 {
                theta = theta.min(weights[i] / z[col]);
            }
        }
        if !theta.is_finite() {
            sign = -1.0;
            theta = f64::INFINITY;
            for (col, &i) in support.iter().enumerate() {
                if -z[col] > 1e-14 {
                    theta = theta.min(weights[i] / -z[col]);
                }
            }
        }
        if !theta.is_finite() {
            break;
        }
        for (col, &i) in support.iter().enumerate() {
            weights[i] -= theta * sign * z[col];
            if weights[i] < 1e-13 {
                weights[i] = 0.0;
            }
        }
        support.retain(|&i| weights[i] > 0.0);
    }

    // exact renormalization of the surviving weights
    let total: f64 = support.iter().map(|&i| weights[i]).sum();
    if total <= 0.0 {
        return Err(Error::TargetNotInHull {
            residual: f64::INFINITY,
        });
    }
    let out_points: Vec<DVector<f64>> = support.iter().map(|&i| points[i].clone()).collect();
    let out_weights: Vec<f64> = support.iter().map(|&i| weights[i] / total).collect();
    let combo = ConvexCombination {
        points: out_points,
        weights: out_weights,
    };
    let residual = (combo.combined() - target).norm();
    if residual > HULL_TOL * scale {
        return Err(Error::TargetNotInHull { residual });
    }
    Ok(combo)
}

/// Nonnegative weights approximately summing to one that minimize
/// `||P w - target||`, via NNLS on the sum-augmented system.
fn simplex_weights(points: &[DVector<f64>], target: &DVector<f64>, scale: f64) -> Vec<f64> {
    let n = target.len();
    let k = points.len();
    let rho = 16.0 * scale;
    let mut a = DMatrix::zeros(n + 1, k);
    for (col, p) in points.iter().enumerate() {
        for r in 0..n {
            a[(r, col)] = p[r];
        }
        a[(n, col)] = rho;
    }
    let mut b = DVector::zeros(n + 1);
    for r in 0..n {
        b[r] = target[r];
    }
    b[n] = rho;
    let w = nnls::solve(&a, &b);
    let total: f64 = w.iter().sum();
    if total > 1e-12 {
        w.iter().map(|&v| v / total).collect()
    } else {
        w.iter().copied().collect()
    }
}

/// A unit-norm vector in the null space of `sys`, if the columns are
/// dependent.
fn null_vector(sys: &DMatrix<f64>) -> Option<DVector<f64>> {
    let svd = sys.clone().svd(false, true);
    let v_t = svd.v_t.as_ref()?;
    let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    let k = sys.ncols();
    if svd.singular_values.len() < k || smin <= 1e-10 * svd.singular_values.max().max(1.0) {
        let row = v_t.nrows() - 1;
        let z = v_t.row(row).transpose();
        if z.norm() > 0.5 {
            return Some(z);
        }
    }
    None
}
