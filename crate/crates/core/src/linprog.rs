//! Dense two-phase primal simplex for `min <c, x>` subject to `A x <= b`
//! with free variables. Small-scale by design: the sets in this crate live
//! in low dimensions, and determinism (Bland's rule, fixed tie-breaking)
//! matters more than speed.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal { point: DVector<f64>, value: f64 },
    Unbounded,
}

const PIVOT_TOL: f64 = 1e-11;
const MAX_PIVOTS: usize = 20_000;

/// Minimizes `<c, x>` over `{x : A x <= b}`.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Result<LpOutcome> {
    let m = a.nrows();
    let n = a.ncols();
    if m == 0 {
        // whole space: bounded only if c == 0
        return if c.iter().all(|&v| v == 0.0) {
            Ok(LpOutcome::Optimal {
                point: DVector::zeros(n),
                value: 0.0,
            })
        } else {
            Ok(LpOutcome::Unbounded)
        };
    }

    // standard form variables: x = u - w, plus one slack per row, plus one
    // artificial per row for phase 1
    let nv = 2 * n + m;
    let total = nv + m;
    let mut tab = DMatrix::<f64>::zeros(m, total + 1);
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            tab[(i, j)] = flip * a[(i, j)];
            tab[(i, n + j)] = -flip * a[(i, j)];
        }
        tab[(i, 2 * n + i)] = flip; // slack
        tab[(i, nv + i)] = 1.0; // artificial
        tab[(i, total)] = flip * b[i];
    }
    let mut basis: Vec<usize> = (0..m).map(|i| nv + i).collect();

    // phase 1: drive the artificials to zero
    let mut phase1 = DVector::zeros(total);
    for j in nv..total {
        phase1[j] = 1.0;
    }
    let feas = run_simplex(&mut tab, &mut basis, &phase1, total, total)?;
    match feas {
        SimplexEnd::Optimal(value) => {
            if value > 1e-8 * (1.0 + b.amax()) {
                return Err(Error::LpInfeasible);
            }
        }
        SimplexEnd::Unbounded => unreachable!("phase 1 objective is bounded below"),
    }
    // pivot any basic artificial (necessarily at zero) out of the basis
    for i in 0..m {
        if basis[i] >= nv {
            let mut entered = false;
            for j in 0..nv {
                if tab[(i, j)].abs() > PIVOT_TOL {
                    pivot(&mut tab, &mut basis, i, j);
                    entered = true;
                    break;
                }
            }
            let _ = entered; // a fully zero row is redundant; its artificial stays at 0
        }
    }

    // phase 2: original objective, artificials barred from entering
    let mut cost = DVector::zeros(total);
    for j in 0..n {
        cost[j] = c[j];
        cost[n + j] = -c[j];
    }
    let end = run_simplex(&mut tab, &mut basis, &cost, nv, total)?;
    match end {
        SimplexEnd::Unbounded => Ok(LpOutcome::Unbounded),
        SimplexEnd::Optimal(value) => {
            let mut x = DVector::zeros(n);
            for (i, &bj) in basis.iter().enumerate() {
                let v = tab[(i, total)];
                if bj < n {
                    x[bj] += v;
                } else if bj < 2 * n {
                    x[bj - n] -= v;
                }
            }
            Ok(LpOutcome::Optimal { point: x, value })
        }
    }
}

enum SimplexEnd {
    Optimal(f64),
    Unbounded,
}

/// Primal simplex with Bland's rule on the columns `0..allowed`.
fn run_simplex(
    tab: &mut DMatrix<f64>,
    basis: &mut [usize],
    cost: &DVector<f64>,
    allowed: usize,
    total: usize,
) -> Result<SimplexEnd> {
    let m = tab.nrows();
    let scale = 1.0 + tab.amax();
    for iter in 0..MAX_PIVOTS {
        // reduced costs: r_j = c_j - c_B^T B^{-1} A_j, read off the tableau
        let mut entering = None;
        for j in 0..allowed {
            if basis.contains(&j) {
                continue;
            }
            let mut r = cost[j];
            for i in 0..m {
                r -= cost[basis[i]] * tab[(i, j)];
            }
            if r < -1e-9 * scale {
                entering = Some(j); // Bland: smallest index
                break;
            }
        }
        let Some(j) = entering else {
            let mut value = 0.0;
            for i in 0..m {
                value += cost[basis[i]] * tab[(i, total)];
            }
            return Ok(SimplexEnd::Optimal(value));
        };
        // ratio test, Bland tie-break on basis index
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let aij = tab[(i, j)];
            if aij > PIVOT_TOL * scale {
                let ratio = tab[(i, total)] / aij;
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-12 * scale
                            || ((ratio - lr).abs() <= 1e-12 * scale && basis[i] < basis[li])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((i, _)) = leave else {
            return Ok(SimplexEnd::Unbounded);
        };
        pivot(tab, basis, i, j);
        if iter == MAX_PIVOTS - 1 {
            return Err(Error::NonConvergence {
                what: "simplex",
                iterations: MAX_PIVOTS,
                residual: f64::NAN,
            });
        }
    }
    unreachable!()
}

fn pivot(tab: &mut DMatrix<f64>, basis: &mut [usize], row: usize, col: usize) {
    let m = tab.nrows();
    let w = tab.ncols();
    let p = tab[(row, col)];
    for j in 0..w {
        tab[(row, j)] /= p;
    }
    for i in 0..m {
        if i != row {
            let f = tab[(i, col)];
            if f != 0.0 {
                for j in 0..w {
                    tab[(i, j)] -= f * tab[(row, j)];
                }
            }
        }
    }
    basis[row] = col;
}
