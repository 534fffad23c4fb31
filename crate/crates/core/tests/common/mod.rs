//! Independent oracles shared by the integration suites. Everything here
//! computes reference values by enumeration or dense grids, never through
//! the library's own solver paths.

use nalgebra::DVector;
use smpec::model::ProblemInstance;

/// `<F(y), x - y>`, evaluated directly through the map oracle.
pub fn theta(inst: &ProblemInstance, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    inst.map().eval(y).dot(&(x - y))
}

/// Brute-force maximization of `theta` over a 1-d box at exactly `step`.
pub fn grid_max_1d(inst: &ProblemInstance, x: &DVector<f64>, step: f64) -> f64 {
    let (lo, hi) = inst.set().coordinate_bounds().unwrap();
    let mut best = f64::NEG_INFINITY;
    let mut y = lo[0];
    while y <= hi[0] + step * 0.5 {
        best = best.max(theta(inst, x, &DVector::from_vec(vec![y])));
        y += step;
    }
    best
}

/// Multilevel grid maximization of `theta` over a 2-d box, refining down to
/// cells no wider than `step`. The refinement window spans several coarse
/// cells on each side, which is exact for the concave inner objectives of
/// affine-structured maps.
pub fn grid_max_2d(inst: &ProblemInstance, x: &DVector<f64>, step: f64) -> f64 {
    let (lo, hi) = inst.set().coordinate_bounds().unwrap();
    let mut lo0 = lo[0];
    let mut hi0 = hi[0];
    let mut lo1 = lo[1];
    let mut hi1 = hi[1];
    let cells = 240usize;
    let mut best = f64::NEG_INFINITY;
    loop {
        let d0 = (hi0 - lo0) / cells as f64;
        let d1 = (hi1 - lo1) / cells as f64;
        let mut best_ij = (0usize, 0usize);
        for i in 0..=cells {
            for j in 0..=cells {
                let y = DVector::from_vec(vec![lo0 + i as f64 * d0, lo1 + j as f64 * d1]);
                let v = theta(inst, x, &y);
                if v > best {
                    best = v;
                    best_ij = (i, j);
                }
            }
        }
        if d0.max(d1) <= step {
            return best;
        }
        // refine around the incumbent cell
        let (bi, bj) = best_ij;
        let w = 3.0;
        let c0 = lo0 + bi as f64 * d0;
        let c1 = lo1 + bj as f64 * d1;
        lo0 = (c0 - w * d0).max(lo[0]);
        hi0 = (c0 + w * d0).min(hi[0]);
        lo1 = (c1 - w * d1).max(lo[1]);
        hi1 = (c1 + w * d1).min(hi[1]);
    }
}

pub fn grid_max(inst: &ProblemInstance, x: &DVector<f64>, step: f64) -> f64 {
    match inst.dim() {
        1 => grid_max_1d(inst, x, step),
        2 => grid_max_2d(inst, x, step),
        d => panic!("grid oracle supports n <= 2, got {d}"),
    }
}
