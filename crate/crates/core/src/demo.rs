//! Built-in demo instances with known solutions.
//!
//! Each demo fixes the smallest nontrivial data for a classic problem shape
//! and ships a solve configuration whose first regularization weight is
//! already in the exact-penalty regime, so the gap threshold fires within a
//! few outer iterations. The known solutions below are verified against
//! independent enumeration oracles in the test suites.

use nalgebra::{dvector, DMatrix, DVector};

use crate::model::{ConvexSet, MonotoneMap, Objective, ProblemInstance};
use crate::solver::{SolveConfig, SubproblemConfig};

/// A fully specified built-in instance.
#[derive(Debug, Clone)]
pub struct Demo {
    pub name: &'static str,
    pub description: &'static str,
    pub instance: ProblemInstance,
    pub config: SolveConfig,
    pub known_solution: DVector<f64>,
    pub known_objective: f64,
    /// The known solution moved 0.1 along a feasible direction that strictly
    /// worsens the objective; certification must fail here.
    pub perturbed_point: DVector<f64>,
}

pub const DEMO_NAMES: [&str; 5] = [
    "example-3-1",
    "example-3-2",
    "min-norm-lp",
    "distance-estimation",
    "basis-pursuit",
];

pub fn all() -> Vec<Demo> {
    DEMO_NAMES.iter().map(|n| build(n).unwrap()).collect()
}

/// Builds a demo by name; `None` for unknown names.
pub fn build(name: &str) -> Option<Demo> {
    match name {
        "example-3-1" => Some(example_3_1()),
        "example-3-2" => Some(example_3_2()),
        "min-norm-lp" => Some(min_norm_lp()),
        "distance-estimation" => Some(distance_estimation()),
        "basis-pursuit" => Some(basis_pursuit()),
        _ => None,
    }
}

fn deep_subproblem(max_inner: usize) -> SubproblemConfig {
    SubproblemConfig {
        max_inner,
        ..SubproblemConfig::default()
    }
}

/// 1-d saturation: F(x) = x on C = [-1, 1], objective x^2/2. The unique
/// equilibrium is 0; the weak BCQ fails there because the gap
/// subdifferential degenerates to {0} on the boundary of N_C(0) = {0}.
fn example_3_1() -> Demo {
    let instance = ProblemInstance::new(
        Objective::QuadraticDistance {
            anchor: dvector![0.0],
        },
        MonotoneMap::affine(DMatrix::from_row_slice(1, 1, &[1.0]), dvector![0.0]),
        ConvexSet::new_box(dvector![-1.0], dvector![1.0]).unwrap(),
    )
    .unwrap()
    .with_known_solution(dvector![0.0]);
    Demo {
        name: "example-3-1",
        description: "1-d saturation VI: F(x) = x on [-1, 1]; weak BCQ fails at the solution 0",
        instance,
        config: SolveConfig {
            start: Some(dvector![0.7]),
            ..SolveConfig::default()
        },
        known_solution: dvector![0.0],
        known_objective: 0.0,
        perturbed_point: dvector![0.1],
    }
}

/// Constant field F = (1, 1) on the unit square with objective ||x||^2:
/// both levels share the minimizer (0, 0) and the weak BCQ holds there.
fn example_3_2() -> Demo {
    let instance = ProblemInstance::new(
        Objective::SquaredNorm { dim: 2 },
        MonotoneMap::constant(dvector![1.0, 1.0]),
        ConvexSet::new_box(dvector![0.0, 0.0], dvector![1.0, 1.0]).unwrap(),
    )
    .unwrap()
    .with_known_solution(dvector![0.0, 0.0]);
    Demo {
        name: "example-3-2",
        description: "constant field (1,1) on [0,1]^2 with objective ||x||^2; solution (0,0)",
        instance,
        config: SolveConfig {
            start: Some(dvector![1.0, 1.0]),
            ..SolveConfig::default()
        },
        known_solution: dvector![0.0, 0.0],
        known_objective: 0.0,
        perturbed_point: dvector![0.1, 0.0],
    }
}

/// Minimum-norm primal-dual pair of the 1-d linear program
/// `min x s.t. x >= 1` and its dual: the skew affine map
/// `F(x, y) = (1 - y, x - 1)` on [0, 10]^2 has the primal-dual solution
/// set {(1, 1)}; minimizing ||(x, y)||^2 over it selects exactly that pair.
fn min_norm_lp() -> Demo {
    let instance = ProblemInstance::new(
        Objective::SquaredNorm { dim: 2 },
        MonotoneMap::affine(
            DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
            dvector![1.0, -1.0],
        ),
        ConvexSet::new_box(dvector![0.0, 0.0], dvector![10.0, 10.0]).unwrap(),
    )
    .unwrap()
    .with_known_solution(dvector![1.0, 1.0]);
    Demo {
        name: "min-norm-lp",
        description: "min-norm primal-dual point of a 1-d LP via its skew-affine VI; solution (1,1)",
        instance,
        config: SolveConfig {
            epsilon0: 4.0,
            mu: 1e-5,
            subproblem: deep_subproblem(20_000),
            ..SolveConfig::default()
        },
        known_solution: dvector![1.0, 1.0],
        known_objective: 2.0,
        perturbed_point: dvector![1.1, 1.0],
    }
}

/// Distance estimation: the lower level minimizes x1^2 over [-1, 1]^2, so
/// its solution set is the segment {0} x [-1, 1]; the upper level measures
/// half the squared distance from (2, 2). The nearest point is (0, 1) and
/// the distance is sqrt(5).
fn distance_estimation() -> Demo {
    let instance = ProblemInstance::new(
        Objective::QuadraticDistance {
            anchor: dvector![2.0, 2.0],
        },
        MonotoneMap::grad_quadratic(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), dvector![0.0]),
        ConvexSet::new_box(dvector![-1.0, -1.0], dvector![1.0, 1.0]).unwrap(),
    )
    .unwrap()
    .with_known_solution(dvector![0.0, 1.0]);
    Demo {
        name: "distance-estimation",
        description: "distance from (2,2) to argmin{x1^2 over [-1,1]^2} = {0} x [-1,1]; sqrt(2 f) estimates it",
        instance,
        config: SolveConfig {
            epsilon0: 4000.0,
            mu: 1e-5,
            subproblem: deep_subproblem(20_000),
            ..SolveConfig::default()
        },
        known_solution: dvector![0.0, 1.0],
        known_objective: 2.5,
        perturbed_point: dvector![0.0, 0.9],
    }
}

/// Sparse recovery: minimize ||x||_1 over the least-squares solutions of
/// `x1 + x2 = 1`, compactified to the box [-10, 10]^2. The optimal set is
/// the segment {(t, 1 - t) : t in [0, 1]} with l1 value 1.
fn basis_pursuit() -> Demo {
    let instance = ProblemInstance::new(
        Objective::L1 { dim: 2 },
        MonotoneMap::grad_quadratic(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), dvector![1.0]),
        ConvexSet::new_box(dvector![-10.0, -10.0], dvector![10.0, 10.0]).unwrap(),
    )
    .unwrap()
    .with_known_solution(dvector![0.5, 0.5]);
    Demo {
        name: "basis-pursuit",
        description: "min ||x||_1 over argmin (x1 + x2 - 1)^2 on [-10,10]^2; optimal value 1 on a segment",
        instance,
        config: SolveConfig {
            epsilon0: 2000.0,
            mu: 1e-5,
            subproblem: deep_subproblem(20_000),
            ..SolveConfig::default()
        },
        known_solution: dvector![0.5, 0.5],
        known_objective: 1.0,
        perturbed_point: dvector![0.6, 0.6],
    }
}
