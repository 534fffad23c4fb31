//! Problem data model: the triple `(f, F, C)` and its validation.

mod map;
mod objective;
mod set;

pub use map::MonotoneMap;
pub use objective::Objective;
pub(crate) use set::project_simplex;
pub use set::{lex_cmp, ConeBoundary, ConvexSet, MEMBERSHIP_TOL};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::parallel;
use crate::{Error, Result};

/// Default half-width of the cube used to wrap unbounded feasible sets.
pub const DEFAULT_WRAP_RADIUS: f64 = 1e3;

/// Tolerance below which a symmetric-part eigenvalue or a sampled
/// monotonicity inner product still counts as monotone.
pub const MONOTONICITY_TOL: f64 = 1e-8;

/// An immutable, dimension-consistent problem: minimize `objective` over the
/// solution set of `VI(map, set)`.
///
/// Unbounded feasible sets are intersected with a cube at construction so the
/// dual gap function stays finite; `wrapped_radius` records when that
/// happened, and reports flag solutions that touch the artificial boundary.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    objective: Objective,
    map: MonotoneMap,
    set: ConvexSet,
    dim: usize,
    known_solution: Option<DVector<f64>>,
    wrapped_radius: Option<f64>,
}

impl ProblemInstance {
    pub fn new(objective: Objective, map: MonotoneMap, set: ConvexSet) -> Result<Self> {
        Self::with_wrap_radius(objective, map, set, DEFAULT_WRAP_RADIUS)
    }

    pub fn with_wrap_radius(
        objective: Objective,
        map: MonotoneMap,
        set: ConvexSet,
        wrap_radius: f64,
    ) -> Result<Self> {
        let dim = set.dim();
        objective.validate()?;
        if objective.dim() != dim {
            return Err(Error::DimensionMismatch {
                context: "objective dimension",
                expected: dim,
                got: objective.dim(),
            });
        }
        if map.dim() != dim {
            return Err(Error::DimensionMismatch {
                context: "map dimension",
                expected: dim,
                got: map.dim(),
            });
        }
        let (set, wrapped_radius) = if set.is_bounded() {
            (set, None)
        } else {
            if !(wrap_radius > 0.0) {
                return Err(Error::InvalidConfig("wrap radius must be positive".into()));
            }
            (set.intersect_with_cube(wrap_radius)?, Some(wrap_radius))
        };
        Ok(ProblemInstance {
            objective,
            map,
            set,
            dim,
            known_solution: None,
            wrapped_radius,
        })
    }

    pub fn with_known_solution(mut self, x: DVector<f64>) -> Self {
        self.known_solution = Some(x);
        self
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn map(&self) -> &MonotoneMap {
        &self.map
    }

    pub fn set(&self) -> &ConvexSet {
        &self.set
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn known_solution(&self) -> Option<&DVector<f64>> {
        self.known_solution.as_ref()
    }

    pub fn wrapped_radius(&self) -> Option<f64> {
        self.wrapped_radius
    }

    /// Whether `x` lies within `tol` of the artificial wrap boundary. Always
    /// false for instances whose set was bounded to begin with.
    pub fn touches_wrap_boundary(&self, x: &DVector<f64>, tol: f64) -> bool {
        match self.wrapped_radius {
            None => false,
            Some(r) => x.iter().any(|&v| (v.abs() - r).abs() <= tol),
        }
    }
}

/// Outcome of the monotonicity check in [`validate_instance`].
#[derive(Debug, Clone)]
pub enum MonotonicityCheck {
    /// Smallest eigenvalue of the symmetric part for affine-structured maps.
    AffineEigenvalue { min_eigenvalue: f64 },
    /// Smallest sampled `<F(y)-F(x), y-x>` over random pairs for black boxes.
    SampledPairs { pairs: usize, min_inner_product: f64 },
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub dimension: usize,
    pub dimensions_consistent: bool,
    pub monotonicity: MonotonicityCheck,
    pub set_bounded: bool,
    pub wrapped_radius: Option<f64>,
}

/// Checks the standing assumptions: consistent dimensions, monotone map,
/// bounded feasible set. Black-box monotonicity is sample-checked over 1000
/// random pairs from the set — a documented limitation, not a proof.
pub fn validate_instance(inst: &ProblemInstance) -> Result<ValidationReport> {
    let dim = inst.dim();
    if inst.objective().dim() != dim || inst.map().dim() != dim || inst.set().dim() != dim {
        return Err(Error::DimensionMismatch {
            context: "instance parts",
            expected: dim,
            got: inst.objective().dim().min(inst.map().dim()),
        });
    }
    if !inst.set().is_bounded() {
        return Err(Error::UnboundedSet(
            "feasible set is unbounded and was not wrapped".into(),
        ));
    }

    let monotonicity = match inst.map().sym_part_min_eigenvalue() {
        Some(min_eigenvalue) => {
            if min_eigenvalue < -MONOTONICITY_TOL {
                return Err(Error::MonotonicityViolation(format!(
                    "symmetric part has eigenvalue {min_eigenvalue:.6e}"
                )));
            }
            MonotonicityCheck::AffineEigenvalue { min_eigenvalue }
        }
        None => {
            const PAIRS: usize = 1000;
            let samples: Vec<(DVector<f64>, DVector<f64>)> = {
                let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
                (0..PAIRS)
                    .map(|_| (inst.set().sample(&mut rng), inst.set().sample(&mut rng)))
                    .collect()
            };
            let inners = parallel::map_collect(samples, |(x, y)| {
                (inst.map().eval(&y) - inst.map().eval(&x)).dot(&(&y - &x))
            });
            let min_inner_product = inners.iter().copied().fold(f64::INFINITY, f64::min);
            if min_inner_product < -MONOTONICITY_TOL {
                return Err(Error::MonotonicityViolation(format!(
                    "sampled pair with <F(y)-F(x), y-x> = {min_inner_product:.6e}"
                )));
            }
            MonotonicityCheck::SampledPairs {
                pairs: PAIRS,
                min_inner_product,
            }
        }
    };

    Ok(ValidationReport {
        dimension: dim,
        dimensions_consistent: true,
        monotonicity,
        set_bounded: true,
        wrapped_radius: inst.wrapped_radius(),
    })
}

/// Draws `count` points of the set with a fixed seed; shared by tests and
/// sampled diagnostics.
pub fn sample_points(set: &ConvexSet, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| set.sample(&mut rng)).collect()
}

/// Random monotone affine instance on a box, used by property suites.
pub fn random_affine_instance(n: usize, seed: u64) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // monotone part: B^T B, plus a skew part that leaves monotonicity intact
    let b = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let mut skew = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let skew_t = skew.transpose();
    skew = (&skew - &skew_t) * 0.5;
    let m = b.transpose() * &b + skew;
    let q = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let lower = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..-0.5));
    let upper = DVector::from_fn(n, |_, _| rng.gen_range(0.5..2.0));
    let anchor = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    ProblemInstance::new(
        Objective::QuadraticDistance { anchor },
        MonotoneMap::affine(m, q),
        ConvexSet::new_box(lower, upper).unwrap(),
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dvector, DMatrix};

    #[test]
    fn skew_affine_is_monotone() {
        let inst = ProblemInstance::new(
            Objective::SquaredNorm { dim: 2 },
            MonotoneMap::affine(
                DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
                dvector![1.0, -1.0],
            ),
            ConvexSet::new_box(dvector![0.0, 0.0], dvector![10.0, 10.0]).unwrap(),
        )
        .unwrap();
        let report = validate_instance(&inst).unwrap();
        match report.monotonicity {
            MonotonicityCheck::AffineEigenvalue { min_eigenvalue } => {
                assert!(min_eigenvalue.abs() < 1e-12)
            }
            _ => panic!("expected eigenvalue check"),
        }
    }

    #[test]
    fn negative_identity_rejected() {
        let inst = ProblemInstance::new(
            Objective::SquaredNorm { dim: 2 },
            MonotoneMap::affine(
                DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]),
                dvector![0.0, 0.0],
            ),
            ConvexSet::new_box(dvector![-1.0, -1.0], dvector![1.0, 1.0]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            validate_instance(&inst),
            Err(Error::MonotonicityViolation(_))
        ));
    }

    #[test]
    fn grad_quadratic_is_monotone_by_construction() {
        let inst = ProblemInstance::new(
            Objective::L1 { dim: 2 },
            MonotoneMap::grad_quadratic(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), dvector![1.0]),
            ConvexSet::new_box(dvector![-10.0, -10.0], dvector![10.0, 10.0]).unwrap(),
        )
        .unwrap();
        let report = validate_instance(&inst).unwrap();
        match report.monotonicity {
            MonotonicityCheck::AffineEigenvalue { min_eigenvalue } => {
                // symmetric part 2 A^T A is PSD
                assert!(min_eigenvalue >= -1e-12)
            }
            _ => panic!("expected eigenvalue check"),
        }
    }

    #[test]
    fn dimension_mismatch_detected() {
        let err = ProblemInstance::new(
            Objective::SquaredNorm { dim: 3 },
            MonotoneMap::constant(dvector![1.0, 1.0]),
            ConvexSet::new_box(dvector![0.0, 0.0], dvector![1.0, 1.0]).unwrap(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn unbounded_polytope_wrapped_and_flagged() {
        let set = ConvexSet::new_polytope(
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]),
            dvector![0.0, 0.0],
        )
        .unwrap();
        assert!(!set.is_bounded());
        let inst = ProblemInstance::with_wrap_radius(
            Objective::SquaredNorm { dim: 2 },
            MonotoneMap::constant(dvector![1.0, 1.0]),
            set,
            50.0,
        )
        .unwrap();
        assert_eq!(inst.wrapped_radius(), Some(50.0));
        assert!(inst.set().is_bounded());
        assert!(inst.touches_wrap_boundary(&dvector![50.0, 0.0], 1e-9));
        assert!(!inst.touches_wrap_boundary(&dvector![1.0, 1.0], 1e-9));
    }

    #[test]
    fn black_box_monotonicity_sampled() {
        let inst = ProblemInstance::new(
            Objective::SquaredNorm { dim: 2 },
            MonotoneMap::black_box(2, |x: &DVector<f64>| {
                dvector![x[0] + x[1].sin() * 0.1, x[1] + x[0].sin() * 0.1]
            }),
            ConvexSet::new_box(dvector![-1.0, -1.0], dvector![1.0, 1.0]).unwrap(),
        )
        .unwrap();
        let report = validate_instance(&inst).unwrap();
        assert!(matches!(
            report.monotonicity,
            MonotonicityCheck::SampledPairs { pairs: 1000, .. }
        ));
    }
}
