//! Invariant suites: geometric oracle properties under proptest, plus the
//! counted randomized checks (monotonicity sampling, zero-level
//! characterization, trace upper bounds) with fixed seeds.

mod common;

use nalgebra::{dvector, DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smpec::demo;
use smpec::gap::eval_gap;
use smpec::model::{ConvexSet, MonotoneMap, Objective, ProblemInstance, MEMBERSHIP_TOL};
use smpec::solver::solve_vi;

fn test_sets() -> Vec<ConvexSet> {
    vec![
        ConvexSet::new_box(dvector![-1.0, -2.0, 0.0], dvector![1.5, 0.5, 2.0]).unwrap(),
        ConvexSet::new_ball(dvector![0.3, -0.7, 0.1], 1.7).unwrap(),
        ConvexSet::new_simplex(3, 2.5).unwrap(),
        ConvexSet::new_polytope(
            DMatrix::from_row_slice(
                4,
                3,
                &[
                    1.0, 1.0, 1.0, //
                    -1.0, 0.0, 0.0, //
                    0.0, -1.0, 0.0, //
                    0.0, 0.0, -1.0,
                ],
            ),
            dvector![1.5, 0.5, 0.5, 0.5],
        )
        .unwrap(),
    ]
}

#[test]
fn projection_nonexpansive_on_all_variants() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x90_01);
    for set in test_sets() {
        for _ in 0..1000 {
            let z1 = DVector::from_fn(set.dim(), |_, _| rng.gen_range(-4.0..4.0));
            let z2 = DVector::from_fn(set.dim(), |_, _| rng.gen_range(-4.0..4.0));
            let p1 = set.project(&z1).unwrap();
            let p2 = set.project(&z2).unwrap();
            assert!(
                (&p1 - &p2).norm() <= (&z1 - &z2).norm() + 1e-10,
                "nonexpansiveness violated"
            );
        }
    }
}

#[test]
fn projection_variational_characterization() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x90_02);
    for set in test_sets() {
        for _ in 0..20 {
            let z = DVector::from_fn(set.dim(), |_, _| rng.gen_range(-4.0..4.0));
            let p = set.project(&z).unwrap();
            for _ in 0..100 {
                let y = set.sample(&mut rng);
                assert!(
                    (&z - &p).dot(&(&y - &p)) <= 1e-9,
                    "variational inequality of the projection violated"
                );
            }
        }
    }
}

#[test]
fn affine_monotonicity_sampled_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x90_03);
    for seed in [5u64, 6, 7] {
        let inst = smpec::model::random_affine_instance(4, seed);
        for _ in 0..1000 {
            let x = inst.set().sample(&mut rng);
            let y = inst.set().sample(&mut rng);
            let inner = (inst.map().eval(&y) - inst.map().eval(&x)).dot(&(&y - &x));
            assert!(inner >= -1e-9, "monotonicity violated: {inner}");
        }
    }
}

#[test]
fn skew_quadratic_form_is_exactly_zero() {
    // the min-norm demo matrix is skew-symmetric: <z, Mz> = 0 exactly
    let d = demo::build("min-norm-lp").unwrap();
    let (m, _) = d.instance.map().as_affine().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x90_04);
    for _ in 0..1000 {
        let z = DVector::from_fn(2, |_, _| rng.gen_range(-100.0..100.0));
        assert_eq!(z.dot(&(&m * &z)), 0.0);
    }
}

#[test]
fn zero_level_characterizes_equilibria() {
    // reference solver output has (near) zero gap; conversely, points with
    // vanishing gap satisfy the equilibrium inequality against samples of C
    for d in demo::all() {
        let r = solve_vi(&d.instance, 1e-8).unwrap();
        assert!(r.converged);
        assert!(eval_gap(&d.instance, &r.point).unwrap().value <= 1e-6);

        let eval = eval_gap(&d.instance, &d.known_solution).unwrap();
        assert!(eval.value.abs() <= 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(0x90_05);
        for _ in 0..200 {
            let y = d.instance.set().sample(&mut rng);
            let fy = d.instance.map().eval(&y);
            assert!(
                fy.dot(&(&y - &d.known_solution)) >= -1e-6,
                "{}: equilibrium inequality violated",
                d.name
            );
        }
    }
}

#[test]
fn trace_objectives_bounded_by_reference_equilibrium_value() {
    // f(x_k) <= f(x*) + 1e-3 for a reference equilibrium x*: the subproblem
    // value at x* bounds the iterate value from above
    for d in demo::all() {
        let reference = solve_vi(&d.instance, 1e-8).unwrap();
        let f_ref = d.instance.objective().value(&reference.point);
        let trace = smpec::solver::solve_smpec(&d.instance, &d.config).unwrap();
        for e in &trace.entries {
            assert!(
                e.objective <= f_ref + 1e-3,
                "{}: f(x_{}) = {} exceeds reference {}",
                d.name,
                e.k,
                e.objective,
                f_ref
            );
            assert!(d.instance.set().contains(&e.x, 1e-10));
        }
    }
}

#[test]
fn black_box_gap_close_to_certified_on_random_affine_instances() {
    for seed in [11u64, 12] {
        let inst = smpec::model::random_affine_instance(2, seed);
        let (m, q) = inst.map().as_affine().unwrap();
        let blackbox = ProblemInstance::new(
            inst.objective().clone(),
            MonotoneMap::black_box(2, move |y: &DVector<f64>| &m * y + &q),
            inst.set().clone(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let x = inst.set().sample(&mut rng);
            let certified = eval_gap(&inst, &x).unwrap();
            let heuristic = eval_gap(&blackbox, &x).unwrap();
            assert!(certified.certified);
            assert!(!heuristic.certified);
            assert!((certified.value - heuristic.value).abs() <= 1e-4);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn box_projection_idempotent_and_member(
        zs in prop::collection::vec(-5.0f64..5.0, 3),
        los in prop::collection::vec(-2.0f64..0.0, 3),
        widths in prop::collection::vec(0.0f64..3.0, 3),
    ) {
        let lower = DVector::from_vec(los.clone());
        let upper = DVector::from_vec(
            los.iter().zip(&widths).map(|(l, w)| l + w).collect(),
        );
        let set = ConvexSet::new_box(lower, upper).unwrap();
        let z = DVector::from_vec(zs);
        let p = set.project(&z).unwrap();
        prop_assert!(set.contains(&p, MEMBERSHIP_TOL));
        let p2 = set.project(&p).unwrap();
        prop_assert!((&p2 - &p).norm() <= 1e-12 * (1.0 + p.norm()));
    }

    #[test]
    fn linear_minimizer_dominates_samples(
        c in prop::collection::vec(-3.0f64..3.0, 3),
        seed in 0u64..1000,
    ) {
        let c = DVector::from_vec(c);
        for set in test_sets() {
            let v = set.linear_minimizer(&c).unwrap();
            prop_assert!(set.contains(&v, MEMBERSHIP_TOL));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..50 {
                let y = set.sample(&mut rng);
                prop_assert!(c.dot(&v) <= c.dot(&y) + 1e-9);
            }
        }
    }

    #[test]
    fn normal_cone_projection_is_moreau_consistent(
        vs in prop::collection::vec(-3.0f64..3.0, 3),
        seed in 0u64..1000,
    ) {
        let v = DVector::from_vec(vs);
        for set in test_sets() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = set.sample(&mut rng);
            let p = set.normal_cone_project(&x, &v).unwrap();
            // the projection is itself in the cone (residual zero)
            let r = set.normal_cone_residual(&x, &p).unwrap();
            prop_assert!(r <= 1e-7, "projection left the cone: {r}");
            // orthogonality of the residual at the projection
            prop_assert!((&v - &p).dot(&p).abs() <= 1e-7 * (1.0 + v.norm_squared()));
        }
    }

    #[test]
    fn l1_subgradient_inequality(
        xs in prop::collection::vec(-2.0f64..2.0, 4),
        zs in prop::collection::vec(-2.0f64..2.0, 4),
    ) {
        let f = Objective::L1 { dim: 4 };
        let x = DVector::from_vec(xs);
        let z = DVector::from_vec(zs);
        let s = f.subgradient(&x);
        prop_assert!(f.value(&z) >= f.value(&x) + s.dot(&(&z - &x)) - 1e-12);
    }

    #[test]
    fn caratheodory_reduction_reproduces_random_targets(
        coords in prop::collection::vec(-2.0f64..2.0, 8),
        raw_weights in prop::collection::vec(0.01f64..1.0, 4),
    ) {
        let points: Vec<DVector<f64>> = coords
            .chunks(2)
            .map(|c| DVector::from_vec(c.to_vec()))
            .collect();
        let total: f64 = raw_weights.iter().sum();
        let mut target = DVector::zeros(2);
        for (p, w) in points.iter().zip(&raw_weights) {
            target += p * (*w / total);
        }
        let combo = smpec::hull::caratheodory_reduce(&points, &target).unwrap();
        prop_assert!(combo.points.len() <= 3);
        prop_assert!(combo.weights.iter().all(|&w| w >= 0.0));
        let sum: f64 = combo.weights.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        prop_assert!((combo.combined() - &target).norm() <= 1e-8);
    }
}
