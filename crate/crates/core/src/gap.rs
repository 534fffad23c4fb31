//! The dual gap function `g_D(x) = sup_{y in C} <F(y), x - y>` and its
//! Danskin subdifferential `conv{F(y) : y in Y(x)}`.
//!
//! For affine-structured maps the inner objective `theta(y) = <F(y), x - y>`
//! is concave (its quadratic part is `-y^T sym(M) y` with `sym(M)` PSD), so
//! the maximization can be solved with a first-order certificate: away-step
//! Frank-Wolfe over polytopal sets, an exact trust-region solve over balls.
//! Black-box maps fall back to a multistart projected ascent and results are
//! marked uncertified.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{lex_cmp, ConvexSet, ProblemInstance};
use crate::parallel;
use crate::{Error, Result};

/// Near-maximizer inclusion tolerance used when none is given explicitly.
pub const DEFAULT_ARGMAX_TOL: f64 = 1e-6;

/// First-order residual (Frank-Wolfe gap) at which the inner maximization is
/// declared solved and the evaluation certified.
pub const FW_GAP_TOL: f64 = 1e-8;

/// Iteration cap for the inner maximization.
pub const INNER_ITERATION_CAP: usize = 100_000;

/// Distinct maximizers closer than this are merged.
const DEDUP_TOL: f64 = 1e-6;

/// Value of the dual gap function at a point, together with a finite sample
/// of the inner maximizer set and a Danskin subgradient.
#[derive(Debug, Clone)]
pub struct GapEvaluation {
    /// `g_D(x)`, up to the inner solver tolerance.
    pub value: f64,
    /// Near-maximizers, best first; every `y` here satisfies
    /// `<F(y), x - y> >= value - argmax_tol`.
    pub maximizers: Vec<DVector<f64>>,
    /// `F(maximizers[0])`, a valid subgradient of `g_D` at `x`.
    pub subgradient: DVector<f64>,
    pub inner_iterations: usize,
    /// True when the inner problem is concave and was solved to a
    /// first-order residual at most [`FW_GAP_TOL`].
    pub certified: bool,
}

/// Evaluates `g_D` at `x` with the default near-maximizer tolerance.
pub fn eval_gap(inst: &ProblemInstance, x: &DVector<f64>) -> Result<GapEvaluation> {
    eval_gap_with_tol(inst, x, DEFAULT_ARGMAX_TOL)
}

pub fn eval_gap_with_tol(
    inst: &ProblemInstance,
    x: &DVector<f64>,
    argmax_tol: f64,
) -> Result<GapEvaluation> {
    let outcome = inner_maximize(inst, x)?;
    finish_evaluation(inst, x, outcome, argmax_tol, false)
}

/// A subgradient of `g_D` at `x`: the map value at an inner maximizer.
pub fn gap_subgradient(inst: &ProblemInstance, x: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(eval_gap(inst, x)?.subgradient)
}

/// A finite sample of the maximizer set `Y(x)`, enriched beyond the bare
/// inner-solver output: enumerable extreme points within `tol` of the
/// maximum and probe points on the boundary of the `tol`-sublevel set are
/// included. The richer the sample, the stronger the downstream multiplier
/// certificates.
pub fn argmax_set(
    inst: &ProblemInstance,
    x: &DVector<f64>,
    tol: f64,
) -> Result<Vec<DVector<f64>>> {
    Ok(eval_gap_enriched(inst, x, tol)?.maximizers)
}

/// [`eval_gap_with_tol`] plus the enriched maximizer sample of [`argmax_set`].
pub fn eval_gap_enriched(
    inst: &ProblemInstance,
    x: &DVector<f64>,
    argmax_tol: f64,
) -> Result<GapEvaluation> {
    let outcome = inner_maximize(inst, x)?;
    finish_evaluation(inst, x, outcome, argmax_tol, true)
}

struct InnerOutcome {
    best_value: f64,
    best_point: DVector<f64>,
    candidates: Vec<DVector<f64>>,
    iterations: usize,
    certified: bool,
}

fn theta(inst: &ProblemInstance, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    inst.map().eval(y).dot(&(x - y))
}

fn finish_evaluation(
    inst: &ProblemInstance,
    x: &DVector<f64>,
    outcome: InnerOutcome,
    argmax_tol: f64,
    enrich: bool,
) -> Result<GapEvaluation> {
    let mut candidates = outcome.candidates;
    if enrich {
        collect_extreme_candidates(inst, x, outcome.best_value, argmax_tol, &mut candidates);
        collect_probe_candidates(
            inst,
            x,
            &outcome.best_point,
            outcome.best_value,
            argmax_tol,
            &mut candidates,
        );
    }

    // keep near-maximizers, best first, deduplicated
    let mut scored: Vec<(f64, DVector<f64>)> = candidates
        .into_iter()
        .map(|y| (theta(inst, x, &y), y))
        .filter(|(v, _)| *v >= outcome.best_value - argmax_tol)
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| lex_cmp(&a.1, &b.1)));
    let mut maximizers: Vec<DVector<f64>> = Vec::new();
    for (_, y) in scored {
        if !maximizers.iter().any(|m| (m - &y).norm() <= DEDUP_TOL) {
            maximizers.push(y);
        }
        if maximizers.len() >= 128 {
            break;
        }
    }
    if maximizers.is_empty() {
        maximizers.push(outcome.best_point.clone());
    }

    let subgradient = inst.map().eval(&maximizers[0]);
    Ok(GapEvaluation {
        value: outcome.best_value,
        maximizers,
        subgradient,
        inner_iterations: outcome.iterations,
        certified: outcome.certified,
    })
}

fn inner_maximize(inst: &ProblemInstance, x: &DVector<f64>) -> Result<InnerOutcome> {
    let set = inst.set();
    if !set.is_bounded() {
        return Err(Error::UnboundedSet(
            "gap evaluation needs a bounded feasible set".into(),
        ));
    }
    if x.len() != inst.dim() {
        return Err(Error::DimensionMismatch {
            context: "gap evaluation point",
            expected: inst.dim(),
            got: x.len(),
        });
    }
    match inst.map().as_affine() {
        Some((m, q)) => {
            let sym = (&m + m.transpose()) * 0.5;
            let lin = m.transpose() * x - &q;
            match set {
                ConvexSet::Ball { center, radius } => {
                    maximize_ball_exact(inst, x, &sym, &lin, center, *radius)
                }
                _ => maximize_afw(inst, x, &sym, &lin),
            }
        }
        None => Ok(maximize_multistart(inst, x)),
    }
}

/// Away-step Frank-Wolfe with exact line search for the concave quadratic
/// `theta` over a compact set with a linear minimization oracle. Away steps
/// restore linear convergence on polytopes, where plain Frank-Wolfe zigzags
/// sublinearly toward interior optima and cannot reach the 1e-8 residual
/// within any reasonable cap.
fn maximize_afw(
    inst: &ProblemInstance,
    x: &DVector<f64>,
    sym: &DMatrix<f64>,
    lin: &DVector<f64>,
) -> Result<InnerOutcome> {
    let set = inst.set();
    let grad = |y: &DVector<f64>| lin - (sym * y) * 2.0;
    let scale = 1.0 + lin.norm() + sym.amax();

    // start from a vertex chosen by the gradient at the projection of x
    let y_start = set.project(x)?;
    let g0 = grad(&y_start);
    let v0 = set.linear_minimizer(&(-&g0))?;
    let mut active: Vec<(DVector<f64>, f64)> = vec![(v0.clone(), 1.0)];
    let mut y = v0;
    let mut candidates: Vec<DVector<f64>> = vec![y_start];

    let mut iterations = 0;
    let mut certified = false;
    while iterations < INNER_ITERATION_CAP {
        iterations += 1;
        let g = grad(&y);
        let s = set.linear_minimizer(&(-&g))?;
        let fw_gap = g.dot(&(&s - &y));
        if fw_gap <= FW_GAP_TOL {
            certified = true;
            break;
        }
        // worst active vertex for the away direction
        let (away_idx, _) = active
            .iter()
            .enumerate()
            .map(|(i, (v, _))| (i, g.dot(v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("active set nonempty");
        let away_gap = g.dot(&(&y - &active[away_idx].0));

        let (d, t_max, fw_move) = if fw_gap >= away_gap {
            (&s - &y, 1.0, true)
        } else {
            let w = active[away_idx].1;
            (&y - &active[away_idx].0, w / (1.0 - w).max(1e-300), false)
        };
        let slope = g.dot(&d);
        let curv = d.dot(&(sym * &d));
        let t = if curv > 1e-14 * scale {
            (slope / (2.0 * curv)).min(t_max)
        } else {
            t_max
        };
        if !(t > 0.0) {
            // numerically exhausted direction
            certified = fw_gap <= 10.0 * FW_GAP_TOL;
            break;
        }

        if fw_move {
            for (_, w) in active.iter_mut() {
                *w *= 1.0 - t;
            }
            if let Some((_, w)) = active.iter_mut().find(|(v, _)| v == &s) {
                *w += t;
            } else {
                active.push((s.clone(), t));
            }
        } else {
            for (_, w) in active.iter_mut() {
                *w *= 1.0 + t;
            }
            active[away_idx].1 -= t;
        }
        active.retain(|(_, w)| *w > 1e-15);
        // rebuild the iterate from the weights; keeps drift bounded
        let total: f64 = active.iter().map(|(_, w)| w).sum();
        y = DVector::zeros(y.len());
        for (v, w) in &active {
            y += v * (*w / total);
        }
    }
    if !certified {
        let g = grad(&y);
        let s = set.linear_minimizer(&(-&g))?;
        let fw_gap = g.dot(&(&s - &y));
        if fw_gap > FW_GAP_TOL {
            return Err(Error::NonConvergence {
                what: "inner gap maximization (away-step Frank-Wolfe)",
                iterations,
                residual: fw_gap,
            });
        }
        certified = true;
    }

    candidates.push(y.clone());
    candidates.extend(active.iter().map(|(v, _)| v.clone()));
    Ok(InnerOutcome {
        best_value: theta(inst, x, &y),
        best_point: y,
        candidates,
        iterations,
        certified,
    })
}

/// Exact maximization of the concave quadratic over a ball: eigendecompose
/// the quadratic part and solve the secular equation for the trust-region
/// multiplier. No hard case arises because `sym` is PSD.
fn maximize_ball_exact(
    inst: &ProblemInstance,
    x: &DVector<f64>,
    sym: &DMatrix<f64>,
    lin: &DVector<f64>,
    center: &DVector<f64>,
    radius: f64,
) -> Result<InnerOutcome> {
    let g_shift = lin - (sym * center) * 2.0;
    let eig = sym.clone().symmetric_eigen();
    let ghat = eig.eigenvectors.transpose() * &g_shift;
    let lam = &eig.eigenvalues;
    let n = lam.len();
    let eig_scale = lam.amax().max(1.0);

    let w_at = |nu: f64| -> DVector<f64> {
        DVector::from_fn(n, |i, _| {
            let denom = 2.0 * (lam[i].max(0.0) + nu);
            if denom > 1e-300 {
                ghat[i] / denom
            } else {
                0.0
            }
        })
    };
    // interior solution if it exists and fits
    let interior_ok = (0..n).all(|i| {
        lam[i] > 1e-12 * eig_scale || ghat[i].abs() <= 1e-12 * eig_scale.max(g_shift.norm())
    });
    let mut w = w_at(0.0);
    let mut iterations = 1;
    if !(interior_ok && w.norm() <= radius) {
        // secular equation ||w(nu)|| = radius, monotone decreasing in nu
        let mut lo = 0.0;
        let mut hi = g_shift.norm() / (2.0 * radius) + 1.0;
        while w_at(hi).norm() > radius {
            hi *= 2.0;
        }
        for _ in 0..300 {
            iterations += 1;
            let mid = 0.5 * (lo + hi);
            if w_at(mid).norm() > radius {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        w = w_at(hi);
    }
    let y = center + &eig.eigenvectors * w;
    let y = inst.set().project(&y)?;

    // certify with the Frank-Wolfe gap at the solution
    let grad = lin - (sym * &y) * 2.0;
    let fw_vertex = inst.set().linear_minimizer(&(-&grad))?;
    let fw_gap = grad.dot(&(&fw_vertex - &y));
    let certified = fw_gap <= FW_GAP_TOL;

    Ok(InnerOutcome {
        best_value: theta(inst, x, &y),
        best_point: y.clone(),
        candidates: vec![y],
        iterations,
        certified,
    })
}

/// Multistart projected ascent with numerical gradients for black-box maps.
/// Heuristic: the inner problem need not be concave, so the result is never
/// certified.
fn maximize_multistart(inst: &ProblemInstance, x: &DVector<f64>) -> InnerOutcome {
    const STARTS: usize = 32;
    const STEPS_PER_START: usize = 400;
    let set = inst.set();
    let diam = set.diameter().unwrap_or(1.0);

    let mut starts: Vec<DVector<f64>> = Vec::with_capacity(STARTS);
    starts.push(set.project(x).expect("bounded set projects"));
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a97_a11d);
    while starts.len() < STARTS {
        starts.push(set.sample(&mut rng));
    }

    let results = parallel::map_collect(starts, |mut y| {
        let h = 1e-6 * (1.0 + diam);
        let mut step = 0.25 * diam;
        let mut val = theta(inst, x, &y);
        let mut iters = 0;
        for _ in 0..STEPS_PER_START {
            iters += 1;
            // central-difference gradient of theta
            let mut g = DVector::zeros(y.len());
            for i in 0..y.len() {
                let mut yp = y.clone();
                let mut ym = y.clone();
                yp[i] += h;
                ym[i] -= h;
                g[i] = (theta(inst, x, &yp) - theta(inst, x, &ym)) / (2.0 * h);
            }
            let cand = set
                .project(&(&y + &g * (step / g.norm().max(1e-12))))
                .expect("bounded set projects");
            let cand_val = theta(inst, x, &cand);
            if cand_val > val + 1e-15 {
                y = cand;
                val = cand_val;
                step = (step * 1.3).min(diam);
            } else {
                step *= 0.5;
                if step < 1e-12 * diam {
                    break;
                }
            }
        }
        (val, y, iters)
    });

    let mut best_idx = 0;
    for i in 1..results.len() {
        if results[i].0 > results[best_idx].0 {
            best_idx = i;
        }
    }
    let iterations = results.iter().map(|r| r.2).sum();
    let best_value = results[best_idx].0;
    let best_point = results[best_idx].1.clone();
    let candidates = results.into_iter().map(|r| r.1).collect();
    InnerOutcome {
        best_value,
        best_point,
        candidates,
        iterations,
        certified: false,
    }
}

/// Enumerable extreme points within `tol` of the maximum.
fn collect_extreme_candidates(
    inst: &ProblemInstance,
    x: &DVector<f64>,
    best_value: f64,
    tol: f64,
    out: &mut Vec<DVector<f64>>,
) {
    if let Some(vertices) = inst.set().vertices() {
        let kept = parallel::map_collect(vertices, |v| {
            let val = theta(inst, x, &v);
            (val >= best_value - tol).then_some(v)
        });
        out.extend(kept.into_iter().flatten());
    }
}

/// Walks away from the best point along coordinate directions, keeping the
/// objective within `tol` of the maximum. Flat directions run to the far
/// boundary of the set; curved directions stop near the `tol`-level — the
/// points whose map values carry the most information for certificates.
fn collect_probe_candidates(
    inst: &ProblemInstance,
    x: &DVector<f64>,
    best_point: &DVector<f64>,
    best_value: f64,
    tol: f64,
    out: &mut Vec<DVector<f64>>,
) {
    let set = inst.set();
    let Ok(diam) = set.diameter() else { return };
    let n = best_point.len();
    let cut = best_value - 0.98 * tol;

    let mut directions: Vec<DVector<f64>> = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        directions.push(e.clone());
        e[i] = -1.0;
        directions.push(e);
    }

    let probes = parallel::map_collect(directions, |d| {
        let point_at = |delta: f64| set.project(&(best_point + &d * delta)).ok();
        // geometric scan for the farthest step that stays above the cut
        let mut lo = 0.0f64;
        let mut hi: Option<f64> = None;
        let mut delta = diam;
        let mut scan = Vec::new();
        while delta > 1e-9 * diam {
            scan.push(delta);
            delta *= 0.5;
        }
        for &dl in scan.iter() {
            if let Some(p) = point_at(dl) {
                if theta(inst, x, &p) >= cut {
                    lo = dl;
                    break;
                } else {
                    hi = Some(dl);
                }
            }
        }
        if lo == 0.0 {
            return None;
        }
        let mut best = point_at(lo)?;
        if let Some(mut h) = hi {
            // sharpen toward the level boundary
            let mut l = lo;
            for _ in 0..40 {
                let mid = 0.5 * (l + h);
                match point_at(mid) {
                    Some(p) if theta(inst, x, &p) >= cut => {
                        l = mid;
                        best = p;
                    }
                    _ => h = mid,
                }
            }
        }
        Some(best)
    });
    out.extend(probes.into_iter().flatten());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MonotoneMap, Objective};
    use nalgebra::dvector;
    use rand::Rng;

    /// F(x) = x on C = [-1, 1] with a quadratic objective.
    fn saturation_1d() -> ProblemInstance {
        ProblemInstance::new(
            Objective::QuadraticDistance {
                anchor: dvector![0.0],
            },
            MonotoneMap::affine(DMatrix::from_row_slice(1, 1, &[1.0]), dvector![0.0]),
            ConvexSet::new_box(dvector![-1.0], dvector![1.0]).unwrap(),
        )
        .unwrap()
    }

    /// F = (1, 1) constant on C = [0, 1]^2.
    fn constant_field_2d() -> ProblemInstance {
        ProblemInstance::new(
            Objective::SquaredNorm { dim: 2 },
            MonotoneMap::constant(dvector![1.0, 1.0]),
            ConvexSet::new_box(dvector![0.0, 0.0], dvector![1.0, 1.0]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn identity_map_gap_at_origin_is_zero() {
        let inst = saturation_1d();
        let eval = eval_gap(&inst, &dvector![0.0]).unwrap();
        assert!(eval.value.abs() <= 1e-8);
        assert!(eval.subgradient[0].abs() <= 1e-8);
        assert!(eval.certified);
    }

    #[test]
    fn identity_map_gap_at_one_matches_grid() {
        let inst = saturation_1d();
        let eval = eval_gap(&inst, &dvector![1.0]).unwrap();
        // grid oracle: maximize y(1-y) over [-1, 1] at step 1e-6
        let mut best = f64::NEG_INFINITY;
        let mut best_y = 0.0;
        let mut y = -1.0;
        while y <= 1.0 {
            let v = y * (1.0 - y);
            if v > best {
                best = v;
                best_y = y;
            }
            y += 1e-6;
        }
        assert!((best - 0.25).abs() < 1e-9);
        assert!((eval.value - best).abs() <= 1e-6);
        assert!((eval.maximizers[0][0] - best_y).abs() <= 1e-4);
        assert!((eval.subgradient[0] - 0.5).abs() <= 1e-4);
    }

    #[test]
    fn constant_field_gap_and_subgradient_at_origin() {
        let inst = constant_field_2d();
        let eval = eval_gap(&inst, &dvector![0.0, 0.0]).unwrap();
        assert!(eval.value.abs() <= 1e-10);
        assert!((eval.subgradient - dvector![1.0, 1.0]).norm() <= 1e-12);
        let sample = argmax_set(&inst, &dvector![0.0, 0.0], 1e-8).unwrap();
        assert_eq!(sample.len(), 1);
        assert!((&sample[0] - dvector![0.0, 0.0]).norm() <= 1e-8);
    }

    #[test]
    fn unique_interior_maximizer_found() {
        let inst = saturation_1d();
        let sample = argmax_set(&inst, &dvector![1.0], 1e-8).unwrap();
        // strictly concave 1-d quadratic: unique maximizer 0.5
        assert!((sample[0][0] - 0.5).abs() <= 1e-4);
        for y in &sample {
            assert!((y[0] - 0.5).abs() <= 2e-4);
        }
    }

    #[test]
    fn zero_map_everything_maximizes() {
        let inst = ProblemInstance::new(
            Objective::SquaredNorm { dim: 2 },
            MonotoneMap::constant(dvector![0.0, 0.0]),
            ConvexSet::new_box(dvector![-1.0, -1.0], dvector![1.0, 1.0]).unwrap(),
        )
        .unwrap();
        let x = dvector![0.3, -0.2];
        let eval = eval_gap(&inst, &x).unwrap();
        assert!(eval.value.abs() <= 1e-12);
        assert!(!eval.maximizers.is_empty());
        let sample = argmax_set(&inst, &x, 1e-8).unwrap();
        for y in &sample {
            assert!(theta(&inst, &x, y).abs() <= 1e-12);
        }
        // flat objective: probes reach far-away points of C
        assert!(sample.len() > 1);
    }

    #[test]
    fn ball_inner_solve_is_certified() {
        let inst = ProblemInstance::new(
            Objective::SquaredNorm { dim: 2 },
            MonotoneMap::affine(
                DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]),
                dvector![0.3, -0.1],
            ),
            ConvexSet::new_ball(dvector![0.1, 0.2], 1.5).unwrap(),
        )
        .unwrap();
        for x in [dvector![0.0, 0.0], dvector![1.0, 0.5], dvector![-1.0, 1.0]] {
            let eval = eval_gap(&inst, &x).unwrap();
            assert!(eval.certified, "ball trust-region solve must certify");
            // cross-check against a fine polar grid on the disk
            let mut best = f64::NEG_INFINITY;
            for ir in 0..=60 {
                for it in 0..720 {
                    let r = 1.5 * ir as f64 / 60.0;
                    let t = std::f64::consts::TAU * it as f64 / 720.0;
                    let y = dvector![0.1 + r * t.cos(), 0.2 + r * t.sin()];
                    best = best.max(theta(&inst, &x, &y));
                }
            }
            assert!(
                (eval.value - best).abs() <= 2e-3,
                "trs {} vs grid {best}",
                eval.value
            );
        }
    }

    #[test]
    fn black_box_matches_certified_route_on_affine_instance() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]);
        let q = dvector![0.2, -0.7];
        let set = ConvexSet::new_box(dvector![-1.0, -1.0], dvector![1.0, 1.0]).unwrap();
        let certified = ProblemInstance::new(
            Objective::SquaredNorm { dim: 2 },
            MonotoneMap::affine(m.clone(), q.clone()),
            set.clone(),
        )
        .unwrap();
        let blackbox = ProblemInstance::new(
            Objective::SquaredNorm { dim: 2 },
            MonotoneMap::black_box(2, move |y: &DVector<f64>| &m * y + &q),
            set,
        )
        .unwrap();
        for x in [dvector![0.0, 0.0], dvector![0.7, -0.3]] {
            let a = eval_gap(&certified, &x).unwrap();
            let b = eval_gap(&blackbox, &x).unwrap();
            assert!(a.certified);
            assert!(!b.certified);
            assert!(
                (a.value - b.value).abs() <= 1e-4,
                "{} vs {}",
                a.value,
                b.value
            );
        }
    }

    #[test]
    fn nonnegative_on_the_set() {
        let inst = crate::model::random_affine_instance(3, 99);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let x = inst.set().sample(&mut rng);
            let eval = eval_gap(&inst, &x).unwrap();
            assert!(eval.value >= -1e-8);
            for y in &eval.maximizers {
                assert!(theta(&inst, &x, y) >= eval.value - DEFAULT_ARGMAX_TOL - 1e-12);
            }
        }
        let _: f64 = rng.gen_range(0.0..1.0);
    }
}
