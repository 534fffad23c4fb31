//! Optimality certificates and diagnostics for bilevel solutions.
//!
//! All certificates here turn existence statements into checkable numerics:
//! multipliers are found by minimizing the stationarity residual
//! `|| u + sum_i lambda_i F(y_i) + w ||` over the objective subdifferential
//! box, nonnegative multipliers, and the normal cone — a jointly convex
//! problem solved by block-coordinate descent (clamp / NNLS / cone
//! projection). A certificate is *sound*: a residual within tolerance
//! implies optimality by the sufficient direction of the underlying
//! theorems. It is not complete — the necessary direction requires a
//! constraint qualification, and the weak-BCQ diagnostic reports exactly
//! when that hypothesis fails.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::gap;
use crate::hull;
use crate::model::{ConeBoundary, ProblemInstance, MEMBERSHIP_TOL};
use crate::nnls;
use crate::solver::SolveTrace;
use crate::{Error, Result};

/// Default certification tolerance.
pub const DEFAULT_CERT_TOL: f64 = 1e-6;

/// Multiplier certificate for the inclusion
/// `0 in df(x) + sum_i lambda_i F(y_i) + N_C(x)` with the complementarity
/// conditions `<F(y_i), x - y_i> = 0` enforced up to `tol`.
#[derive(Debug, Clone, Serialize)]
pub struct KktCertificate {
    /// The candidate solution the certificate was built at.
    pub point: DVector<f64>,
    /// Lower-level points `y_i` carrying the multipliers (at most `n + 1`).
    pub points: Vec<DVector<f64>>,
    pub multipliers: Vec<f64>,
    /// The chosen subgradient `u` of the objective at `point`.
    pub f_subgradient: DVector<f64>,
    /// Distance from `-(u + sum lambda_i F(y_i))` to `N_C(point)`.
    pub stationarity_residual: f64,
    /// `max_i |<F(y_i), point - y_i>|`.
    pub complementarity_residual: f64,
    pub tol: f64,
    pub certified: bool,
}

/// Certificate of the inclusion `-sum_i beta_i F(y_i) in df(x) + N_C(x)`
/// with `y_i` near-maximizers, plus its scalar form: `y* = sum beta_i`
/// multiplying a convex combination of the `F(y_i)`.
#[derive(Debug, Clone, Serialize)]
pub struct MultiplierCertificate {
    pub point: DVector<f64>,
    pub points: Vec<DVector<f64>>,
    pub betas: Vec<f64>,
    pub f_subgradient: DVector<f64>,
    pub residual: f64,
    /// `sum beta_i`, the single multiplier of the scalar form.
    pub scalar_multiplier: f64,
    /// `beta_i / sum beta` when the sum is positive.
    pub convex_weights: Option<Vec<f64>>,
    pub tol: f64,
    pub certified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BcqVerdict {
    Holds,
    Fails,
    Inconclusive,
}

/// Outcome of the weak basic constraint qualification test
/// `dg_D(x) intersect -bd N_C(x) = empty` at a point.
#[derive(Debug, Clone, Serialize)]
pub struct WeakBcqDiagnostic {
    pub point: DVector<f64>,
    /// Hull generators of the subdifferential sample: `F(y)` over the
    /// near-maximizer sample.
    pub subdifferential_sample: Vec<DVector<f64>>,
    /// Number of relative-boundary faces examined; zero when the normal
    /// cone is a subspace of positive dimension (empty relative boundary).
    pub face_count: usize,
    /// Minimum distance between the subdifferential hull and the negated
    /// boundary; `None` when there are no faces.
    pub min_distance: Option<f64>,
    pub verdict: BcqVerdict,
    /// A point in (or within `tol` of) the intersection when the
    /// qualification fails.
    pub witness: Option<DVector<f64>>,
    pub tol: f64,
}

/// Solution-set membership checks relative to a certified point.
#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport {
    pub candidate: DVector<f64>,
    pub reference: DVector<f64>,
    pub in_set: bool,
    /// Distance from zero to the interval `{<u, x - ref> : u in df(x)}`.
    pub orthogonality_residual: f64,
    pub orthogonality_ok: bool,
    /// `max_i |<F(y_i), x - y_i>|` over the certificate points.
    pub complementarity_residual: f64,
    pub complementarity_ok: bool,
    pub gap_value: f64,
    pub gap_ok: bool,
    pub tol: f64,
    pub verdict: bool,
}

/// Residual sequences of the sequential optimality conditions evaluated on
/// a solve trace, instantiated with `lambda_k = eps_k` and `y_k = x_k`.
#[derive(Debug, Clone, Serialize)]
pub struct SequentialResiduals {
    pub reference: DVector<f64>,
    pub entries: Vec<SequentialEntry>,
    /// Maximum absolute residuals over the last (up to) 10 iterations.
    pub tail: TailMaxima,
}

#[derive(Debug, Clone, Serialize)]
pub struct SequentialEntry {
    pub k: usize,
    /// `|| u + eps_k * (sum mu_i F(y_i)) + w_k ||`.
    pub r1: f64,
    /// `|| x_k - reference ||`.
    pub r2: f64,
    /// `eps_k g_D(x_k) - <eps_k sum mu_i F(y_i), x_k - reference>`.
    pub r3: f64,
    /// `<w_k, x_k - reference>`.
    pub r4: f64,
    pub hull_support: usize,
    pub hull_weight_sum: f64,
    pub hull_min_weight: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailMaxima {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
}

impl TailMaxima {
    pub fn max(&self) -> f64 {
        self.r1.max(self.r2).max(self.r3).max(self.r4)
    }
}

/// Builds a KKT-style certificate at `x_bar`, which must solve the lower
/// level up to `tol` (`g_D(x_bar) <= tol`). Candidate points come from the
/// enriched near-maximizer sample filtered by complementarity; multipliers
/// minimize the stationarity residual.
pub fn kkt_certificate(
    inst: &ProblemInstance,
    x_bar: &DVector<f64>,
    tol: f64,
) -> Result<KktCertificate> {
    let fit = fit_inclusion(inst, x_bar, tol)?;
    let complementarity_residual = fit
        .points
        .iter()
        .map(|y| theta(inst, x_bar, y).abs())
        .fold(0.0f64, f64::max);
    let certified = fit.residual.max(complementarity_residual) <= tol;
    Ok(KktCertificate {
        point: x_bar.clone(),
        points: fit.points,
        multipliers: fit.multipliers,
        f_subgradient: fit.u,
        stationarity_residual: fit.residual,
        complementarity_residual,
        tol,
        certified,
    })
}

/// The hull-multiplier form of the certificate: reports the same inclusion
/// fit together with its scalar multiplier decomposition.
pub fn multiplier_certificate(
    inst: &ProblemInstance,
    x_bar: &DVector<f64>,
    tol: f64,
) -> Result<MultiplierCertificate> {
    let fit = fit_inclusion(inst, x_bar, tol)?;
    let scalar_multiplier: f64 = fit.multipliers.iter().sum();
    let convex_weights = if scalar_multiplier > 0.0 {
        Some(
            fit.multipliers
                .iter()
                .map(|&b| b / scalar_multiplier)
                .collect(),
        )
    } else {
        None
    };
    let certified = fit.residual <= tol;
    Ok(MultiplierCertificate {
        point: x_bar.clone(),
        points: fit.points,
        betas: fit.multipliers,
        f_subgradient: fit.u,
        residual: fit.residual,
        scalar_multiplier,
        convex_weights,
        tol,
        certified,
    })
}

/// Tests the weak basic constraint qualification at `x_bar`: the sampled
/// subdifferential hull of `g_D` must stay clear of the negated relative
/// boundary of `N_C(x_bar)`.
pub fn weak_bcq_check(
    inst: &ProblemInstance,
    x_bar: &DVector<f64>,
    tol: f64,
) -> Result<WeakBcqDiagnostic> {
    let eval = gap::eval_gap_enriched(inst, x_bar, tol.max(1e-12))?;
    let mut sample: Vec<DVector<f64>> = Vec::new();
    for y in &eval.maximizers {
        let fy = inst.map().eval(y);
        if !sample.iter().any(|g| (g - &fy).norm() <= 1e-12) {
            sample.push(fy);
        }
    }
    let boundary = inst.set().normal_cone_boundary(x_bar)?;
    let (face_count, min_distance, witness) = match &boundary {
        ConeBoundary::Empty => (0, None, None),
        ConeBoundary::Faces(faces) => {
            let mut best = f64::INFINITY;
            let mut witness = None;
            for face in faces {
                // distance to the negated face
                let neg: Vec<DVector<f64>> = face.iter().map(|g| -g).collect();
                let (d, _, cone_point) = hull_cone_distance(&sample, &neg);
                if d < best {
                    best = d;
                    witness = Some(cone_point);
                }
            }
            (faces.len(), Some(best), witness)
        }
    };
    let verdict = match min_distance {
        None => BcqVerdict::Holds,
        Some(d) if d > tol => {
            if eval.certified {
                BcqVerdict::Holds
            } else {
                BcqVerdict::Inconclusive
            }
        }
        Some(_) => BcqVerdict::Fails,
    };
    Ok(WeakBcqDiagnostic {
        point: x_bar.clone(),
        subdifferential_sample: sample,
        face_count,
        min_distance,
        verdict,
        witness: if verdict == BcqVerdict::Fails {
            witness
        } else {
            None
        },
        tol,
    })
}

/// Evaluates the solution-set characterization at `x`, relative to the
/// certified point and points of `cert`.
pub fn membership_check(
    inst: &ProblemInstance,
    cert: &KktCertificate,
    x: &DVector<f64>,
    tol: f64,
) -> Result<MembershipReport> {
    if !cert.certified {
        return Err(Error::UncertifiedInput);
    }
    let x_bar = &cert.point;
    let in_set = inst.set().contains(x, tol.max(MEMBERSHIP_TOL));

    // does some u in df(x) satisfy <u, x - x_bar> = 0? The subdifferential
    // is a product of intervals, so the attainable inner products form an
    // interval themselves.
    let d = x - x_bar;
    let (lo, hi) = inst.objective().subdifferential_box(x);
    let mut range_lo = 0.0;
    let mut range_hi = 0.0;
    for i in 0..d.len() {
        let a = lo[i] * d[i];
        let b = hi[i] * d[i];
        range_lo += a.min(b);
        range_hi += a.max(b);
    }
    let orthogonality_residual = if range_lo <= 0.0 && 0.0 <= range_hi {
        0.0
    } else {
        range_lo.abs().min(range_hi.abs())
    };
    let orthogonality_ok = orthogonality_residual <= tol;

    let complementarity_residual = cert
        .points
        .iter()
        .map(|y| inst.map().eval(y).dot(&(x - y)).abs())
        .fold(0.0f64, f64::max);
    let complementarity_ok = complementarity_residual <= tol;

    let gap_value = gap::eval_gap(inst, x)?.value;
    let gap_ok = gap_value <= tol;

    Ok(MembershipReport {
        candidate: x.clone(),
        reference: x_bar.clone(),
        in_set,
        orthogonality_residual,
        orthogonality_ok,
        complementarity_residual,
        complementarity_ok,
        gap_value,
        gap_ok,
        tol,
        verdict: in_set && orthogonality_ok && complementarity_ok && gap_ok,
    })
}

/// Instantiates the sequential optimality quantities along a solve trace:
/// `lambda_k = eps_k`, `y_k = x_k`, the trace subgradient `v_k` re-expressed
/// through a Caratheodory combination of map values at near-maximizers, and
/// `w_k = -u_k - eps_k v_k`. The reference defaults to the terminal point.
pub fn sequential_residuals(
    inst: &ProblemInstance,
    trace: &SolveTrace,
    reference: Option<&DVector<f64>>,
) -> Result<SequentialResiduals> {
    if trace.entries.is_empty() {
        return Err(Error::InvalidConfig(
            "sequential residuals need a nonempty trace".into(),
        ));
    }
    let x_ref = reference
        .cloned()
        .unwrap_or_else(|| trace.terminal().x.clone());

    // the limiting objective subgradient: the element of df(reference)
    // closest to the terminal trace subgradient
    let (lo, hi) = inst.objective().subdifferential_box(&x_ref);
    let u_term = &trace.terminal().f_subgradient;
    let u = DVector::from_fn(x_ref.len(), |i, _| u_term[i].clamp(lo[i], hi[i]));

    let mut entries = Vec::with_capacity(trace.entries.len());
    for e in &trace.entries {
        let sample = gap::argmax_set(inst, &e.x, gap::DEFAULT_ARGMAX_TOL)?;
        let mut gens: Vec<DVector<f64>> = sample.iter().map(|y| inst.map().eval(y)).collect();
        // the trace subgradient is the map value at a recorded maximizer and
        // thus itself a hull generator
        gens.push(e.gap_subgradient.clone());
        let combo = hull::caratheodory_reduce(&gens, &e.gap_subgradient)?;
        let weight_sum: f64 = combo.weights.iter().sum();
        let min_weight = combo.weights.iter().copied().fold(f64::INFINITY, f64::min);

        let v_scaled = combo.combined() * e.epsilon;
        let w = e.recovered_normal();
        let r1 = (&u + &v_scaled + &w).norm();
        let r2 = (&e.x - &x_ref).norm();
        let r3 = e.epsilon * e.gap - v_scaled.dot(&(&e.x - &x_ref));
        let r4 = w.dot(&(&e.x - &x_ref));
        entries.push(SequentialEntry {
            k: e.k,
            r1,
            r2,
            r3,
            r4,
            hull_support: combo.points.len(),
            hull_weight_sum: weight_sum,
            hull_min_weight: min_weight,
        });
    }

    let tail_from = entries.len().saturating_sub(10);
    let tail_slice = &entries[tail_from..];
    let tail = TailMaxima {
        r1: tail_slice.iter().map(|e| e.r1.abs()).fold(0.0, f64::max),
        r2: tail_slice.iter().map(|e| e.r2.abs()).fold(0.0, f64::max),
        r3: tail_slice.iter().map(|e| e.r3.abs()).fold(0.0, f64::max),
        r4: tail_slice.iter().map(|e| e.r4.abs()).fold(0.0, f64::max),
    };
    Ok(SequentialResiduals {
        reference: x_ref,
        entries,
        tail,
    })
}

fn theta(inst: &ProblemInstance, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    inst.map().eval(y).dot(&(x - y))
}

struct InclusionFit {
    points: Vec<DVector<f64>>,
    multipliers: Vec<f64>,
    u: DVector<f64>,
    residual: f64,
}

/// Minimizes `|| u + sum_i lambda_i F(y_i) + w ||` over `u` in the
/// subdifferential box of the objective at `x_bar`, `lambda >= 0`, and
/// `w in N_C(x_bar)`, with candidates `y_i` drawn from the near-maximizer
/// sample filtered by complementarity. The support is pruned to at most
/// `n + 1` points.
fn fit_inclusion(inst: &ProblemInstance, x_bar: &DVector<f64>, tol: f64) -> Result<InclusionFit> {
    let n = inst.dim();
    let set = inst.set();
    if !set.contains(x_bar, MEMBERSHIP_TOL) {
        return Err(Error::NotInSet {
            residual: set.membership_residual(x_bar),
            tol: MEMBERSHIP_TOL,
        });
    }
    let eval = gap::eval_gap_enriched(inst, x_bar, tol)?;
    if eval.value > tol {
        return Err(Error::LowerLevelInfeasible {
            gap: eval.value,
            tol,
        });
    }
    let candidates: Vec<DVector<f64>> = eval
        .maximizers
        .iter()
        .filter(|y| theta(inst, x_bar, y).abs() <= tol)
        .cloned()
        .collect();
    let first_maximizer = eval.maximizers[0].clone();

    let (lo, hi) = inst.objective().subdifferential_box(x_bar);
    let clamp_u = |z: &DVector<f64>| DVector::from_fn(n, |i, _| z[i].clamp(lo[i], hi[i]));

    let gens: Vec<DVector<f64>> = candidates.iter().map(|y| inst.map().eval(y)).collect();
    let g_mat = if gens.is_empty() {
        None
    } else {
        Some(DMatrix::from_columns(&gens))
    };

    // block-coordinate descent on the jointly convex residual
    let mut u = clamp_u(&inst.objective().subgradient(x_bar));
    let mut lambda = DVector::<f64>::zeros(gens.len());
    let mut w = set.normal_cone_project(x_bar, &(-&u))?;
    let mut prev = f64::INFINITY;
    for _ in 0..500 {
        if let Some(g) = &g_mat {
            let target = -&u - &w;
            lambda = nnls::solve(g, &target);
        }
        let g_lambda = match &g_mat {
            Some(g) => g * &lambda,
            None => DVector::zeros(n),
        };
        w = set.normal_cone_project(x_bar, &(-&u - &g_lambda))?;
        u = clamp_u(&(-&g_lambda - &w));
        let r = (&u + &g_lambda + &w).norm();
        if (prev - r).abs() <= 1e-16 * (1.0 + r) {
            break;
        }
        prev = r;
    }

    // residual as the distance from -(u + G lambda) to the normal cone
    let g_lambda = match &g_mat {
        Some(g) => g * &lambda,
        None => DVector::zeros(n),
    };
    let z = -&u - &g_lambda;
    let w_final = set.normal_cone_project(x_bar, &z)?;
    let residual = (&z - &w_final).norm();

    // keep the support, pruned to at most n + 1 by cone pivoting
    let mut support: Vec<usize> = (0..gens.len()).filter(|&i| lambda[i] > 1e-14).collect();
    let mut weights: Vec<f64> = lambda.iter().copied().collect();
    while support.len() > n + 1 {
        let cols: Vec<DVector<f64>> = support.iter().map(|&i| gens[i].clone()).collect();
        let mat = DMatrix::from_columns(&cols);
        let Some(zv) = cone_null_vector(&mat) else {
            break;
        };
        let mut theta_step = f64::INFINITY;
        let mut sign = 1.0;
        for (c, &i) in support.iter().enumerate() {
            if zv[c] > 1e-14 {
                theta_step = theta_step.min(weights[i] / zv[c]);
            }
        }
        if !theta_step.is_finite() {
            sign = -1.0;
            theta_step = f64::INFINITY;
            for (c, &i) in support.iter().enumerate() {
                if -zv[c] > 1e-14 {
                    theta_step = theta_step.min(weights[i] / -zv[c]);
                }
            }
        }
        if !theta_step.is_finite() {
            break;
        }
        for (c, &i) in support.iter().enumerate() {
            weights[i] -= theta_step * sign * zv[c];
            if weights[i] < 1e-13 {
                weights[i] = 0.0;
            }
        }
        support.retain(|&i| weights[i] > 0.0);
    }

    let mut points: Vec<DVector<f64>> = support.iter().map(|&i| candidates[i].clone()).collect();
    let mut multipliers: Vec<f64> = support.iter().map(|&i| weights[i]).collect();
    if points.is_empty() {
        points.push(first_maximizer);
        multipliers.push(0.0);
    }
    Ok(InclusionFit {
        points,
        multipliers,
        u,
        residual,
    })
}

/// A null vector of the columns of `mat`, if linearly dependent.
fn cone_null_vector(mat: &DMatrix<f64>) -> Option<DVector<f64>> {
    let svd = mat.clone().svd(false, true);
    let v_t = svd.v_t.as_ref()?;
    let smin = svd
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if svd.singular_values.len() < mat.ncols()
        || smin <= 1e-10 * svd.singular_values.max().max(1.0)
    {
        let z = v_t.row(v_t.nrows() - 1).transpose();
        if z.norm() > 0.5 {
            return Some(z);
        }
    }
    None
}

/// Minimum distance between the convex hull of `hull_gens` and the cone
/// generated by `cone_gens`, by alternating exact projections. Returns the
/// distance and the closest pair (hull point, cone point).
fn hull_cone_distance(
    hull_gens: &[DVector<f64>],
    cone_gens: &[DVector<f64>],
) -> (f64, DVector<f64>, DVector<f64>) {
    let n = hull_gens[0].len();
    let k = hull_gens.len();
    let g = DMatrix::from_columns(hull_gens);
    // Lipschitz constant of the weight gradient
    let lip = {
        let svd = g.clone().svd(false, false);
        let s = svd.singular_values.max();
        (s * s).max(1e-12)
    };
    let project_hull = |b: &DVector<f64>, w0: &DVector<f64>| -> (DVector<f64>, DVector<f64>) {
        // min_w ||G w - b||^2 over the weight simplex, projected gradient
        let mut w = w0.clone();
        for _ in 0..2000 {
            let grad = g.transpose() * (&g * &w - b);
            let step = &w - &grad * (1.0 / lip);
            let next = crate::model::project_simplex(&step, k, 1.0);
            if (&next - &w).norm() <= 1e-15 {
                w = next;
                break;
            }
            w = next;
        }
        (&g * &w, w)
    };

    let mut w = DVector::from_element(k, 1.0 / k as f64);
    let mut h = &g * &w;
    let mut b = DVector::zeros(n);
    let mut dist = f64::INFINITY;
    for _ in 0..300 {
        b = nnls::project_onto_cone(cone_gens, &h);
        let (h_new, w_new) = project_hull(&b, &w);
        h = h_new;
        w = w_new;
        let d = (&h - &b).norm();
        if (dist - d).abs() <= 1e-14 * (1.0 + d) {
            dist = d;
            break;
        }
        dist = d;
    }
    (dist, h, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConvexSet, MonotoneMap, Objective};
    use crate::solver::{solve_smpec, SolveConfig};
    use nalgebra::dvector;

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

    fn constant_field_2d() -> ProblemInstance {
        ProblemInstance::new(
            Objective::SquaredNorm { dim: 2 },
            MonotoneMap::constant(dvector![1.0, 1.0]),
            ConvexSet::new_box(dvector![0.0, 0.0], dvector![1.0, 1.0]).unwrap(),
        )
        .unwrap()
    }

    fn sparse_recovery_2d() -> ProblemInstance {
        // min ||x||_1 over argmin ||x1 + x2 - 1||^2, box-wrapped
        ProblemInstance::new(
            Objective::L1 { dim: 2 },
            MonotoneMap::grad_quadratic(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), dvector![1.0]),
            ConvexSet::new_box(dvector![-10.0, -10.0], dvector![10.0, 10.0]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn kkt_certifies_corner_solution_with_zero_multiplier() {
        let inst = constant_field_2d();
        let cert = kkt_certificate(&inst, &dvector![0.0, 0.0], 1e-6).unwrap();
        assert!(cert.certified);
        assert!(cert.stationarity_residual <= 1e-9);
        assert!(cert.complementarity_residual <= 1e-9);
        // 0 already lies in df(0) + N_C(0): zero multipliers suffice
        assert!(cert.multipliers.iter().all(|&l| l.abs() <= 1e-9));
        assert!(cert.points.len() <= 3);
    }

    #[test]
    fn kkt_certifies_interior_minimum_of_f_when_map_vanishes() {
        let anchor = dvector![0.2, -0.3];
        let inst = ProblemInstance::new(
            Objective::QuadraticDistance {
                anchor: anchor.clone(),
            },
            MonotoneMap::constant(dvector![0.0, 0.0]),
            ConvexSet::new_box(dvector![-1.0, -1.0], dvector![1.0, 1.0]).unwrap(),
        )
        .unwrap();
        let cert = kkt_certificate(&inst, &anchor, 1e-6).unwrap();
        assert!(cert.certified);
        assert!(cert.multipliers.iter().all(|&l| l.abs() <= 1e-9));
    }

    #[test]
    fn kkt_rejects_lower_level_infeasible_point() {
        let inst = constant_field_2d();
        let err = kkt_certificate(&inst, &dvector![0.5, 0.5], 1e-6).unwrap_err();
        assert!(matches!(err, Error::LowerLevelInfeasible { .. }));
    }

    #[test]
    fn kkt_certifies_flat_gap_solution_through_near_maximizers() {
        // the optimal l1 point needs large multipliers on near-maximizers
        // whose map values are tiny but nonzero
        let inst = sparse_recovery_2d();
        let cert = kkt_certificate(&inst, &dvector![0.5, 0.5], 1e-6).unwrap();
        assert!(
            cert.certified,
            "stationarity {}, complementarity {}",
            cert.stationarity_residual, cert.complementarity_residual
        );
        assert!(cert.stationarity_residual <= 1e-6);
        assert!(cert.complementarity_residual <= 1e-6);
    }

    #[test]
    fn kkt_fails_at_suboptimal_feasible_point() {
        // (-0.1, 1.1) solves the lower level but has l1 value 1.2 > 1
        let inst = sparse_recovery_2d();
        let cert = kkt_certificate(&inst, &dvector![-0.1, 1.1], 1e-6).unwrap();
        assert!(!cert.certified);
        assert!(cert.stationarity_residual > 0.1);
    }

    #[test]
    fn multiplier_certificate_scalar_form() {
        let inst = constant_field_2d();
        let cert = multiplier_certificate(&inst, &dvector![0.0, 0.0], 1e-6).unwrap();
        assert!(cert.certified);
        assert!(cert.residual <= 1e-9);
        assert!(cert.scalar_multiplier.abs() <= 1e-9);
        assert!(cert.convex_weights.is_none());
        // consistency with the KKT certificate at the same point
        let kkt = kkt_certificate(&inst, &dvector![0.0, 0.0], 1e-6).unwrap();
        assert!(kkt.certified && cert.certified);
    }

    #[test]
    fn weak_bcq_fails_for_identity_map_at_interior_solution() {
        let inst = saturation_1d();
        let diag = weak_bcq_check(&inst, &dvector![0.0], 1e-6).unwrap();
        assert_eq!(diag.verdict, BcqVerdict::Fails);
        let witness = diag.witness.unwrap();
        assert!(witness.norm() <= 1e-6);
    }

    #[test]
    fn weak_bcq_holds_for_constant_field_at_corner() {
        let inst = constant_field_2d();
        let diag = weak_bcq_check(&inst, &dvector![0.0, 0.0], 1e-6).unwrap();
        assert_eq!(diag.verdict, BcqVerdict::Holds);
        // hull {(1,1)}, boundary rays {(t,0)} and {(0,t)}: distance 1
        let d = diag.min_distance.unwrap();
        assert!((d - 1.0).abs() <= 1e-6, "distance {d}");
    }

    #[test]
    fn weak_bcq_interior_point_reports_zero_cone() {
        // x interior: N_C = {0}, bd = {0}; F(x) far from 0 keeps it clear
        let inst = constant_field_2d();
        let diag = weak_bcq_check(&inst, &dvector![0.5, 0.5], 1e-6).unwrap();
        assert_eq!(diag.face_count, 1);
        // hull = {(1,1)}: distance from {0} is sqrt(2)
        let d = diag.min_distance.unwrap();
        assert!((d - 2.0f64.sqrt()).abs() <= 1e-6);
        assert_eq!(diag.verdict, BcqVerdict::Holds);
    }

    #[test]
    fn membership_accepts_optimal_segment_and_rejects_outside() {
        let inst = sparse_recovery_2d();
        let cert = kkt_certificate(&inst, &dvector![0.5, 0.5], 1e-6).unwrap();
        assert!(cert.certified);
        let tol = 1e-5;
        for good in [dvector![0.2, 0.8], dvector![0.5, 0.5], dvector![1.0, 0.0]] {
            let rep = membership_check(&inst, &cert, &good, tol).unwrap();
            assert!(rep.verdict, "expected acceptance of {good:?}: {rep:?}");
        }
        let rep = membership_check(&inst, &cert, &dvector![1.5, -0.5], tol).unwrap();
        assert!(!rep.verdict);
        assert!(!rep.orthogonality_ok);
        // reference itself is trivially a member
        let rep = membership_check(&inst, &cert, &cert.point.clone(), tol).unwrap();
        assert!(rep.verdict);
    }

    #[test]
    fn membership_requires_certified_input() {
        let inst = sparse_recovery_2d();
        let mut cert = kkt_certificate(&inst, &dvector![0.5, 0.5], 1e-6).unwrap();
        cert.certified = false;
        assert!(matches!(
            membership_check(&inst, &cert, &dvector![0.5, 0.5], 1e-6),
            Err(Error::UncertifiedInput)
        ));
    }

    #[test]
    fn sequential_residuals_vanish_on_stationary_single_step() {
        // start at the solution of both levels: residuals are exactly zero
        let inst = constant_field_2d();
        let cfg = SolveConfig {
            start: Some(dvector![0.0, 0.0]),
            max_outer: 1,
            ..SolveConfig::default()
        };
        let trace = solve_smpec(&inst, &cfg).unwrap();
        let res = sequential_residuals(&inst, &trace, None).unwrap();
        assert!(res.tail.max() <= 1e-8, "tail {:?}", res.tail);
        for e in &res.entries {
            assert!((e.hull_weight_sum - 1.0).abs() <= 1e-12);
            assert!(e.hull_min_weight >= 0.0);
            assert!(e.hull_support <= 3);
        }
    }

    #[test]
    fn sequential_residuals_reported_without_verdict_on_truncated_run() {
        let inst = ProblemInstance::new(
            Objective::QuadraticDistance {
                anchor: dvector![1.0, 1.0],
            },
            MonotoneMap::constant(dvector![1.0, 1.0]),
            ConvexSet::new_box(dvector![0.0, 0.0], dvector![1.0, 1.0]).unwrap(),
        )
        .unwrap();
        let cfg = SolveConfig {
            epsilon0: 0.5,
            mu: 0.0,
            max_outer: 3,
            ..SolveConfig::default()
        };
        let trace = solve_smpec(&inst, &cfg).unwrap();
        assert_eq!(trace.entries.len(), 3);
        let res = sequential_residuals(&inst, &trace, None).unwrap();
        assert_eq!(res.entries.len(), 3);
        // truncated run: residuals exist but do not certify anything
        assert!(res.tail.max() > 1e-3);
    }

    #[test]
    fn reports_serialize_to_json() {
        let inst = constant_field_2d();
        let cert = kkt_certificate(&inst, &dvector![0.0, 0.0], 1e-6).unwrap();
        let text = serde_json::to_string_pretty(&cert).unwrap();
        assert!(text.contains("stationarity_residual"));
        let diag = weak_bcq_check(&inst, &dvector![0.0, 0.0], 1e-6).unwrap();
        let text = serde_json::to_string_pretty(&diag).unwrap();
        assert!(text.contains("verdict"));
    }
}
