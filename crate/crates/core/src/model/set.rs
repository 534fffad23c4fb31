//! Closed convex feasible sets with the oracles every method in this crate
//! relies on: Euclidean projection, linear minimization (Frank-Wolfe oracle),
//! normal cone projection, membership tests and deterministic sampling.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::linprog::{self, LpOutcome};
use crate::nnls;
use crate::{Error, Result};

/// Membership tolerance guaranteed by every oracle that returns points of the set.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Tolerance used to decide whether a bound/constraint is active at a point.
const ACTIVE_TOL: f64 = 1e-8;

/// A closed convex subset of R^n.
#[derive(Debug, Clone)]
pub enum ConvexSet {
    /// `{ x : lower <= x <= upper }` componentwise.
    Box {
        lower: DVector<f64>,
        upper: DVector<f64>,
    },
    /// `{ x : ||x - center|| <= radius }`.
    Ball { center: DVector<f64>, radius: f64 },
    /// `{ x : A x <= b }`. `bounds` caches per-coordinate ranges once a
    /// boundedness check has succeeded; `None` means unbounded (or unchecked).
    Polytope {
        a: DMatrix<f64>,
        b: DVector<f64>,
        bounds: Option<(DVector<f64>, DVector<f64>)>,
    },
    /// `{ x : x >= 0, sum x = scale }`.
    Simplex { dim: usize, scale: f64 },
}

impl ConvexSet {
    pub fn new_box(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                context: "box bounds",
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::InvalidInstance(
                "box lower bound exceeds upper bound".into(),
            ));
        }
        Ok(ConvexSet::Box { lower, upper })
    }

    pub fn new_ball(center: DVector<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidInstance("ball radius must be positive".into()));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    /// Builds a polytope and runs the boundedness check (one pair of LPs per
    /// coordinate). Unbounded polytopes are still constructed — validation
    /// and instance wrapping deal with them — but carry no cached bounds.
    pub fn new_polytope(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                context: "polytope rows",
                expected: a.nrows(),
                got: b.len(),
            });
        }
        let mut set = ConvexSet::Polytope { a, b, bounds: None };
        let bounds = set.compute_polytope_bounds()?;
        if let ConvexSet::Polytope {
            bounds: ref mut slot,
            ..
        } = set
        {
            *slot = bounds;
        }
        Ok(set)
    }

    pub fn new_simplex(dim: usize, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidInstance(
                "simplex scale must be positive".into(),
            ));
        }
        Ok(ConvexSet::Simplex { dim, scale })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lower, .. } => lower.len(),
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::Polytope { a, .. } => a.ncols(),
            ConvexSet::Simplex { dim, .. } => *dim,
        }
    }

    /// Constraint violation of `x`; zero (up to rounding) iff `x` is a member.
    pub fn membership_residual(&self, x: &DVector<f64>) -> f64 {
        match self {
            ConvexSet::Box { lower, upper } => {
                let mut r: f64 = 0.0;
                for i in 0..lower.len() {
                    r = r.max(lower[i] - x[i]).max(x[i] - upper[i]);
                }
                r.max(0.0)
            }
            ConvexSet::Ball { center, radius } => ((x - center).norm() - radius).max(0.0),
            ConvexSet::Polytope { a, b, .. } => {
                let v = a * x - b;
                v.iter().fold(0.0f64, |acc, &t| acc.max(t))
            }
            ConvexSet::Simplex { scale, .. } => {
                let neg = x.iter().fold(0.0f64, |acc, &t| acc.max(-t));
                neg.max((x.sum() - scale).abs())
            }
        }
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.dim() && self.membership_residual(x) <= tol
    }

    fn check_member(&self, x: &DVector<f64>) -> Result<()> {
        let residual = self.membership_residual(x);
        if residual > MEMBERSHIP_TOL {
            return Err(Error::NotInSet {
                residual,
                tol: MEMBERSHIP_TOL,
            });
        }
        Ok(())
    }

    /// Euclidean projection onto the set. Closed form for box, ball and
    /// simplex; Dykstra's alternating method over the halfspaces for
    /// polytopes.
    pub fn project(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            ConvexSet::Box { lower, upper } => {
                let mut p = z.clone();
                for i in 0..p.len() {
                    p[i] = p[i].clamp(lower[i], upper[i]);
                }
                Ok(p)
            }
            ConvexSet::Ball { center, radius } => {
                let d = z - center;
                let n = d.norm();
                if n <= *radius {
                    Ok(z.clone())
                } else {
                    Ok(center + d * (*radius / n))
                }
            }
            ConvexSet::Simplex { dim, scale } => Ok(project_simplex(z, *dim, *scale)),
            ConvexSet::Polytope { a, b, .. } => project_polytope_dykstra(a, b, z),
        }
    }

    /// A minimizer of `<c, y>` over the set, at an extreme point whenever the
    /// set has extreme points. Ties are broken toward the lexicographically
    /// smallest coordinate vector so that results are reproducible.
    pub fn linear_minimizer(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            ConvexSet::Box { lower, upper } => {
                let mut v = DVector::zeros(lower.len());
                for i in 0..v.len() {
                    v[i] = if c[i] > 0.0 {
                        lower[i]
                    } else if c[i] < 0.0 {
                        upper[i]
                    } else {
                        lower[i]
                    };
                }
                Ok(v)
            }
            ConvexSet::Ball { center, radius } => {
                let n = c.norm();
                if n > 0.0 {
                    Ok(center - c * (*radius / n))
                } else {
                    let mut v = center.clone();
                    v[0] -= radius;
                    Ok(v)
                }
            }
            ConvexSet::Simplex { dim, scale } => {
                // Vertices are scale * e_i; among tied objective values the
                // vertex with the largest index is lexicographically smallest.
                let mut best = 0usize;
                for i in 1..*dim {
                    if c[i] < c[best] - 0.0 || (c[i] == c[best] && i > best) {
                        best = i;
                    }
                }
                let mut v = DVector::zeros(*dim);
                v[best] = *scale;
                Ok(v)
            }
            ConvexSet::Polytope { a, b, bounds } => {
                if bounds.is_none() {
                    return Err(Error::UnboundedSet(
                        "linear minimization over an unbounded polytope".into(),
                    ));
                }
                lp_lex_minimizer(a, b, c)
            }
        }
    }

    /// Projection of `v` onto the normal cone `N_C(x)`; requires `x` to be a
    /// member of the set.
    pub fn normal_cone_project(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_member(x)?;
        match self {
            ConvexSet::Box { lower, upper } => {
                let mut p = DVector::zeros(v.len());
                for i in 0..v.len() {
                    let at_lower = x[i] - lower[i] <= ACTIVE_TOL * (1.0 + lower[i].abs());
                    let at_upper = upper[i] - x[i] <= ACTIVE_TOL * (1.0 + upper[i].abs());
                    p[i] = match (at_lower, at_upper) {
                        (true, true) => v[i],
                        (true, false) => v[i].min(0.0),
                        (false, true) => v[i].max(0.0),
                        (false, false) => 0.0,
                    };
                }
                Ok(p)
            }
            ConvexSet::Ball { center, radius } => {
                let d = x - center;
                let n = d.norm();
                if *radius - n <= ACTIVE_TOL * (1.0 + radius) {
                    let dir = d / n;
                    let t = v.dot(&dir).max(0.0);
                    Ok(dir * t)
                } else {
                    Ok(DVector::zeros(v.len()))
                }
            }
            ConvexSet::Simplex { scale, .. } => {
                let active: Vec<bool> = x.iter().map(|&xi| xi <= ACTIVE_TOL * (1.0 + scale)).collect();
                Ok(project_simplex_normal_cone(v, &active))
            }
            ConvexSet::Polytope { .. } => {
                let gens = self.normal_cone_generators(x)?;
                if gens.is_empty() {
                    return Ok(DVector::zeros(v.len()));
                }
                Ok(nnls::project_onto_cone(&gens, v))
            }
        }
    }

    /// Distance from `v` to `N_C(x)`; zero iff `v` is a normal vector at `x`.
    pub fn normal_cone_residual(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        let p = self.normal_cone_project(x, v)?;
        Ok((v - p).norm())
    }

    /// Generators of `N_C(x)` as a finitely generated cone. Lines appear as
    /// a pair of opposite generators. Empty means `N_C(x) = {0}`.
    pub fn normal_cone_generators(&self, x: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        self.check_member(x)?;
        let n = self.dim();
        let mut gens = Vec::new();
        match self {
            ConvexSet::Box { lower, upper } => {
                for i in 0..n {
                    let at_lower = x[i] - lower[i] <= ACTIVE_TOL * (1.0 + lower[i].abs());
                    let at_upper = upper[i] - x[i] <= ACTIVE_TOL * (1.0 + upper[i].abs());
                    let mut e = DVector::zeros(n);
                    if at_upper {
                        e[i] = 1.0;
                        gens.push(e.clone());
                    }
                    if at_lower {
                        e[i] = -1.0;
                        gens.push(e);
                    }
                }
            }
            ConvexSet::Ball { center, radius } => {
                let d = x - center;
                let nd = d.norm();
                if *radius - nd <= ACTIVE_TOL * (1.0 + radius) {
                    gens.push(d / nd);
                }
            }
            ConvexSet::Simplex { dim, scale } => {
                let ones = DVector::from_element(*dim, 1.0);
                gens.push(ones.clone());
                gens.push(-ones);
                for i in 0..*dim {
                    if x[i] <= ACTIVE_TOL * (1.0 + scale) {
                        let mut e = DVector::zeros(*dim);
                        e[i] = -1.0;
                        gens.push(e);
                    }
                }
            }
            ConvexSet::Polytope { a, b, .. } => {
                for i in 0..a.nrows() {
                    let row: DVector<f64> = a.row(i).transpose();
                    let slack = b[i] - row.dot(x);
                    if slack.abs() <= ACTIVE_TOL * (1.0 + b[i].abs()) {
                        let nr = row.norm();
                        if nr > 0.0 {
                            gens.push(row / nr);
                        }
                    }
                }
            }
        }
        Ok(gens)
    }

    /// Relative boundary of `N_C(x)` as a union of faces, each a finitely
    /// generated cone (an empty generator list is the face `{0}`; lines are
    /// encoded as opposite generator pairs).
    ///
    /// `Empty` means the cone is a positive-dimensional subspace, whose
    /// relative boundary is empty. The degenerate cone `{0}` reports the
    /// single face `{0}`, matching the convention that the boundary of a
    /// zero-dimensional set is the set itself.
    pub fn normal_cone_boundary(&self, x: &DVector<f64>) -> Result<ConeBoundary> {
        self.check_member(x)?;
        match self {
            ConvexSet::Box { lower, upper } => {
                let n = lower.len();
                let mut rays: Vec<DVector<f64>> = Vec::new(); // single-sided
                let mut lines: Vec<DVector<f64>> = Vec::new();
                for i in 0..n {
                    let at_lower = x[i] - lower[i] <= ACTIVE_TOL * (1.0 + lower[i].abs());
                    let at_upper = upper[i] - x[i] <= ACTIVE_TOL * (1.0 + upper[i].abs());
                    let mut e = DVector::zeros(n);
                    match (at_lower, at_upper) {
                        (true, true) => {
                            e[i] = 1.0;
                            lines.push(e);
                        }
                        (true, false) => {
                            e[i] = -1.0;
                            rays.push(e);
                        }
                        (false, true) => {
                            e[i] = 1.0;
                            rays.push(e);
                        }
                        (false, false) => {}
                    }
                }
                if rays.is_empty() {
                    return Ok(if lines.is_empty() {
                        ConeBoundary::Faces(vec![Vec::new()]) // N = {0}
                    } else {
                        ConeBoundary::Empty // subspace
                    });
                }
                // facets: drop one single-sided ray at a time
                let mut faces = Vec::with_capacity(rays.len());
                for drop in 0..rays.len() {
                    let mut gens: Vec<DVector<f64>> = Vec::new();
                    for (j, r) in rays.iter().enumerate() {
                        if j != drop {
                            gens.push(r.clone());
                        }
                    }
                    for l in &lines {
                        gens.push(l.clone());
                        gens.push(-l);
                    }
                    faces.push(gens);
                }
                Ok(ConeBoundary::Faces(faces))
            }
            ConvexSet::Ball { .. } => Ok(ConeBoundary::Faces(vec![Vec::new()])),
            ConvexSet::Simplex { dim, scale } => {
                let active: Vec<usize> = (0..*dim)
                    .filter(|&i| x[i] <= ACTIVE_TOL * (1.0 + scale))
                    .collect();
                if active.is_empty() {
                    return Ok(ConeBoundary::Empty); // N is the line R*1
                }
                let ones = DVector::from_element(*dim, 1.0);
                let mut faces = Vec::with_capacity(active.len());
                for &drop in &active {
                    let mut gens = vec![ones.clone(), -&ones];
                    for &i in &active {
                        if i != drop {
                            let mut e = DVector::zeros(*dim);
                            e[i] = -1.0;
                            gens.push(e);
                        }
                    }
                    faces.push(gens);
                }
                Ok(ConeBoundary::Faces(faces))
            }
            ConvexSet::Polytope { .. } => {
                let n = self.dim();
                if n > 3 {
                    return Err(Error::UnsupportedSetDimension { max: 3, got: n });
                }
                let gens = self.normal_cone_generators(x)?;
                Ok(generated_cone_boundary(&gens, n))
            }
        }
    }

    /// Componentwise lower/upper bounds of the set. Errors for unbounded
    /// polytopes.
    pub fn coordinate_bounds(&self) -> Result<(DVector<f64>, DVector<f64>)> {
        match self {
            ConvexSet::Box { lower, upper } => Ok((lower.clone(), upper.clone())),
            ConvexSet::Ball { center, radius } => Ok((
                center.map(|c| c - radius),
                center.map(|c| c + radius),
            )),
            ConvexSet::Simplex { dim, scale } => Ok((
                DVector::zeros(*dim),
                DVector::from_element(*dim, *scale),
            )),
            ConvexSet::Polytope { bounds, .. } => bounds
                .clone()
                .ok_or_else(|| Error::UnboundedSet("polytope has no finite coordinate bounds".into())),
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            ConvexSet::Polytope { bounds, .. } => bounds.is_some(),
            _ => true,
        }
    }

    pub fn diameter(&self) -> Result<f64> {
        match self {
            ConvexSet::Ball { radius, .. } => Ok(2.0 * radius),
            _ => {
                let (lo, hi) = self.coordinate_bounds()?;
                Ok((hi - lo).norm())
            }
        }
    }

    /// Intersects the set with the box `[-radius, radius]^n`. Used to wrap
    /// unbounded polytopes so the gap function stays finite.
    pub fn intersect_with_cube(&self, radius: f64) -> Result<ConvexSet> {
        let n = self.dim();
        match self {
            ConvexSet::Polytope { a, b, .. } => {
                let mut rows = Vec::with_capacity(a.nrows() + 2 * n);
                let mut rhs = Vec::with_capacity(a.nrows() + 2 * n);
                for i in 0..a.nrows() {
                    rows.push(a.row(i).transpose());
                    rhs.push(b[i]);
                }
                for i in 0..n {
                    let mut e = DVector::zeros(n);
                    e[i] = 1.0;
                    rows.push(e.clone());
                    rhs.push(radius);
                    e[i] = -1.0;
                    rows.push(e);
                    rhs.push(radius);
                }
                let a2 = DMatrix::from_rows(
                    &rows.iter().map(|r| r.transpose()).collect::<Vec<_>>(),
                );
                ConvexSet::new_polytope(a2, DVector::from_vec(rhs))
            }
            _ => Ok(self.clone()),
        }
    }

    /// Enumerates the extreme points when the set has finitely many and the
    /// count is manageable; `None` for balls or oversized enumerations.
    pub fn vertices(&self) -> Option<Vec<DVector<f64>>> {
        match self {
            ConvexSet::Box { lower, upper } => {
                let n = lower.len();
                if n > 12 {
                    return None;
                }
                let mut out = Vec::new();
                let mut v = lower.clone();
                enumerate_box_vertices(lower, upper, 0, &mut v, &mut out);
                Some(out)
            }
            ConvexSet::Simplex { dim, scale } => {
                let mut out = Vec::with_capacity(*dim);
                for i in 0..*dim {
                    let mut v = DVector::zeros(*dim);
                    v[i] = *scale;
                    out.push(v);
                }
                Some(out)
            }
            ConvexSet::Ball { .. } => None,
            ConvexSet::Polytope { a, b, bounds } => {
                bounds.as_ref()?;
                enumerate_polytope_vertices(a, b)
            }
        }
    }

    /// Draws a point of the set. The distribution is immaterial; membership
    /// and determinism (via the caller's seeded RNG) are what matter.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        match self {
            ConvexSet::Box { lower, upper } => {
                let mut v = DVector::zeros(lower.len());
                for i in 0..v.len() {
                    v[i] = if upper[i] > lower[i] {
                        rng.gen_range(lower[i]..=upper[i])
                    } else {
                        lower[i]
                    };
                }
                v
            }
            ConvexSet::Ball { center, radius } => {
                let n = center.len();
                let mut d = DVector::zeros(n);
                for i in 0..n {
                    // Box-Muller gaussian for a rotation-invariant direction
                    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                    let u2: f64 = rng.gen_range(0.0..1.0);
                    d[i] = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                }
                let norm = d.norm();
                if norm == 0.0 {
                    return center.clone();
                }
                let u: f64 = rng.gen_range(0.0..1.0f64);
                center + d * (radius * u.powf(1.0 / n as f64) / norm)
            }
            ConvexSet::Simplex { dim, scale } => {
                let mut v = DVector::zeros(*dim);
                let mut total = 0.0;
                for i in 0..*dim {
                    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
                    v[i] = -u.ln();
                    total += v[i];
                }
                v * (*scale / total)
            }
            ConvexSet::Polytope { a, b, bounds } => {
                let (lo, hi) = bounds.clone().unwrap_or_else(|| {
                    let n = self.dim();
                    (DVector::from_element(n, -1.0), DVector::from_element(n, 1.0))
                });
                let mut z = DVector::zeros(lo.len());
                for i in 0..z.len() {
                    z[i] = if hi[i] > lo[i] {
                        rng.gen_range(lo[i]..=hi[i])
                    } else {
                        lo[i]
                    };
                }
                project_polytope_dykstra(a, b, &z).unwrap_or_else(|_| z)
            }
        }
    }

    fn compute_polytope_bounds(&self) -> Result<Option<(DVector<f64>, DVector<f64>)>> {
        let (a, b) = match self {
            ConvexSet::Polytope { a, b, .. } => (a, b),
            _ => unreachable!(),
        };
        let n = a.ncols();
        let mut lo = DVector::zeros(n);
        let mut hi = DVector::zeros(n);
        for i in 0..n {
            let mut c = DVector::zeros(n);
            c[i] = 1.0;
            match linprog::solve(a, b, &c)? {
                LpOutcome::Optimal { value, .. } => lo[i] = value,
                LpOutcome::Unbounded => return Ok(None),
            }
            c[i] = -1.0;
            match linprog::solve(a, b, &c)? {
                LpOutcome::Optimal { value, .. } => hi[i] = -value,
                LpOutcome::Unbounded => return Ok(None),
            }
        }
        Ok(Some((lo, hi)))
    }
}

/// Exact projection onto `{ x >= 0, sum x = scale }` by the sort-and-threshold
/// rule.
pub(crate) fn project_simplex(z: &DVector<f64>, dim: usize, scale: f64) -> DVector<f64> {
    let mut sorted: Vec<f64> = z.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    let mut hit = 0usize;
    for (k, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - scale) / (k + 1) as f64;
        if v - t > 0.0 {
            tau = t;
            hit = k + 1;
        }
    }
    debug_assert!(hit > 0);
    let _ = hit;
    DVector::from_iterator(dim, z.iter().map(|&v| (v - tau).max(0.0)))
}

/// Projection onto `{ t*1 - mu : t in R, mu >= 0 supported on active coords }`
/// by bisection on the scalar `t`.
pub(crate) fn project_simplex_normal_cone(v: &DVector<f64>, active: &[bool]) -> DVector<f64> {
    // derivative of the squared distance in t is monotone increasing
    let slope = |t: f64| -> f64 {
        let mut s = 0.0;
        for i in 0..v.len() {
            if active[i] {
                s -= (v[i] - t).max(0.0);
            } else {
                s -= v[i] - t;
            }
        }
        s
    };
    let vmin = v.min();
    let vmax = v.max();
    let mut lo = vmin - 1.0 - (vmax - vmin);
    let mut hi = vmax + 1.0 + (vmax - vmin);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    DVector::from_iterator(
        v.len(),
        (0..v.len()).map(|i| if active[i] { v[i].min(t) } else { t }),
    )
}

/// Dykstra's algorithm over the halfspaces of `A x <= b`.
fn project_polytope_dykstra(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    z: &DVector<f64>,
) -> Result<DVector<f64>> {
    let m = a.nrows();
    if m == 0 {
        return Ok(z.clone());
    }
    let scale = 1.0 + z.norm();
    let mut x = z.clone();
    let mut increments: Vec<DVector<f64>> = vec![DVector::zeros(z.len()); m];
    let rows: Vec<DVector<f64>> = (0..m).map(|i| a.row(i).transpose()).collect();
    let row_sq: Vec<f64> = rows.iter().map(|r| r.norm_squared()).collect();
    const MAX_SWEEPS: usize = 100_000;
    for sweep in 0..MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for i in 0..m {
            if row_sq[i] == 0.0 {
                continue;
            }
            let y = &x + &increments[i];
            let viol = rows[i].dot(&y) - b[i];
            let x_new = if viol > 0.0 {
                &y - &rows[i] * (viol / row_sq[i])
            } else {
                y.clone()
            };
            increments[i] = &y - &x_new;
            max_change = max_change.max((&x_new - &x).norm());
            x = x_new;
        }
        let residual = {
            let v = a * &x - b;
            v.iter().fold(0.0f64, |acc, &t| acc.max(t))
        };
        if residual <= 1e-12 * scale && max_change <= 1e-13 * scale {
            return Ok(x);
        }
        if sweep == MAX_SWEEPS - 1 {
            if residual <= MEMBERSHIP_TOL {
                return Ok(x);
            }
            return Err(Error::NonConvergence {
                what: "polytope projection (Dykstra)",
                iterations: MAX_SWEEPS,
                residual,
            });
        }
    }
    unreachable!()
}

/// LP minimizer with lexicographic tie-breaking: after pinning the optimal
/// objective value, coordinates are minimized one at a time.
fn lp_lex_minimizer(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.ncols();
    let mut rows: Vec<DVector<f64>> = (0..a.nrows()).map(|i| a.row(i).transpose()).collect();
    let mut rhs: Vec<f64> = b.iter().copied().collect();
    let mut objective = c.clone();
    let mut point = None;
    for round in 0..=n {
        let a_cur = DMatrix::from_rows(&rows.iter().map(|r| r.transpose()).collect::<Vec<_>>());
        let b_cur = DVector::from_vec(rhs.clone());
        match linprog::solve(&a_cur, &b_cur, &objective)? {
            LpOutcome::Optimal { point: p, value } => {
                point = Some(p);
                rows.push(objective.clone());
                rhs.push(value + 1e-9 * (1.0 + value.abs()));
            }
            LpOutcome::Unbounded => {
                return Err(Error::UnboundedSet("linear program unbounded".into()))
            }
        }
        if round < n {
            objective = DVector::zeros(n);
            objective[round] = 1.0;
        }
    }
    Ok(point.expect("at least one LP solve"))
}

fn enumerate_box_vertices(
    lower: &DVector<f64>,
    upper: &DVector<f64>,
    i: usize,
    current: &mut DVector<f64>,
    out: &mut Vec<DVector<f64>>,
) {
    if i == lower.len() {
        out.push(current.clone());
        return;
    }
    current[i] = lower[i];
    enumerate_box_vertices(lower, upper, i + 1, current, out);
    if upper[i] > lower[i] {
        current[i] = upper[i];
        enumerate_box_vertices(lower, upper, i + 1, current, out);
        current[i] = lower[i];
    }
}

/// Brute-force vertex enumeration for small polytopes: all n-subsets of rows.
fn enumerate_polytope_vertices(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<Vec<DVector<f64>>> {
    let n = a.ncols();
    let m = a.nrows();
    if n > 5 || binomial(m, n) > 20_000 {
        return None;
    }
    let mut out: Vec<DVector<f64>> = Vec::new();
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        let sub_a = DMatrix::from_rows(&subset.iter().map(|&i| a.row(i)).collect::<Vec<_>>());
        let sub_b = DVector::from_iterator(n, subset.iter().map(|&i| b[i]));
        if let Some(x) = sub_a.lu().solve(&sub_b) {
            let viol = (a * &x - b).iter().fold(0.0f64, |acc, &t| acc.max(t));
            if viol <= 1e-9 && !out.iter().any(|y| (y - &x).norm() <= 1e-9) {
                out.push(x);
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return Some(out);
            }
            i -= 1;
            if subset[i] != i + m - n {
                subset[i] += 1;
                for j in i + 1..n {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn binomial(m: usize, n: usize) -> usize {
    if n > m {
        return 0;
    }
    let mut r: usize = 1;
    for i in 0..n.min(m - n) {
        r = r.saturating_mul(m - i) / (i + 1);
    }
    r
}

/// Relative boundary of a normal cone. See
/// [`ConvexSet::normal_cone_boundary`].
#[derive(Debug, Clone)]
pub enum ConeBoundary {
    /// The cone is a subspace of positive dimension: no relative boundary.
    Empty,
    /// Union of faces, each the cone generated by the listed vectors; an
    /// empty list is the face `{0}`.
    Faces(Vec<Vec<DVector<f64>>>),
}

/// Facet enumeration for a finitely generated cone in ambient dimension
/// `n <= 3`.
fn generated_cone_boundary(raw: &[DVector<f64>], n: usize) -> ConeBoundary {
    // normalize and deduplicate the generators
    let mut gens: Vec<DVector<f64>> = Vec::new();
    for g in raw {
        let nn = g.norm();
        if nn <= 1e-12 {
            continue;
        }
        let u = g / nn;
        if !gens.iter().any(|h| (h - &u).norm() <= 1e-10) {
            gens.push(u);
        }
    }
    if gens.is_empty() {
        return ConeBoundary::Faces(vec![Vec::new()]); // N = {0}
    }
    // rank of the span
    let mat = DMatrix::from_columns(&gens);
    let svd = mat.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * smax)
        .count();

    match rank {
        0 => ConeBoundary::Faces(vec![Vec::new()]),
        1 => {
            let d = gens[0].clone();
            let has_opposite = gens.iter().any(|g| g.dot(&d) < -0.5);
            if has_opposite {
                ConeBoundary::Empty // a full line
            } else {
                ConeBoundary::Faces(vec![Vec::new()]) // a ray: boundary {0}
            }
        }
        2 => {
            // orthonormal basis of the span
            let b1 = gens[0].clone();
            let mut b2 = DVector::zeros(n);
            for g in &gens[1..] {
                let r = g - &b1 * b1.dot(g);
                let rn = r.norm();
                if rn > 1e-9 {
                    b2 = r / rn;
                    break;
                }
            }
            let angles: Vec<f64> = gens
                .iter()
                .map(|g| g.dot(&b2).atan2(g.dot(&b1)))
                .collect();
            let mut sorted = angles.clone();
            sorted.sort_by(f64::total_cmp);
            // largest circular gap between consecutive directions
            let m = sorted.len();
            let mut gap = 0.0;
            let mut gap_at = 0;
            for i in 0..m {
                let next = if i + 1 == m {
                    sorted[0] + std::f64::consts::TAU
                } else {
                    sorted[i + 1]
                };
                if next - sorted[i] > gap {
                    gap = next - sorted[i];
                    gap_at = i;
                }
            }
            let ang_tol = 1e-9;
            if gap < std::f64::consts::PI - ang_tol {
                ConeBoundary::Empty // directions wrap the plane
            } else {
                let dir = |a: f64| -> DVector<f64> { &b1 * a.cos() + &b2 * a.sin() };
                let lo = dir(sorted[(gap_at + 1) % m]);
                let hi = dir(sorted[gap_at]);
                if gap <= std::f64::consts::PI + ang_tol {
                    // halfplane: the boundary is the full line through the extremes
                    ConeBoundary::Faces(vec![vec![lo.clone(), -lo]])
                } else {
                    ConeBoundary::Faces(vec![vec![lo], vec![hi]])
                }
            }
        }
        _ => {
            // rank 3 in ambient 3: facets from generator pair normals
            let cross = |a: &DVector<f64>, b: &DVector<f64>| -> DVector<f64> {
                DVector::from_vec(vec![
                    a[1] * b[2] - a[2] * b[1],
                    a[2] * b[0] - a[0] * b[2],
                    a[0] * b[1] - a[1] * b[0],
                ])
            };
            let mut faces: Vec<Vec<DVector<f64>>> = Vec::new();
            let mut normals: Vec<DVector<f64>> = Vec::new();
            for i in 0..gens.len() {
                for j in i + 1..gens.len() {
                    let mut h = cross(&gens[i], &gens[j]);
                    let hn = h.norm();
                    if hn <= 1e-10 {
                        continue;
                    }
                    h /= hn;
                    let side: Vec<f64> = gens.iter().map(|g| h.dot(g)).collect();
                    let pos = side.iter().any(|&s| s > 1e-9);
                    let neg = side.iter().any(|&s| s < -1e-9);
                    if pos && neg {
                        continue;
                    }
                    // orient the normal so every generator lies on h <= 0
                    if pos {
                        h = -h;
                    }
                    if normals.iter().any(|u| (u - &h).norm() <= 1e-9) {
                        continue;
                    }
                    normals.push(h.clone());
                    let face: Vec<DVector<f64>> = gens
                        .iter()
                        .zip(&side)
                        .filter(|(_, &s)| s.abs() <= 1e-9)
                        .map(|(g, _)| g.clone())
                        .collect();
                    faces.push(face);
                }
            }
            if faces.is_empty() {
                ConeBoundary::Empty // the cone fills the space
            } else {
                ConeBoundary::Faces(faces)
            }
        }
    }
}

/// Total lexicographic order on vectors; used for deterministic tie-breaking.
pub fn lex_cmp(a: &DVector<f64>, b: &DVector<f64>) -> std::cmp::Ordering {
    for i in 0..a.len().min(b.len()) {
        match a[i].total_cmp(&b[i]) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_box(n: usize) -> ConvexSet {
        ConvexSet::new_box(DVector::from_element(n, -1.0), DVector::from_element(n, 1.0)).unwrap()
    }

    #[test]
    fn box_projection_clamps() {
        let set = unit_box(1);
        let p = set.project(&dvector![3.0]).unwrap();
        assert_eq!(p[0], 1.0);
    }

    #[test]
    fn ball_projection_scales_radially() {
        let set = ConvexSet::new_ball(dvector![0.0, 0.0], 1.0).unwrap();
        let p = set.project(&dvector![3.0, 4.0]).unwrap();
        assert!((p - dvector![0.6, 0.8]).norm() < 1e-12);
    }

    #[test]
    fn simplex_projection_matches_grid_oracle() {
        let set = ConvexSet::new_simplex(2, 1.0).unwrap();
        let z = dvector![0.8, 0.8];
        let p = set.project(&z).unwrap();
        assert!((&p - dvector![0.5, 0.5]).norm() < 1e-10);
        // brute force over the simplex at step 1e-4
        let mut best = f64::INFINITY;
        let mut best_t = 0.0;
        let mut t = 0.0;
        while t <= 1.0 {
            let cand = dvector![t, 1.0 - t];
            let d = (&cand - &z).norm();
            if d < best {
                best = d;
                best_t = t;
            }
            t += 1e-4;
        }
        assert!((p[0] - best_t).abs() < 1e-3);
    }

    #[test]
    fn linear_minimizer_box_sign_rule() {
        let set = ConvexSet::new_box(dvector![0.0, 0.0], dvector![1.0, 1.0]).unwrap();
        assert_eq!(
            set.linear_minimizer(&dvector![1.0, 1.0]).unwrap(),
            dvector![0.0, 0.0]
        );
        assert_eq!(
            set.linear_minimizer(&dvector![-1.0, 2.0]).unwrap(),
            dvector![1.0, 0.0]
        );
    }

    #[test]
    fn linear_minimizer_ball_matches_circle_grid() {
        let set = ConvexSet::new_ball(dvector![0.0, 0.0], 1.0).unwrap();
        let c = dvector![3.0, 4.0];
        let v = set.linear_minimizer(&c).unwrap();
        assert!((&v - dvector![-0.6, -0.8]).norm() < 1e-12);
        // grid search over the circle
        let mut best = f64::INFINITY;
        let mut best_pt = dvector![0.0, 0.0];
        for k in 0..1_000_000u32 {
            let th = 2.0 * std::f64::consts::PI * (k as f64) / 1e6;
            let pt = dvector![th.cos(), th.sin()];
            let val = c.dot(&pt);
            if val < best {
                best = val;
                best_pt = pt;
            }
        }
        assert!((&v - best_pt).norm() < 1e-4);
    }

    #[test]
    fn normal_cone_box_examples() {
        let set = ConvexSet::new_box(dvector![0.0, 0.0], dvector![1.0, 1.0]).unwrap();
        // at the corner, R_-^2 contains (-2, -3)
        let r = set
            .normal_cone_residual(&dvector![0.0, 0.0], &dvector![-2.0, -3.0])
            .unwrap();
        assert!(r < 1e-12);
        // at an interior point the cone is {0}
        let r = set
            .normal_cone_residual(&dvector![0.5, 0.5], &dvector![1.0, 0.0])
            .unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normal_cone_ball_matches_ray_oracle() {
        let set = ConvexSet::new_ball(dvector![0.0, 0.0], 1.0).unwrap();
        let r = set
            .normal_cone_residual(&dvector![1.0, 0.0], &dvector![1.0, 1.0])
            .unwrap();
        // 1-d minimization over the ray {(t, 0) : t >= 0}
        let mut best = f64::INFINITY;
        let mut t = 0.0;
        while t <= 3.0 {
            let d = ((1.0 - t) * (1.0 - t) + 1.0f64).sqrt();
            best = best.min(d);
            t += 1e-5;
        }
        assert!((r - best).abs() < 1e-5);
        assert!((r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn normal_cone_requires_membership() {
        let set = unit_box(2);
        let err = set
            .normal_cone_residual(&dvector![2.0, 0.0], &dvector![1.0, 0.0])
            .unwrap_err();
        assert!(matches!(err, Error::NotInSet { .. }));
    }

    #[test]
    fn polytope_bounds_and_projection() {
        // triangle x >= 0, y >= 0, x + y <= 1
        let a = DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 1.0]);
        let b = dvector![0.0, 0.0, 1.0];
        let set = ConvexSet::new_polytope(a, b).unwrap();
        assert!(set.is_bounded());
        let (lo, hi) = set.coordinate_bounds().unwrap();
        assert!((lo - dvector![0.0, 0.0]).norm() < 1e-9);
        assert!((hi - dvector![1.0, 1.0]).norm() < 1e-9);
        let p = set.project(&dvector![1.0, 1.0]).unwrap();
        assert!((&p - dvector![0.5, 0.5]).norm() < 1e-9);
        let verts = set.vertices().unwrap();
        assert_eq!(verts.len(), 3);
    }

    #[test]
    fn unbounded_polytope_detected() {
        // halfplane x + y <= 1
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = dvector![1.0];
        let set = ConvexSet::new_polytope(a, b).unwrap();
        assert!(!set.is_bounded());
        let wrapped = set.intersect_with_cube(5.0).unwrap();
        assert!(wrapped.is_bounded());
    }

    #[test]
    fn projection_idempotent_and_members(){
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sets = vec![
            unit_box(3),
            ConvexSet::new_ball(dvector![0.5, -0.5, 0.0], 2.0).unwrap(),
            ConvexSet::new_simplex(3, 1.0).unwrap(),
            ConvexSet::new_polytope(
                DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]),
                dvector![1.0, 1.0, 1.0, 1.0],
            )
            .unwrap(),
        ];
        for set in &sets {
            for _ in 0..50 {
                let z = DVector::from_fn(set.dim(), |_, _| rng.gen_range(-3.0..3.0));
                let p = set.project(&z).unwrap();
                assert!(set.contains(&p, MEMBERSHIP_TOL), "projection must be a member");
                let p2 = set.project(&p).unwrap();
                assert!((&p2 - &p).norm() <= 1e-12 * (1.0 + p.norm()));
            }
        }
    }

    #[test]
    fn samples_are_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sets = vec![
            unit_box(4),
            ConvexSet::new_ball(dvector![1.0, 2.0], 0.5).unwrap(),
            ConvexSet::new_simplex(4, 2.0).unwrap(),
        ];
        for set in &sets {
            for _ in 0..100 {
                let x = set.sample(&mut rng);
                assert!(set.contains(&x, MEMBERSHIP_TOL));
            }
        }
    }
}
