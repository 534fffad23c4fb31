//! Monotone maps `F : R^n -> R^n` defining the lower-level variational
//! inequality.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

/// A continuous monotone map. The affine and gradient-of-quadratic variants
/// expose enough structure for the inner gap maximization to be solved with a
/// certificate; black-box maps only admit the multistart heuristic.
#[derive(Clone)]
pub enum MonotoneMap {
    /// `F(x) = M x + q`; monotone iff the symmetric part of `M` is PSD.
    Affine {
        matrix: DMatrix<f64>,
        offset: DVector<f64>,
    },
    /// `F(x) = 2 A^T (A x - b)`, the gradient of `||Ax - b||^2`; always monotone.
    GradQuadratic { a: DMatrix<f64>, b: DVector<f64> },
    /// Arbitrary evaluator; monotonicity is sample-checked, not proved.
    BlackBox {
        dim: usize,
        eval: Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>,
    },
}

impl fmt::Debug for MonotoneMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MonotoneMap::Affine { matrix, offset } => f
                .debug_struct("Affine")
                .field("matrix", matrix)
                .field("offset", offset)
                .finish(),
            MonotoneMap::GradQuadratic { a, b } => f
                .debug_struct("GradQuadratic")
                .field("a", a)
                .field("b", b)
                .finish(),
            MonotoneMap::BlackBox { dim, .. } => {
                f.debug_struct("BlackBox").field("dim", dim).finish()
            }
        }
    }
}

impl MonotoneMap {
    pub fn affine(matrix: DMatrix<f64>, offset: DVector<f64>) -> Self {
        MonotoneMap::Affine { matrix, offset }
    }

    /// `F(x) = 2 A^T (A x - b)` for an `m x n` matrix `A`.
    pub fn grad_quadratic(a: DMatrix<f64>, b: DVector<f64>) -> Self {
        MonotoneMap::GradQuadratic { a, b }
    }

    pub fn black_box<F>(dim: usize, eval: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        MonotoneMap::BlackBox {
            dim,
            eval: Arc::new(eval),
        }
    }

    /// A constant map `F(x) = q`.
    pub fn constant(q: DVector<f64>) -> Self {
        let n = q.len();
        MonotoneMap::Affine {
            matrix: DMatrix::zeros(n, n),
            offset: q,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MonotoneMap::Affine { offset, .. } => offset.len(),
            MonotoneMap::GradQuadratic { a, .. } => a.ncols(),
            MonotoneMap::BlackBox { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            MonotoneMap::Affine { matrix, offset } => matrix * x + offset,
            MonotoneMap::GradQuadratic { a, b } => (a.transpose() * (a * x - b)) * 2.0,
            MonotoneMap::BlackBox { eval, .. } => eval(x),
        }
    }

    /// The `(M, q)` form when the map is affine (the gradient-of-quadratic
    /// variant rewrites as `M = 2 A^T A`, `q = -2 A^T b`).
    pub fn as_affine(&self) -> Option<(DMatrix<f64>, DVector<f64>)> {
        match self {
            MonotoneMap::Affine { matrix, offset } => Some((matrix.clone(), offset.clone())),
            MonotoneMap::GradQuadratic { a, b } => Some((
                (a.transpose() * a) * 2.0,
                (a.transpose() * b) * -2.0,
            )),
            MonotoneMap::BlackBox { .. } => None,
        }
    }

    /// Smallest eigenvalue of the symmetric part `(M + M^T)/2` for affine
    /// variants; `None` for black boxes.
    pub fn sym_part_min_eigenvalue(&self) -> Option<f64> {
        let (m, _) = self.as_affine()?;
        let sym = (&m + m.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        Some(eig.eigenvalues.min())
    }

    /// An upper bound estimate for the Lipschitz constant of `F`.
    pub fn lipschitz_estimate(&self, probe: &[DVector<f64>]) -> f64 {
        if let Some((m, _)) = self.as_affine() {
            // spectral norm via the singular values
            let svd = m.svd(false, false);
            return svd.singular_values.max().max(f64::MIN_POSITIVE);
        }
        let mut best: f64 = 1e-6;
        for w in probe.windows(2) {
            let dx = (&w[1] - &w[0]).norm();
            if dx > 1e-12 {
                let df = (self.eval(&w[1]) - self.eval(&w[0])).norm();
                best = best.max(df / dx);
            }
        }
        best
    }
}
