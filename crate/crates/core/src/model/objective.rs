//! Finite-valued convex objectives with value and subgradient oracles.
//!
//! All variants are separable per coordinate, so the full subdifferential at
//! a point is a product of intervals. Certificates exploit that: instead of
//! committing to the single oracle subgradient they may search over the
//! interval box (the optimality theorems quantify "there exists u in df(x)").

use nalgebra::DVector;

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub enum Objective {
    /// `f(x) = 1/2 ||x - anchor||^2`.
    QuadraticDistance { anchor: DVector<f64> },
    /// `f(x) = ||x||^2`.
    SquaredNorm { dim: usize },
    /// `f(x) = ||x||_1`.
    L1 { dim: usize },
    /// `f(x) = <c, x>`.
    Linear { coefficients: DVector<f64> },
    /// Nonnegatively weighted sum of convex terms.
    WeightedSum { terms: Vec<(f64, Objective)> },
}

impl Objective {
    pub fn dim(&self) -> usize {
        match self {
            Objective::QuadraticDistance { anchor } => anchor.len(),
            Objective::SquaredNorm { dim } | Objective::L1 { dim } => *dim,
            Objective::Linear { coefficients } => coefficients.len(),
            Objective::WeightedSum { terms } => terms.first().map_or(0, |(_, t)| t.dim()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Objective::WeightedSum { terms } = self {
            if terms.is_empty() {
                return Err(Error::InvalidInstance("weighted sum has no terms".into()));
            }
            let d = self.dim();
            for (w, t) in terms {
                if *w < 0.0 {
                    return Err(Error::InvalidInstance(
                        "weighted sum weights must be nonnegative".into(),
                    ));
                }
                if t.dim() != d {
                    return Err(Error::DimensionMismatch {
                        context: "weighted sum term",
                        expected: d,
                        got: t.dim(),
                    });
                }
                t.validate()?;
            }
        }
        Ok(())
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            Objective::QuadraticDistance { anchor } => 0.5 * (x - anchor).norm_squared(),
            Objective::SquaredNorm { .. } => x.norm_squared(),
            Objective::L1 { .. } => x.iter().map(|v| v.abs()).sum(),
            Objective::Linear { coefficients } => coefficients.dot(x),
            Objective::WeightedSum { terms } => {
                terms.iter().map(|(w, t)| w * t.value(x)).sum()
            }
        }
    }

    /// One deterministic element of the subdifferential. At kinks of the
    /// l1 norm the sign vector with 0 at zero coordinates is returned.
    pub fn subgradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Objective::QuadraticDistance { anchor } => x - anchor,
            Objective::SquaredNorm { .. } => x * 2.0,
            Objective::L1 { .. } => x.map(|v| {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }),
            Objective::Linear { coefficients } => coefficients.clone(),
            Objective::WeightedSum { terms } => {
                let mut g = DVector::zeros(x.len());
                for (w, t) in terms {
                    g += t.subgradient(x) * *w;
                }
                g
            }
        }
    }

    /// Componentwise interval hull of the subdifferential at `x`, exact for
    /// these separable objectives: `df(x) = prod_i [lo_i, hi_i]`.
    pub fn subdifferential_box(&self, x: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        match self {
            Objective::L1 { dim } => {
                let mut lo = DVector::zeros(*dim);
                let mut hi = DVector::zeros(*dim);
                for i in 0..*dim {
                    if x[i] > 0.0 {
                        lo[i] = 1.0;
                        hi[i] = 1.0;
                    } else if x[i] < 0.0 {
                        lo[i] = -1.0;
                        hi[i] = -1.0;
                    } else {
                        lo[i] = -1.0;
                        hi[i] = 1.0;
                    }
                }
                (lo, hi)
            }
            Objective::WeightedSum { terms } => {
                let mut lo = DVector::zeros(x.len());
                let mut hi = DVector::zeros(x.len());
                for (w, t) in terms {
                    let (tl, th) = t.subdifferential_box(x);
                    lo += tl * *w;
                    hi += th * *w;
                }
                (lo, hi)
            }
            _ => {
                let g = self.subgradient(x);
                (g.clone(), g)
            }
        }
    }
}
