//! Solve and certify simple MPECs: minimize a convex objective over the
//! solution set of a monotone variational inequality VI(F, C).
//!
//! The toolkit is organized around the dual gap function
//! `g_D(x) = sup_{y in C} <F(y), x - y>`, which is convex, nonnegative on `C`,
//! and vanishes exactly on `sol(VI(F, C))`. That reformulation turns the
//! bilevel problem into the single-level program `min f(x) s.t. g_D(x) <= 0,
//! x in C`, and everything here follows from it:
//!
//! * [`model`] — problem data: monotone maps, convex sets with projection and
//!   linear-minimization oracles, convex objectives with subgradients.
//! * [`gap`] — evaluation of `g_D`, near-maximizer sets `Y(x)`, Danskin
//!   subgradients, and Caratheodory reduction of hull points.
//! * [`solver`] — the regularization loop `min f + eps_k * g_D` with
//!   `eps_k` decreasing, an inner projected-subgradient solver, and a
//!   reference extragradient method for the lower-level VI.
//! * [`certify`] — KKT-style multiplier certificates, the weak basic
//!   constraint qualification diagnostic, solution-set membership checks, and
//!   sequential optimality residuals evaluated along solve traces.
//! * [`demo`] — small built-in instances with known solutions.
//!
//! With the default `parallel` feature the embarrassingly parallel pieces
//! (multistart inner solves, sampled validation) fan out over rayon; disable
//! default features for a fully sequential build with identical results.

pub mod certify;
pub mod demo;
mod error;
pub mod gap;
pub mod hull;
pub mod linprog;
pub mod model;
pub mod nnls;
pub(crate) mod parallel;
pub mod solver;

pub use error::Error;
pub type Result<T> = std::result::Result<T, Error>;

pub use nalgebra::{DMatrix, DVector};
