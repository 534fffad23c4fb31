//! Instance file schema: strict JSON with explicit variants.
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "objective": { "variant": "squared-norm" },
//!   "map": { "variant": "affine", "matrix": [[0.0, -1.0], [1.0, 0.0]], "offset": [1.0, -1.0] },
//!   "set": { "variant": "box", "lower": [0.0, 0.0], "upper": [10.0, 10.0] },
//!   "known_solution": [1.0, 1.0]
//! }
//! ```
//!
//! Matrices are row-major nested arrays. Unknown fields are rejected so a
//! typo cannot silently change the problem being solved.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use smpec::model::{ConvexSet, MonotoneMap, Objective, ProblemInstance};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub dimension: usize,
    pub objective: ObjectiveSpec,
    pub map: MapSpec,
    pub set: SetSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub known_solution: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    QuadraticDistance { anchor: Vec<f64> },
    SquaredNorm,
    L1,
    Linear { coefficients: Vec<f64> },
    WeightedSum { terms: Vec<WeightedTerm> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedTerm {
    pub weight: f64,
    pub objective: ObjectiveSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapSpec {
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    GradientOfQuadratic {
        matrix: Vec<Vec<f64>>,
        rhs: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SetSpec {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Polytope { matrix: Vec<Vec<f64>>, rhs: Vec<f64> },
    Simplex { scale: f64 },
}

/// Schema-level violations: structurally valid JSON describing an
/// inconsistent instance.
#[derive(Debug)]
pub struct SchemaViolation(pub String);

impl std::fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "schema violation: {}", self.0)
    }
}

impl std::error::Error for SchemaViolation {}

fn to_matrix(rows: &[Vec<f64>], field: &str, ncols: usize) -> Result<DMatrix<f64>, SchemaViolation> {
    if rows.is_empty() {
        return Err(SchemaViolation(format!("{field}: matrix has no rows")));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(SchemaViolation(format!(
                "{field}: row {i} has {} entries, expected {ncols}",
                r.len()
            )));
        }
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn to_vector(v: &[f64], field: &str, len: usize) -> Result<DVector<f64>, SchemaViolation> {
    if v.len() != len {
        return Err(SchemaViolation(format!(
            "{field}: has {} entries, expected {len}",
            v.len()
        )));
    }
    Ok(DVector::from_column_slice(v))
}

fn objective_from_spec(spec: &ObjectiveSpec, n: usize) -> Result<Objective, SchemaViolation> {
    Ok(match spec {
        ObjectiveSpec::QuadraticDistance { anchor } => Objective::QuadraticDistance {
            anchor: to_vector(anchor, "objective.anchor", n)?,
        },
        ObjectiveSpec::SquaredNorm => Objective::SquaredNorm { dim: n },
        ObjectiveSpec::L1 => Objective::L1 { dim: n },
        ObjectiveSpec::Linear { coefficients } => Objective::Linear {
            coefficients: to_vector(coefficients, "objective.coefficients", n)?,
        },
        ObjectiveSpec::WeightedSum { terms } => Objective::WeightedSum {
            terms: terms
                .iter()
                .map(|t| Ok((t.weight, objective_from_spec(&t.objective, n)?)))
                .collect::<Result<Vec<_>, SchemaViolation>>()?,
        },
    })
}

fn objective_to_spec(obj: &Objective) -> ObjectiveSpec {
    match obj {
        Objective::QuadraticDistance { anchor } => ObjectiveSpec::QuadraticDistance {
            anchor: anchor.iter().copied().collect(),
        },
        Objective::SquaredNorm { .. } => ObjectiveSpec::SquaredNorm,
        Objective::L1 { .. } => ObjectiveSpec::L1,
        Objective::Linear { coefficients } => ObjectiveSpec::Linear {
            coefficients: coefficients.iter().copied().collect(),
        },
        Objective::WeightedSum { terms } => ObjectiveSpec::WeightedSum {
            terms: terms
                .iter()
                .map(|(w, t)| WeightedTerm {
                    weight: *w,
                    objective: objective_to_spec(t),
                })
                .collect(),
        },
    }
}

impl InstanceFile {
    /// Converts the parsed file into a validated problem instance.
    pub fn into_instance(&self, wrap_radius: f64) -> Result<ProblemInstance, SchemaViolation> {
        let n = self.dimension;
        if n == 0 {
            return Err(SchemaViolation("dimension: must be positive".into()));
        }
        let objective = objective_from_spec(&self.objective, n)?;
        let map = match &self.map {
            MapSpec::Affine { matrix, offset } => {
                let m = to_matrix(matrix, "map.matrix", n)?;
                if m.nrows() != n {
                    return Err(SchemaViolation(format!(
                        "map.matrix: has {} rows, expected {n}",
                        m.nrows()
                    )));
                }
                MonotoneMap::affine(m, to_vector(offset, "map.offset", n)?)
            }
            MapSpec::GradientOfQuadratic { matrix, rhs } => {
                let a = to_matrix(matrix, "map.matrix", n)?;
                let b = to_vector(rhs, "map.rhs", a.nrows())?;
                MonotoneMap::grad_quadratic(a, b)
            }
        };
        let set = match &self.set {
            SetSpec::Box { lower, upper } => ConvexSet::new_box(
                to_vector(lower, "set.lower", n)?,
                to_vector(upper, "set.upper", n)?,
            ),
            SetSpec::Ball { center, radius } => {
                ConvexSet::new_ball(to_vector(center, "set.center", n)?, *radius)
            }
            SetSpec::Polytope { matrix, rhs } => {
                let a = to_matrix(matrix, "set.matrix", n)?;
                let b = to_vector(rhs, "set.rhs", a.nrows())?;
                ConvexSet::new_polytope(a, b)
            }
            SetSpec::Simplex { scale } => ConvexSet::new_simplex(n, *scale),
        }
        .map_err(|e| SchemaViolation(format!("set: {e}")))?;

        let mut inst = ProblemInstance::with_wrap_radius(objective, map, set, wrap_radius)
            .map_err(|e| SchemaViolation(e.to_string()))?;
        if let Some(ks) = &self.known_solution {
            inst = inst.with_known_solution(to_vector(ks, "known_solution", n)?);
        }
        Ok(inst)
    }

    /// The schema form of an in-memory instance. Fails for black-box maps,
    /// which have no file representation.
    pub fn from_instance(inst: &ProblemInstance) -> Result<InstanceFile, SchemaViolation> {
        let map = match inst.map() {
            MonotoneMap::Affine { matrix, offset } => MapSpec::Affine {
                matrix: matrix_rows(matrix),
                offset: offset.iter().copied().collect(),
            },
            MonotoneMap::GradQuadratic { a, b } => MapSpec::GradientOfQuadratic {
                matrix: matrix_rows(a),
                rhs: b.iter().copied().collect(),
            },
            MonotoneMap::BlackBox { .. } => {
                return Err(SchemaViolation(
                    "black-box maps cannot be serialized".into(),
                ))
            }
        };
        let set = match inst.set() {
            ConvexSet::Box { lower, upper } => SetSpec::Box {
                lower: lower.iter().copied().collect(),
                upper: upper.iter().copied().collect(),
            },
            ConvexSet::Ball { center, radius } => SetSpec::Ball {
                center: center.iter().copied().collect(),
                radius: *radius,
            },
            ConvexSet::Polytope { a, b, .. } => SetSpec::Polytope {
                matrix: matrix_rows(a),
                rhs: b.iter().copied().collect(),
            },
            ConvexSet::Simplex { scale, .. } => SetSpec::Simplex { scale: *scale },
        };
        Ok(InstanceFile {
            dimension: inst.dim(),
            objective: objective_to_spec(inst.objective()),
            map,
            set,
            known_solution: inst
                .known_solution()
                .map(|v| v.iter().copied().collect()),
        })
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}
