//! JSON-facing descriptions of measures and PVFs.

use serde::{Deserialize, Serialize};

use crate::error::{MdeError, Result};
use crate::measure::{make_measure, DiscreteMeasure};
use crate::pvf::{GraphField, PvfSpec};

/// A list of points, written either as scalars (1-D) or as coordinate arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointList {
    Scalars(Vec<f64>),
    Points(Vec<Vec<f64>>),
}

impl PointList {
    pub fn to_points(&self) -> Vec<Vec<f64>> {
        match self {
            PointList::Scalars(xs) => xs.iter().map(|x| vec![*x]).collect(),
            PointList::Points(ps) => ps.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomsConfig {
    pub atoms: PointList,
    pub weights: Vec<f64>,
}

impl AtomsConfig {
    pub fn build(&self) -> Result<DiscreteMeasure> {
        make_measure(&self.atoms.to_points(), &self.weights)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureConfig {
    Dirac {
        point: Vec<f64>,
    },
    Atoms {
        atoms: PointList,
        weights: Vec<f64>,
    },
    /// Midpoint quantile discretization of the uniform law on `[a, b]`.
    #[serde(rename = "uniform_1d")]
    Uniform1d {
        a: f64,
        b: f64,
        atoms: usize,
    },
}

impl MeasureConfig {
    pub fn build(&self) -> Result<DiscreteMeasure> {
        match self {
            MeasureConfig::Dirac { point } => {
                if point.is_empty() || point.iter().any(|c| !c.is_finite()) {
                    return Err(MdeError::InvalidConfig(format!("bad dirac point {point:?}")));
                }
                Ok(DiscreteMeasure::dirac(point))
            }
            MeasureConfig::Atoms { atoms, weights } => make_measure(&atoms.to_points(), weights),
            MeasureConfig::Uniform1d { a, b, atoms } => DiscreteMeasure::uniform_quantiles(*a, *b, *atoms),
        }
    }
}

/// Fiber law of a constant-fiber PVF: either a bare `{atoms, weights}` pair
/// or any tagged [`MeasureConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FiberConfig {
    Tagged(MeasureConfig),
    Atoms(AtomsConfig),
}

impl FiberConfig {
    pub fn build(&self) -> Result<DiscreteMeasure> {
        match self {
            FiberConfig::Tagged(m) => m.build(),
            FiberConfig::Atoms(a) => a.build(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PvfConfig {
    /// `field` selects a built-in: `zero`, `linear` (uses `slope`),
    /// `constant` (uses `velocity`), `sqrt2` or its alias `peano`
    /// (`v(x) = 2 sqrt|x|`).
    Graph {
        field: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        slope: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        velocity: Option<Vec<f64>>,
    },
    ConstantFiber {
        omega: FiberConfig,
    },
    Splitting,
}

/// Names accepted by `{"kind":"graph","field":...}`.
pub const GRAPH_FIELDS: [&str; 5] = ["zero", "linear", "constant", "sqrt2", "peano"];

impl PvfConfig {
    pub fn build(&self) -> Result<PvfSpec> {
        match self {
            PvfConfig::Graph { field, slope, velocity } => {
                let g = match field.as_str() {
                    "zero" => GraphField::Zero,
                    "linear" => GraphField::Linear {
                        slope: slope.unwrap_or(1.0),
                    },
                    "constant" => GraphField::Constant {
                        velocity: velocity
                            .clone()
                            .ok_or_else(|| MdeError::InvalidConfig("graph field 'constant' needs 'velocity'".into()))?,
                    },
                    "sqrt2" | "peano" => GraphField::Peano,
                    other => {
                        return Err(MdeError::InvalidConfig(format!(
                            "unknown graph field '{other}', expected one of {GRAPH_FIELDS:?}"
                        )))
                    }
                };
                Ok(PvfSpec::graph(field.clone(), g))
            }
            PvfConfig::ConstantFiber { omega } => Ok(PvfSpec::constant_fiber("constant_fiber", omega.build()?)),
            PvfConfig::Splitting => Ok(PvfSpec::splitting()),
        }
    }
}
