//! Built-in scenarios and the closed-form solutions used as references.

use serde::{Deserialize, Serialize};

use crate::config::{AtomsConfig, FiberConfig, MeasureConfig, PointList, PvfConfig};
use crate::error::{MdeError, Result};
use crate::measure::DiscreteMeasure;
use crate::pvf::{median_data, PvfSpec};
use crate::schemes::{SchemeKind, TimeStep};

/// Default quantile resolution of the uniform velocity fiber.
pub const UNIFORM_FIBER_ATOMS: usize = 64;
/// Default quantile resolution of the uniform initial law.
pub const UNIFORM_INITIAL_ATOMS: usize = 256;

/// A named initial-value problem with its default run parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Builtin {
    pub name: String,
    pub description: String,
    pub pvf: PvfConfig,
    pub initial: MeasureConfig,
    pub t_final: f64,
    pub time_step: TimeStep,
    pub ns: Vec<usize>,
    /// `None` runs every scheme.
    pub scheme: Option<SchemeKind>,
}

impl Builtin {
    pub fn build(&self) -> Result<(PvfSpec, DiscreteMeasure)> {
        let mut spec = self.pvf.build()?;
        spec.name = self.name.clone();
        Ok((spec, self.initial.build()?))
    }
}

fn pm_one() -> FiberConfig {
    FiberConfig::Atoms(AtomsConfig {
        atoms: PointList::Scalars(vec![-1.0, 1.0]),
        weights: vec![0.5, 0.5],
    })
}

pub fn splitting_dirac() -> Builtin {
    Builtin {
        name: "splitting-dirac".into(),
        description: "splitting particle from a Dirac at 0".into(),
        pvf: PvfConfig::Splitting,
        initial: MeasureConfig::Dirac { point: vec![0.0] },
        t_final: 1.0,
        time_step: TimeStep::TOverN,
        ns: vec![4, 8],
        scheme: None,
    }
}

pub fn splitting_uniform(atoms: usize) -> Builtin {
    Builtin {
        name: "splitting-uniform".into(),
        description: format!("splitting particle from the uniform law on [0, 1] ({atoms} atoms)"),
        pvf: PvfConfig::Splitting,
        initial: MeasureConfig::Uniform1d { a: 0.0, b: 1.0, atoms },
        t_final: 1.0,
        time_step: TimeStep::TOverN,
        ns: vec![16, 32, 64],
        scheme: Some(SchemeKind::Lagrangian),
    }
}

pub fn binomial() -> Builtin {
    Builtin {
        name: "binomial".into(),
        description: "constant fiber (delta_-1 + delta_1)/2 from a Dirac at 0".into(),
        pvf: PvfConfig::ConstantFiber { omega: pm_one() },
        initial: MeasureConfig::Dirac { point: vec![0.0] },
        t_final: 1.0,
        time_step: TimeStep::TOverN,
        ns: vec![4, 8, 16],
        scheme: None,
    }
}

pub fn uniform_fiber(atoms: usize) -> Builtin {
    Builtin {
        name: "uniform-fiber".into(),
        description: format!("constant uniform fiber on [-1, 1] ({atoms} quantile atoms) from a Dirac at 0"),
        pvf: PvfConfig::ConstantFiber {
            omega: FiberConfig::Tagged(MeasureConfig::Uniform1d { a: -1.0, b: 1.0, atoms }),
        },
        initial: MeasureConfig::Dirac { point: vec![0.0] },
        t_final: 1.0,
        time_step: TimeStep::TOverN,
        ns: vec![1, 2],
        scheme: None,
    }
}

pub fn peano() -> Builtin {
    Builtin {
        name: "peano".into(),
        description: "graph field v(x) = 2 sqrt|x| from a Dirac at -1, unit time steps".into(),
        pvf: PvfConfig::Graph {
            field: "sqrt2".into(),
            slope: None,
            velocity: None,
        },
        initial: MeasureConfig::Dirac { point: vec![-1.0] },
        t_final: 3.0,
        time_step: TimeStep::OneOverN,
        ns: vec![1, 2, 3],
        scheme: Some(SchemeKind::Las),
    }
}

/// The five built-in scenarios in listing order.
pub fn builtins() -> Vec<Builtin> {
    vec![
        splitting_dirac(),
        splitting_uniform(UNIFORM_INITIAL_ATOMS),
        binomial(),
        uniform_fiber(UNIFORM_FIBER_ATOMS),
        peano(),
    ]
}

pub fn builtin(name: &str) -> Option<Builtin> {
    builtins().into_iter().find(|b| b.name == name)
}

/// Solution of the splitting-particle MDE selected by the LAS limit: mass
/// left of the split point moves at speed -1, mass right of it at +1, and
/// the split atom divides according to its fiber.
pub fn splitting_solution(mu0: &DiscreteMeasure, t: f64) -> Result<DiscreteMeasure> {
    let md = median_data(mu0)?;
    let mut points = Vec::with_capacity(mu0.len() + 1);
    let mut weights = Vec::with_capacity(mu0.len() + 1);
    for (i, (x, w)) in mu0.iter().enumerate() {
        let x = x[0];
        if i < md.index {
            points.push(x - t);
            weights.push(w);
        } else if i > md.index {
            points.push(x + t);
            weights.push(w);
        } else {
            let left = (0.5 - md.cdf_left).max(0.0);
            let total = left + md.eta;
            points.extend([x + t, x - t]);
            weights.extend([w * md.eta / total, w * left / total]);
        }
    }
    DiscreteMeasure::from_1d(&points, &weights)
}

/// `M`-atom quantile discretization of the split uniform law: the left half
/// of `[a, b]` translated by `-t`, the right half by `+t`.
pub fn split_uniform_discretized(a: f64, b: f64, atoms: usize, t: f64) -> Result<DiscreteMeasure> {
    let base = DiscreteMeasure::uniform_quantiles(a, b, atoms)?;
    let mid = 0.5 * (a + b);
    base.push_forward(|x| vec![if x[0] < mid { x[0] - t } else { x[0] + t }])
}

/// `sum_i C(k, i) 2^-k delta_{(2i - k) / N}`.
pub fn binomial_node(k: usize, n: usize) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(MdeError::InvalidConfig("N must be at least 1".into()));
    }
    let weights = binomial_weights(k);
    let points: Vec<f64> = (0..=k).map(|i| (2.0 * i as f64 - k as f64) / n as f64).collect();
    DiscreteMeasure::from_1d(&points, &weights)
}

/// `C(k, i) 2^-k` for `i = 0..=k`, built by repeated halving so that large
/// `k` does not overflow.
pub fn binomial_weights(k: usize) -> Vec<f64> {
    let mut row = vec![1.0f64];
    for _ in 0..k {
        let mut next = vec![0.0; row.len() + 1];
        for (i, w) in row.iter().enumerate() {
            next[i] += 0.5 * w;
            next[i + 1] += 0.5 * w;
        }
        row = next;
    }
    row
}

/// Trajectory of `x' = 2 sqrt|x|` that rests at the origin once it gets there.
pub fn peano_resting(x0: f64, t: f64) -> f64 {
    let s = x0.abs().sqrt();
    if x0 < 0.0 {
        if t < s {
            -(s - t).powi(2)
        } else {
            0.0
        }
    } else if x0 > 0.0 {
        (s + t).powi(2)
    } else {
        0.0
    }
}

/// Trajectory of `x' = 2 sqrt|x|` from `x0 < 0` that leaves the origin at
/// time `depart` (at least the arrival time).
pub fn peano_departing(x0: f64, depart: f64, t: f64) -> f64 {
    if t <= depart {
        peano_resting(x0, t)
    } else {
        let arrival = if x0 < 0.0 { x0.abs().sqrt() } else { 0.0 };
        if x0 > 0.0 || depart < arrival {
            return peano_resting(x0, t);
        }
        (t - depart).powi(2)
    }
}
