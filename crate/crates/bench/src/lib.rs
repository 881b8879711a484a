//! Deterministic fixtures shared by the benchmarks.

use mde_core::library;
use mde_core::measure::{DiscreteMeasure, LiftedMeasure};
use mde_core::pvf::PvfSpec;
use mde_core::schemes::{GridSpec, MeasurePath, SchemeConfig, SchemeKind};

/// A scheme configuration for a built-in scenario.
pub struct Case {
    pub spec: PvfSpec,
    pub initial: DiscreteMeasure,
    pub config: SchemeConfig,
}

impl Case {
    pub fn builtin(name: &str, scheme: SchemeKind, n: usize) -> Self {
        let b = library::builtin(name).unwrap_or_else(|| panic!("no built-in scenario '{name}'"));
        let (spec, initial) = b.build().expect("built-ins are valid");
        let grid = GridSpec::with_time_step(b.time_step, n, b.t_final).expect("valid grid");
        Self {
            spec,
            initial,
            config: SchemeConfig::new(scheme, grid),
        }
    }

    pub fn run(&self) -> MeasurePath {
        mde_core::run(&self.spec, &self.initial, &self.config).expect("scheme run")
    }
}

/// Scrambled but reproducible points in `[-5, 5)`.
fn scatter(k: usize, seed: f64) -> f64 {
    let x = ((k as f64 + 1.0) * 0.618_033_988_749_895 + seed).fract();
    10.0 * x - 5.0
}

pub fn spread_measure(atoms: usize, dim: usize, seed: f64) -> DiscreteMeasure {
    let coords = (0..atoms * dim).map(|k| scatter(k, seed)).collect();
    let weights = (0..atoms).map(|k| 1.0 + scatter(k, seed + 0.37).abs()).collect();
    DiscreteMeasure::new(dim, coords, weights).expect("valid fixture")
}

pub fn spread_lifted(atoms: usize, seed: f64) -> LiftedMeasure {
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..atoms)
        .map(|k| (vec![(scatter(k, seed) * 0.5).round()], vec![scatter(k, seed + 0.5) * 0.4]))
        .collect();
    let weights: Vec<f64> = (0..atoms).map(|k| 1.0 + scatter(k, seed + 0.11).abs()).collect();
    LiftedMeasure::from_pairs(&pairs, &weights).expect("valid fixture")
}
