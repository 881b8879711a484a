//! Measure differential equations on finitely-supported probability measures:
//! transport metrics, probability vector fields, the LAS, Lagrangian and
//! mean-velocity schemes, trajectory representations and weak-form checks.

pub mod analysis;
pub mod config;
pub mod error;
pub mod library;
pub mod measure;
pub mod pvf;
pub mod schemes;
pub mod superposition;
pub mod transport;

pub use error::{MdeError, Result};
pub use measure::{make_measure, DiscreteMeasure, Disintegration, LiftedMeasure};
pub use pvf::{BarycentricField, GraphField, PvfKind, PvfSpec};
pub use schemes::{interpolate_at, run, GridSpec, MeasurePath, SchemeConfig, SchemeKind, TimeStep};
pub use superposition::{build_representation, evaluate_pushforward, verify_fiber_barycenter, TrajectoryEnsemble};
pub use transport::{fiber_pseudometric, lifted_w1, w1_distance, TransportPlan};
