//! Scenario files: schema, parsing and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use mde_core::config::{MeasureConfig, PvfConfig};
use mde_core::library::{self, Builtin};
use mde_core::measure::DiscreteMeasure;
use mde_core::pvf::PvfSpec;
use mde_core::schemes::{GridSpec, SchemeKind, TimeStep};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA: &str = "mde-lab/1";
pub const MANIFEST_SCHEMA: &str = "mde-lab/manifest/1";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{source_name}: scenario file is empty")]
    Empty { source_name: String },
    #[error("{source_name}:{line}:{column}: {msg}")]
    Parse {
        source_name: String,
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("{source_name}: field '{field}': {msg}")]
    Field {
        source_name: String,
        field: &'static str,
        msg: String,
    },
    #[error("unknown scenario '{0}' (not a file, built-in or registry entry)")]
    Unknown(String),
    #[error("scenario name '{name}' is defined more than once: {}", sources.join(", "))]
    Collision { name: String, sources: Vec<String> },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// `N` as a single resolution or a list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Resolutions {
    One(usize),
    Many(Vec<usize>),
}

impl Resolutions {
    pub fn to_vec(&self) -> Vec<usize> {
        match self {
            Resolutions::One(n) => vec![*n],
            Resolutions::Many(ns) => ns.clone(),
        }
    }
}

/// `"all"` or one scheme tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SchemeChoice {
    #[default]
    All,
    One(SchemeKind),
}

impl SchemeChoice {
    pub fn schemes(self) -> Vec<SchemeKind> {
        match self {
            SchemeChoice::All => SchemeKind::ALL.to_vec(),
            SchemeChoice::One(k) => vec![k],
        }
    }
}

impl TryFrom<String> for SchemeChoice {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl std::str::FromStr for SchemeChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(SchemeChoice::All);
        }
        s.parse::<SchemeKind>()
            .map(SchemeChoice::One)
            .map_err(|_| format!("unknown scheme '{s}', expected las, lagrangian, mean-velocity or all"))
    }
}

impl From<SchemeChoice> for String {
    fn from(c: SchemeChoice) -> Self {
        c.to_string()
    }
}

impl fmt::Display for SchemeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeChoice::All => f.write_str("all"),
            SchemeChoice::One(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisFlags {
    pub residual: bool,
    pub converge: bool,
    pub compare: bool,
    pub represent: bool,
}

/// Reference solution for convergence studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// Splitting-particle closed form from the initial measure.
    Splitting,
    /// The initial measure at every time.
    Stationary,
    /// Each atom follows the solution of `x' = 2 sqrt|x|` that stops at 0.
    PeanoResting,
}

fn default_name() -> String {
    "scenario".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: String,
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub pvf: PvfConfig,
    pub initial: MeasureConfig,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(rename = "N")]
    pub n: Resolutions,
    #[serde(default)]
    pub time_step: TimeStep,
    #[serde(default)]
    pub scheme: SchemeChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<PathBuf>,
    #[serde(default)]
    pub samples_per_interval: usize,
    #[serde(default)]
    pub prune_floor: f64,
    #[serde(default)]
    pub analysis: AnalysisFlags,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceKind>,
}

/// A validated scenario with its measures built.
#[derive(Debug)]
pub struct Prepared {
    pub scenario: Scenario,
    pub spec: PvfSpec,
    pub initial: DiscreteMeasure,
    pub ns: Vec<usize>,
}

impl Scenario {
    pub fn from_builtin(b: &Builtin) -> Self {
        let reference = match b.name.as_str() {
            "splitting-dirac" | "splitting-uniform" => Some(ReferenceKind::Splitting),
            "binomial" | "uniform-fiber" => Some(ReferenceKind::Stationary),
            "peano" => Some(ReferenceKind::PeanoResting),
            _ => None,
        };
        Self {
            schema: SCHEMA.into(),
            name: b.name.clone(),
            description: b.description.clone(),
            pvf: b.pvf.clone(),
            initial: b.initial.clone(),
            t_final: b.t_final,
            n: Resolutions::Many(b.ns.clone()),
            time_step: b.time_step,
            scheme: b.scheme.map_or(SchemeChoice::All, SchemeChoice::One),
            outputs: None,
            samples_per_interval: 0,
            prune_floor: 0.0,
            analysis: AnalysisFlags::default(),
            reference,
        }
    }

    /// Parses a scenario, or the scenario echoed inside a run manifest.
    pub fn parse(text: &str, source_name: &str) -> Result<Self, ConfigError> {
        if text.trim().is_empty() {
            return Err(ConfigError::Empty {
                source_name: source_name.into(),
            });
        }
        let parse_err = |e: serde_json::Error| ConfigError::Parse {
            source_name: source_name.into(),
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        };
        let value: serde_json::Value = serde_json::from_str(text).map_err(parse_err)?;
        let from_manifest = value.get("schema").and_then(|s| s.as_str()) == Some(MANIFEST_SCHEMA);
        let body = if from_manifest {
            value.get("config").cloned().ok_or_else(|| ConfigError::Field {
                source_name: source_name.into(),
                field: "config",
                msg: "manifest has no config echo".into(),
            })?
        } else {
            value
        };
        match body.get("schema").and_then(|s| s.as_str()) {
            Some(SCHEMA) => {}
            other => {
                return Err(ConfigError::Field {
                    source_name: source_name.into(),
                    field: "schema",
                    msg: format!("expected \"{SCHEMA}\", found {other:?}"),
                })
            }
        }
        // deserialize from text when possible so that errors carry positions
        let scenario: Scenario = if from_manifest {
            serde_json::from_value(body).map_err(parse_err)?
        } else {
            serde_json::from_str(text).map_err(parse_err)?
        };
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Checks every field and builds the PVF and initial measure.
    pub fn prepare(self) -> Result<Prepared, ConfigError> {
        let field = |field: &'static str, msg: String| ConfigError::Field {
            source_name: self.name.clone(),
            field,
            msg,
        };
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(field("T", format!("must be positive, got {}", self.t_final)));
        }
        let ns = self.n.to_vec();
        if ns.is_empty() || ns.contains(&0) {
            return Err(field("N", format!("resolutions must be at least 1, got {ns:?}")));
        }
        if ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(field("N", format!("resolutions must increase, got {ns:?}")));
        }
        for &n in &ns {
            GridSpec::with_time_step(self.time_step, n, self.t_final).map_err(|e| field("N", e.to_string()))?;
        }
        if !(0.0..=1e-6).contains(&self.prune_floor) {
            return Err(field("prune_floor", "must lie in [0, 1e-6]".into()));
        }
        let spec = self.pvf.build().map_err(|e| field("pvf", e.to_string()))?;
        let initial = self.initial.build().map_err(|e| field("initial", e.to_string()))?;
        if let Some(r) = self.reference {
            if matches!(r, ReferenceKind::Splitting | ReferenceKind::PeanoResting) && initial.dim() != 1 {
                return Err(field("reference", "this reference needs a 1-D initial measure".into()));
            }
        }
        let mut spec = spec;
        spec.name = self.name.clone();
        Ok(Prepared {
            scenario: self,
            spec,
            initial,
            ns,
        })
    }
}

impl Prepared {
    pub fn reference_at(&self, t: f64) -> Option<mde_core::Result<DiscreteMeasure>> {
        let mu0 = &self.initial;
        Some(match self.scenario.reference? {
            ReferenceKind::Splitting => library::splitting_solution(mu0, t),
            ReferenceKind::Stationary => Ok(mu0.clone()),
            ReferenceKind::PeanoResting => mu0.push_forward(|x| vec![library::peano_resting(x[0], t)]),
        })
    }
}
