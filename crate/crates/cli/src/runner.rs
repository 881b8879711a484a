//! Executes a scenario and writes its artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mde_core::analysis::{compare_paths, convergence_from_paths, default_family, residual, Reference};
use mde_core::schemes::{run, GridSpec, MeasurePath, SchemeConfig, SchemeKind};
use mde_core::superposition::build_representation;
use mde_core::MdeError;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::scenario::{AnalysisFlags, ConfigError, Prepared, Scenario, SchemeChoice, MANIFEST_SCHEMA};

/// Points per axis of the default residual test family.
pub const FAMILY_POINTS: usize = 9;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{scheme} run with N = {n} failed: {source}")]
    Scheme {
        scheme: SchemeKind,
        n: usize,
        #[source]
        source: MdeError,
    },
    #[error("{what} failed: {source}")]
    Analysis {
        what: String,
        #[source]
        source: MdeError,
    },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub ns: Option<Vec<usize>>,
    pub scheme: Option<SchemeChoice>,
    pub flags: AnalysisFlags,
    /// Reserved: runs are deterministic and draw no random numbers.
    pub seed: Option<u64>,
}

impl RunOptions {
    pub fn apply(&self, mut s: Scenario) -> Scenario {
        if let Some(out) = &self.out {
            s.outputs = Some(out.clone());
        }
        if let Some(ns) = &self.ns {
            s.n = crate::scenario::Resolutions::Many(ns.clone());
        }
        if let Some(c) = self.scheme {
            s.scheme = c;
        }
        s.analysis.residual |= self.flags.residual;
        s.analysis.converge |= self.flags.converge;
        s.analysis.compare |= self.flags.compare;
        s.analysis.represent |= self.flags.represent;
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub scheme: SchemeKind,
    pub n: usize,
    pub steps: usize,
    pub dt: f64,
    pub dv: f64,
    pub dx: f64,
    pub final_atoms: usize,
    pub pruned_mass: f64,
    pub support_radii: Vec<f64>,
    pub max_support_radius: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Skipped {
    pub artifact: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema: &'static str,
    pub version: &'static str,
    pub config: Scenario,
    pub runs: Vec<RunRecord>,
    pub artifacts: Vec<String>,
    pub skipped: Vec<Skipped>,
    pub wall_time_s: f64,
}

#[derive(Serialize)]
struct ResidualSummary {
    scheme: SchemeKind,
    n: usize,
    max_defect: f64,
    dt: f64,
    family: String,
}

struct Writer {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl Writer {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|source| RunError::Io { path, source })?;
        log::info!("wrote {name}");
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
        text.push('\n');
        self.write(name, &text)
    }
}

fn analysis_err(what: impl Into<String>) -> impl FnOnce(MdeError) -> RunError {
    let what = what.into();
    move |source| RunError::Analysis { what, source }
}

/// Default artifact directory for a scenario without `outputs`.
pub fn default_out_dir(name: &str) -> PathBuf {
    Path::new("out").join(name)
}

/// Validates, runs and writes everything the scenario asks for. Nothing is
/// written if validation fails.
pub fn run_scenario(scenario: Scenario, opts: &RunOptions) -> Result<Manifest, RunError> {
    let start = Instant::now();
    if let Some(seed) = opts.seed {
        log::debug!("seed {seed} ignored: runs are deterministic");
    }
    let prepared = opts.apply(scenario).prepare()?;
    let sc = &prepared.scenario;
    let selected = sc.scheme.schemes();
    let flags = sc.analysis;
    let needed: Vec<SchemeKind> = if flags.compare { SchemeKind::ALL.to_vec() } else { selected.clone() };

    let jobs: Vec<(SchemeKind, usize)> = needed
        .iter()
        .flat_map(|&k| prepared.ns.iter().map(move |&n| (k, n)))
        .collect();
    let results: Vec<MeasurePath> = jobs
        .par_iter()
        .map(|&(scheme, n)| {
            let grid = GridSpec::with_time_step(sc.time_step, n, sc.t_final)
                .map_err(|source| RunError::Scheme { scheme, n, source })?;
            let mut cfg = SchemeConfig::new(scheme, grid);
            cfg.prune_floor = sc.prune_floor;
            run(&prepared.spec, &prepared.initial, &cfg).map_err(|source| RunError::Scheme { scheme, n, source })
        })
        .collect::<Result<_, _>>()?;
    let paths: BTreeMap<(SchemeKind, usize), MeasurePath> = jobs.into_iter().zip(results).collect();

    let dir = sc.outputs.clone().unwrap_or_else(|| default_out_dir(&sc.name));
    std::fs::create_dir_all(&dir).map_err(|source| RunError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut out = Writer {
        dir,
        artifacts: Vec::new(),
    };
    let mut skipped = Vec::new();
    let mut runs = Vec::new();

    for &scheme in &selected {
        for &n in &prepared.ns {
            let path = &paths[&(scheme, n)];
            let csv = path
                .to_csv(sc.samples_per_interval)
                .map_err(analysis_err(format!("{scheme} N={n} csv")))?;
            out.write(&format!("path_{scheme}_N{n}.csv"), &csv)?;
            let grid = path.grid().expect("scheme runs carry their grid");
            runs.push(RunRecord {
                scheme,
                n,
                steps: grid.steps,
                dt: grid.dt,
                dv: grid.dv,
                dx: grid.dx,
                final_atoms: path.measures().last().map_or(0, |m| m.len()),
                pruned_mass: path.pruned_mass(),
                support_radii: path.support_radii(),
                max_support_radius: path.max_support_radius(),
            });
        }
    }

    if flags.compare {
        let tables = prepared
            .ns
            .par_iter()
            .map(|&n| {
                let refs: Vec<_> = SchemeKind::ALL.iter().map(|&k| (k, &paths[&(k, n)])).collect();
                compare_paths(n, &refs).map_err(analysis_err(format!("comparison at N={n}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut csv = String::from("n,scheme_a,scheme_b,gap\n");
        for t in &tables {
            csv.push_str(t.to_csv().split_once('\n').map_or("", |(_, rows)| rows));
        }
        out.write("compare.csv", &csv)?;
        out.write_json("compare.json", &tables)?;
    }

    if flags.converge {
        let reference = sc.reference.map(|_| {
            let p = Prepared {
                scenario: prepared.scenario.clone(),
                spec: prepared.spec.clone(),
                initial: prepared.initial.clone(),
                ns: prepared.ns.clone(),
            };
            Reference::closed_form(move |t| p.reference_at(t).expect("reference kind is set"))
        });
        let mut tables = Vec::new();
        for &scheme in &selected {
            let ps: Vec<MeasurePath> = prepared.ns.iter().map(|&n| paths[&(scheme, n)].clone()).collect();
            let table = convergence_from_paths(scheme, &prepared.ns, &ps, reference.as_ref())
                .map_err(analysis_err(format!("{scheme} convergence study")))?;
            out.write(&format!("convergence_{scheme}.csv"), &table.to_csv())?;
            tables.push(table);
        }
        out.write_json("convergence.json", &tables)?;
    }

    if flags.residual {
        let mut summary = Vec::new();
        for &scheme in &selected {
            for &n in &prepared.ns {
                let path = &paths[&(scheme, n)];
                let family = default_family(path, FAMILY_POINTS).map_err(analysis_err("test family"))?;
                let rep = residual(path, &prepared.spec, &family)
                    .map_err(analysis_err(format!("{scheme} N={n} residual")))?;
                out.write(&format!("residual_{scheme}_N{n}.csv"), &rep.to_csv())?;
                summary.push(ResidualSummary {
                    scheme,
                    n,
                    max_defect: rep.max_defect,
                    dt: rep.dt,
                    family: rep.family,
                });
            }
        }
        out.write_json("residual.json", &summary)?;
    }

    if flags.represent {
        for &scheme in &selected {
            for &n in &prepared.ns {
                let name = format!("trajectories_{scheme}_N{n}.json");
                match build_representation(&paths[&(scheme, n)]) {
                    Ok(eta) => {
                        let mut text = eta.to_json();
                        text.push('\n');
                        out.write(&name, &text)?;
                    }
                    Err(e @ MdeError::SupportBlowup { .. }) => {
                        log::warn!("{name} skipped: {e}");
                        skipped.push(Skipped {
                            artifact: name,
                            reason: e.to_string(),
                        });
                    }
                    Err(e) => return Err(analysis_err(format!("{scheme} N={n} representation"))(e)),
                }
            }
        }
    }

    let mut manifest = Manifest {
        schema: MANIFEST_SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        config: prepared.scenario.clone(),
        runs,
        artifacts: Vec::new(),
        skipped,
        wall_time_s: 0.0,
    };
    manifest.artifacts = out.artifacts.clone();
    manifest.artifacts.push("manifest.json".into());
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    out.write_json("manifest.json", &manifest)?;
    Ok(manifest)
}
