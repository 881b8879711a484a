//! Time-stepping schemes for measure differential equations.
//!
//! Three explicit schemes advance a finitely-supported initial measure:
//!
//! * the lattice scheme ([`las_run`]) bins positions to a space grid and
//!   velocities to a velocity grid, then moves every lattice atom linearly;
//! * the semi-discrete Lagrangian scheme ([`lagrangian_run`]) splits every
//!   atom along its full velocity fiber;
//! * the mean-velocity scheme ([`mean_velocity_run`]) moves every atom with
//!   the mean of its fiber.
//!
//! Each run records, per interval, the lifted measure that advanced it so
//! that [`interpolate_at`] evaluates the piecewise-linear interpolant exactly.

use serde::{Deserialize, Serialize};

use crate::error::{MdeError, Result};
use crate::measure::{DiscreteMeasure, LiftedMeasure, CANONICAL_TOL};
use crate::pvf::PvfSpec;

/// Slack added before flooring a grid coordinate so that values a rounding
/// error below a grid point bin onto it.
pub const SNAP_EPS: f64 = 1e-9;
/// Maximum distance of a lattice atom from the space grid.
pub const ON_GRID_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ATOMS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Ord, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Las,
    Lagrangian,
    MeanVelocity,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [SchemeKind::Las, SchemeKind::Lagrangian, SchemeKind::MeanVelocity];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::Las => "las",
            SchemeKind::Lagrangian => "lagrangian",
            SchemeKind::MeanVelocity => "mean-velocity",
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = MdeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "las" => Ok(SchemeKind::Las),
            "lagrangian" => Ok(SchemeKind::Lagrangian),
            "mean-velocity" | "mean_velocity" => Ok(SchemeKind::MeanVelocity),
            other => Err(MdeError::InvalidConfig(format!("unknown scheme '{other}'"))),
        }
    }
}

/// How the resolution `N` maps to a time step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeStep {
    /// `dt = T / N`, `N` steps.
    #[default]
    TOverN,
    /// `dt = 1 / N`, `T N` steps (`T N` must be an integer).
    OneOverN,
}

/// Time, velocity and space steps of a run. `dx = dt * dv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub steps: usize,
    pub t_final: f64,
    pub dt: f64,
    pub dv: f64,
    pub dx: f64,
}

impl GridSpec {
    /// `dt = T / n`, `dv = 1 / n`.
    pub fn new(n: usize, t_final: f64) -> Result<Self> {
        Self::with_time_step(TimeStep::TOverN, n, t_final)
    }

    pub fn with_time_step(convention: TimeStep, n: usize, t_final: f64) -> Result<Self> {
        if n == 0 {
            return Err(MdeError::InvalidConfig("N must be at least 1".into()));
        }
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(MdeError::InvalidConfig(format!("T must be positive, got {t_final}")));
        }
        let dv = 1.0 / n as f64;
        let (steps, dt) = match convention {
            TimeStep::TOverN => (n, t_final / n as f64),
            TimeStep::OneOverN => {
                let steps = (t_final * n as f64).round();
                if steps < 1.0 || (steps - t_final * n as f64).abs() > 1e-9 {
                    return Err(MdeError::InvalidConfig(format!(
                        "T * N = {} is not a whole number of unit steps",
                        t_final * n as f64
                    )));
                }
                (steps as usize, 1.0 / n as f64)
            }
        };
        Ok(Self {
            n,
            steps,
            t_final,
            dt,
            dv,
            dx: dt * dv,
        })
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_final
        } else {
            k as f64 * self.dt
        }
    }

    fn space_index(&self, x: f64) -> f64 {
        (x / self.dx + SNAP_EPS).floor()
    }

    fn velocity_index(&self, v: f64) -> f64 {
        (v / self.dv + SNAP_EPS).floor()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: SchemeKind,
    pub grid: GridSpec,
    /// Merge tolerance for the Lagrangian and mean-velocity schemes.
    pub coalesce_tol: f64,
    /// Atoms below this weight are pruned after each Lagrangian step
    /// (`0` disables pruning).
    pub prune_floor: f64,
    pub max_atoms: usize,
}

impl SchemeConfig {
    pub fn new(scheme: SchemeKind, grid: GridSpec) -> Self {
        Self {
            scheme,
            grid,
            coalesce_tol: CANONICAL_TOL,
            prune_floor: 0.0,
            max_atoms: DEFAULT_MAX_ATOMS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.coalesce_tol.is_nan() || self.coalesce_tol < 0.0 {
            return Err(MdeError::InvalidConfig("coalesce_tol must be nonnegative".into()));
        }
        if !(0.0..=1e-6).contains(&self.prune_floor) {
            return Err(MdeError::InvalidConfig("prune_floor must lie in [0, 1e-6]".into()));
        }
        Ok(())
    }
}

/// Node measures of a run plus the lifted measure used on each interval.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurePath {
    scheme: Option<SchemeKind>,
    grid: Option<GridSpec>,
    times: Vec<f64>,
    measures: Vec<DiscreteMeasure>,
    interp: Vec<LiftedMeasure>,
    pruned_mass: f64,
}

impl MeasurePath {
    /// A path known only at its nodes (no interpolation data).
    pub fn from_nodes(times: Vec<f64>, measures: Vec<DiscreteMeasure>) -> Result<Self> {
        if times.is_empty() || times.len() != measures.len() {
            return Err(MdeError::InvalidConfig("path needs one measure per node time".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MdeError::InvalidConfig("node times must increase".into()));
        }
        let dim = measures[0].dim();
        if let Some(m) = measures.iter().find(|m| m.dim() != dim) {
            return Err(MdeError::DimMismatch {
                expected: dim,
                found: m.dim(),
            });
        }
        Ok(Self {
            scheme: None,
            grid: None,
            times,
            measures,
            interp: Vec::new(),
            pruned_mass: 0.0,
        })
    }

    pub fn scheme(&self) -> Option<SchemeKind> {
        self.scheme
    }

    pub fn grid(&self) -> Option<&GridSpec> {
        self.grid.as_ref()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn measures(&self) -> &[DiscreteMeasure] {
        &self.measures
    }

    /// Lifted measure advancing interval `k` (`[t_k, t_{k+1}]`).
    pub fn interp(&self) -> &[LiftedMeasure] {
        &self.interp
    }

    pub fn has_interpolation(&self) -> bool {
        self.interp.len() + 1 == self.times.len()
    }

    pub fn pruned_mass(&self) -> f64 {
        self.pruned_mass
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().expect("paths have at least one node")
    }

    pub fn dim(&self) -> usize {
        self.measures[0].dim()
    }

    pub fn support_radii(&self) -> Vec<f64> {
        self.measures.iter().map(DiscreteMeasure::support_radius).collect()
    }

    pub fn max_support_radius(&self) -> f64 {
        self.support_radii().into_iter().fold(0.0, f64::max)
    }

    /// Node index equal to `t` within a relative tolerance, if any.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * self.t_final().abs().max(1.0);
        let k = self.times.partition_point(|&s| s < t - tol);
        (k < self.times.len() && (self.times[k] - t).abs() <= tol).then_some(k)
    }

    /// Writes `t,x1..xd,weight` rows for every node, plus `samples` evenly
    /// spaced interior times per interval when interpolation data exists.
    pub fn to_csv(&self, samples_per_interval: usize) -> Result<String> {
        let mut s = crate::measure::csv_header(self.dim());
        s.push('\n');
        for k in 0..self.times.len() {
            s.push_str(&self.measures[k].csv_rows(self.times[k]));
            if k + 1 < self.times.len() && samples_per_interval > 0 && self.has_interpolation() {
                let (a, b) = (self.times[k], self.times[k + 1]);
                for j in 1..=samples_per_interval {
                    let t = a + (b - a) * j as f64 / (samples_per_interval + 1) as f64;
                    s.push_str(&interpolate_at(self, t)?.csv_rows(t));
                }
            }
        }
        Ok(s)
    }
}

/// Bins every atom to the grid point `floor(x / dx) dx` (componentwise).
pub fn snap_space(mu: &DiscreteMeasure, grid: &GridSpec) -> DiscreteMeasure {
    let coords = mu.coords().iter().map(|&x| grid.space_index(x) * grid.dx).collect();
    DiscreteMeasure::new(mu.dim(), coords, mu.weights().to_vec()).expect("snapping keeps a valid measure")
}

fn on_grid_index(x: f64, grid: &GridSpec, atom: &[f64]) -> Result<f64> {
    let i = (x / grid.dx).round();
    if (i * grid.dx - x).abs() > ON_GRID_TOL {
        return Err(MdeError::BaseOffGrid {
            position: atom.to_vec(),
            dx: grid.dx,
        });
    }
    Ok(i)
}

/// Bins every velocity to `floor(v / dv) dv`; positions must already sit on
/// the space grid.
pub fn snap_velocity(v: &LiftedMeasure, grid: &GridSpec) -> Result<LiftedMeasure> {
    let mut coords = Vec::with_capacity(2 * v.dim() * v.len());
    for (x, vel, _) in v.iter() {
        for &c in x {
            coords.push(on_grid_index(c, grid, x)? * grid.dx);
        }
        coords.extend(vel.iter().map(|&c| grid.velocity_index(c) * grid.dv));
    }
    LiftedMeasure::new(v.dim(), coords, v.weights().to_vec())
}

fn new_path(cfg: &SchemeConfig, mu0: DiscreteMeasure) -> MeasurePath {
    MeasurePath {
        scheme: Some(cfg.scheme),
        grid: Some(cfg.grid),
        times: vec![0.0],
        measures: vec![mu0],
        interp: Vec::with_capacity(cfg.grid.steps),
        pruned_mass: 0.0,
    }
}

fn check_cap(count: usize, cap: usize) -> Result<()> {
    if count > cap {
        return Err(MdeError::SupportBlowup { count, cap });
    }
    Ok(())
}

/// Lattice approximate solution.
pub fn las_run(spec: &PvfSpec, mu0: &DiscreteMeasure, cfg: &SchemeConfig) -> Result<MeasurePath> {
    cfg.validate()?;
    let grid = cfg.grid;
    let dim = mu0.dim();
    let mut path = new_path(cfg, snap_space(mu0, &grid));
    for k in 0..grid.steps {
        let node = path.measures.last().expect("path is nonempty");
        let lifted = snap_velocity(&spec.eval(node)?, &grid)?;
        // integer lattice arithmetic keeps x_i + dt v_j exactly on the grid
        let mut coords = Vec::with_capacity(dim * lifted.len());
        for (x, v, _) in lifted.iter() {
            for (xc, vc) in x.iter().zip(v) {
                let i = (xc / grid.dx).round();
                let j = (vc / grid.dv).round();
                coords.push((i + j) * grid.dx);
            }
        }
        let next = DiscreteMeasure::new(dim, coords, lifted.weights().to_vec())?;
        check_cap(next.len(), cfg.max_atoms)?;
        path.interp.push(lifted);
        path.times.push(grid.time(k + 1));
        path.measures.push(next);
    }
    Ok(path)
}

/// Semi-discrete Lagrangian scheme: `mu_{k+1} = (x, v) -> x + dt v` pushed
/// forward from `V[mu_k]`.
pub fn lagrangian_run(spec: &PvfSpec, mu0: &DiscreteMeasure, cfg: &SchemeConfig) -> Result<MeasurePath> {
    cfg.validate()?;
    let grid = cfg.grid;
    let mut path = new_path(cfg, mu0.clone());
    for k in 0..grid.steps {
        let node = path.measures.last().expect("path is nonempty");
        let lifted = spec.eval(node)?;
        check_cap(lifted.len(), cfg.max_atoms)?;
        let next = lifted.displace(grid.dt, cfg.coalesce_tol);
        let (next, pruned) = next.prune(cfg.prune_floor);
        if pruned > 0.0 {
            log::debug!("step {k}: pruned mass {pruned:e}");
            path.pruned_mass += pruned;
        }
        path.interp.push(lifted);
        path.times.push(grid.time(k + 1));
        path.measures.push(next);
    }
    if path.pruned_mass > 0.0 {
        log::info!("lagrangian run pruned total mass {:e}", path.pruned_mass);
    }
    Ok(path)
}

/// Mean-velocity scheme: every atom moves with the barycenter of its fiber.
pub fn mean_velocity_run(spec: &PvfSpec, mu0: &DiscreteMeasure, cfg: &SchemeConfig) -> Result<MeasurePath> {
    cfg.validate()?;
    let grid = cfg.grid;
    let mut path = new_path(cfg, mu0.clone());
    for k in 0..grid.steps {
        let node = path.measures.last().expect("path is nonempty");
        let lifted = spec.barycentric_field(node)?.to_lifted()?;
        let next = lifted.displace(grid.dt, cfg.coalesce_tol);
        path.interp.push(lifted);
        path.times.push(grid.time(k + 1));
        path.measures.push(next);
    }
    Ok(path)
}

pub fn run(spec: &PvfSpec, mu0: &DiscreteMeasure, cfg: &SchemeConfig) -> Result<MeasurePath> {
    match cfg.scheme {
        SchemeKind::Las => las_run(spec, mu0, cfg),
        SchemeKind::Lagrangian => lagrangian_run(spec, mu0, cfg),
        SchemeKind::MeanVelocity => mean_velocity_run(spec, mu0, cfg),
    }
}

/// The path at time `t`: node measures at node times, the linear
/// characteristics of the stored lifted measure in between.
pub fn interpolate_at(path: &MeasurePath, t: f64) -> Result<DiscreteMeasure> {
    let (start, end) = (path.times[0], path.t_final());
    let tol = 1e-12 * end.abs().max(1.0);
    if !(t >= start - tol && t <= end + tol) {
        return Err(MdeError::OutOfRange { t, start, end });
    }
    if let Some(k) = path.node_index(t) {
        return Ok(path.measures[k].clone());
    }
    let k = path.times.partition_point(|&s| s <= t) - 1;
    let lifted = path
        .interp
        .get(k)
        .ok_or(MdeError::MissingInterpolation { interval: k })?;
    Ok(lifted.displace(t - path.times[k], CANONICAL_TOL))
}

/// True iff every node lies in the ball of radius `e^{C T} (R + 1)`.
pub fn support_bound_check(path: &MeasurePath, c: f64, r: f64) -> bool {
    let bound = (c * path.t_final()).exp() * (r + 1.0);
    path.measures.iter().all(|m| m.support_radius() <= bound)
}
