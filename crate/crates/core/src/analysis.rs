//! Weak-form residuals, convergence studies and scheme comparisons.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{MdeError, Result};
use crate::measure::{fmt_f64, DiscreteMeasure};
use crate::pvf::PvfSpec;
use crate::schemes::{interpolate_at, run, GridSpec, MeasurePath, SchemeConfig, SchemeKind, TimeStep};
use crate::transport::w1_distance;

/// Smooth bump `f(x) = (max(0, 1 - |x - c|^2 / r^2))^3`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunction {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl TestFunction {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(MdeError::InvalidConfig(format!("test radius must be positive, got {radius}")));
        }
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(MdeError::InvalidConfig(format!("bad test center {center:?}")));
        }
        Ok(Self { center, radius })
    }

    fn inner(&self, x: &[f64]) -> f64 {
        let r2 = self.radius * self.radius;
        let d2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c).powi(2)).sum();
        1.0 - d2 / r2
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let s = self.inner(x);
        if s <= 0.0 {
            0.0
        } else {
            s * s * s
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let s = self.inner(x);
        if s <= 0.0 {
            return vec![0.0; x.len()];
        }
        let k = -6.0 * s * s / (self.radius * self.radius);
        x.iter().zip(&self.center).map(|(a, c)| k * (a - c)).collect()
    }

    /// Analytic bound on `|grad f|`.
    pub fn gradient_bound(&self) -> f64 {
        6.0 / self.radius
    }
}

/// Centers on a `per_axis`-point grid over the support hull of the path
/// inflated by 20%, radius equal to the largest hull width.
pub fn default_family(path: &MeasurePath, per_axis: usize) -> Result<Vec<TestFunction>> {
    if per_axis == 0 {
        return Err(MdeError::InvalidConfig("test family needs at least one point per axis".into()));
    }
    let dim = path.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for m in path.measures() {
        for (x, _) in m.iter() {
            for j in 0..dim {
                lo[j] = lo[j].min(x[j]);
                hi[j] = hi[j].max(x[j]);
            }
        }
    }
    let width = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    let radius = if width > 0.0 { width } else { 1.0 };
    let axes: Vec<Vec<f64>> = lo
        .iter()
        .zip(&hi)
        .map(|(&a, &b)| {
            let pad = 0.1 * (b - a);
            let (a, b) = (a - pad, b + pad);
            if per_axis == 1 || b == a {
                vec![0.5 * (a + b)]
            } else {
                (0..per_axis)
                    .map(|i| a + (b - a) * i as f64 / (per_axis - 1) as f64)
                    .collect()
            }
        })
        .collect();
    let mut centers: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &axes {
        centers = centers
            .into_iter()
            .flat_map(|c| {
                axis.iter().map(move |&a| {
                    let mut c = c.clone();
                    c.push(a);
                    c
                })
            })
            .collect();
    }
    centers.into_iter().map(|c| TestFunction::new(c, radius)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualEntry {
    pub test: usize,
    pub node: usize,
    pub t: f64,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub entries: Vec<ResidualEntry>,
    pub max_defect: f64,
    pub dt: f64,
    pub family: String,
}

impl ResidualReport {
    /// Largest defect per test function.
    pub fn max_per_test(&self, tests: usize) -> Vec<f64> {
        let mut out = vec![0.0f64; tests];
        for e in &self.entries {
            out[e.test] = out[e.test].max(e.defect);
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("test,node,t,defect\n");
        for e in &self.entries {
            s.push_str(&format!("{},{},{},{}\n", e.test, e.node, fmt_f64(e.t), fmt_f64(e.defect)));
        }
        s
    }
}

/// Defect of the weak formulation at every node: the change of `<mu_t, f>`
/// against the trapezoidal time integral of `∫ grad f · v dV[mu_s]`, with the
/// PVF re-evaluated at each node measure.
pub fn residual(path: &MeasurePath, spec: &PvfSpec, family: &[TestFunction]) -> Result<ResidualReport> {
    if family.is_empty() {
        return Err(MdeError::InvalidConfig("residual needs at least one test function".into()));
    }
    let dim = path.dim();
    if let Some(f) = family.iter().find(|f| f.center.len() != dim) {
        return Err(MdeError::DimMismatch {
            expected: dim,
            found: f.center.len(),
        });
    }
    let lifts: Vec<_> = path
        .measures()
        .par_iter()
        .map(|m| spec.eval(m))
        .collect::<Result<_>>()?;
    let times = path.times();
    let per_test: Vec<Vec<ResidualEntry>> = family
        .par_iter()
        .enumerate()
        .map(|(ti, f)| {
            let flux: Vec<f64> = lifts
                .iter()
                .map(|v| {
                    v.iter()
                        .map(|(x, vel, w)| {
                            let g = f.gradient(x);
                            w * g.iter().zip(vel).map(|(a, b)| a * b).sum::<f64>()
                        })
                        .sum()
                })
                .collect();
            let base = path.measures()[0].integrate(|x| f.value(x));
            let mut integral = 0.0;
            let mut out = Vec::with_capacity(times.len());
            for k in 0..times.len() {
                if k > 0 {
                    integral += 0.5 * (times[k] - times[k - 1]) * (flux[k - 1] + flux[k]);
                }
                let change = path.measures()[k].integrate(|x| f.value(x)) - base;
                out.push(ResidualEntry {
                    test: ti,
                    node: k,
                    t: times[k],
                    defect: (change - integral).abs(),
                });
            }
            out
        })
        .collect();
    let entries: Vec<ResidualEntry> = per_test.into_iter().flatten().collect();
    let max_defect = entries.iter().map(|e| e.defect).fold(0.0, f64::max);
    let dt = times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    Ok(ResidualReport {
        entries,
        max_defect,
        dt,
        family: format!(
            "{} bumps, radius {}",
            family.len(),
            family.iter().map(|f| f.radius).fold(0.0, f64::max)
        ),
    })
}

/// Target of a convergence study.
#[derive(Clone)]
pub enum Reference {
    Path(MeasurePath),
    /// `t -> mu_t`.
    ClosedForm(Arc<dyn Fn(f64) -> Result<DiscreteMeasure> + Send + Sync>),
}

impl std::fmt::Debug for Reference {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Reference::Path(p) => f.debug_tuple("Path").field(&p.times().len()).finish(),
            Reference::ClosedForm(_) => f.write_str("ClosedForm"),
        }
    }
}

impl Reference {
    pub fn closed_form<F>(f: F) -> Self
    where
        F: Fn(f64) -> Result<DiscreteMeasure> + Send + Sync + 'static,
    {
        Reference::ClosedForm(Arc::new(f))
    }

    fn at(&self, t: f64) -> Result<DiscreteMeasure> {
        match self {
            Reference::Path(p) => interpolate_at(p, t),
            Reference::ClosedForm(f) => f(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// Resolution compared against when no reference is given.
    pub against: Option<usize>,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub scheme: SchemeKind,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("scheme,n,against,error\n");
        for r in &self.rows {
            let against = r.against.map(|n| n.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{},{},{}\n", self.scheme, r.n, against, fmt_f64(r.error)));
        }
        s
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }
}

/// Parameters shared by every run of a study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyConfig {
    pub t_final: f64,
    pub time_step: TimeStep,
    pub prune_floor: f64,
}

impl StudyConfig {
    pub fn new(t_final: f64) -> Self {
        Self {
            t_final,
            time_step: TimeStep::TOverN,
            prune_floor: 0.0,
        }
    }

    fn scheme_config(&self, scheme: SchemeKind, n: usize) -> Result<SchemeConfig> {
        let grid = GridSpec::with_time_step(self.time_step, n, self.t_final)?;
        let mut cfg = SchemeConfig::new(scheme, grid);
        cfg.prune_floor = self.prune_floor;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs `scheme` at every resolution of `ns` (in parallel).
pub fn run_sweep(
    spec: &PvfSpec,
    mu0: &DiscreteMeasure,
    scheme: SchemeKind,
    ns: &[usize],
    study: &StudyConfig,
) -> Result<Vec<MeasurePath>> {
    ns.par_iter()
        .map(|&n| run(spec, mu0, &study.scheme_config(scheme, n)?))
        .collect()
}

/// `sup_t W1(a_t, b_t)` over the given times.
pub fn sup_w1<F, G>(times: &[f64], a: F, b: G) -> Result<f64>
where
    F: Fn(f64) -> Result<DiscreteMeasure>,
    G: Fn(f64) -> Result<DiscreteMeasure>,
{
    let mut best = 0.0f64;
    for &t in times {
        best = best.max(w1_distance(&a(t)?, &b(t)?)?);
    }
    Ok(best)
}

/// Sup-in-time W1 errors over `ns`, measured at the node times of the
/// coarsest run. Without a reference, consecutive resolutions are compared.
pub fn convergence_study(
    spec: &PvfSpec,
    mu0: &DiscreteMeasure,
    scheme: SchemeKind,
    ns: &[usize],
    study: &StudyConfig,
    reference: Option<&Reference>,
) -> Result<ConvergenceTable> {
    if ns.is_empty() {
        return Err(MdeError::EmptyInput);
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MdeError::InvalidConfig(format!("resolutions must increase, got {ns:?}")));
    }
    let paths = run_sweep(spec, mu0, scheme, ns, study)?;
    convergence_from_paths(scheme, ns, &paths, reference)
}

/// [`convergence_study`] on precomputed runs (`paths[i]` at resolution `ns[i]`).
pub fn convergence_from_paths(
    scheme: SchemeKind,
    ns: &[usize],
    paths: &[MeasurePath],
    reference: Option<&Reference>,
) -> Result<ConvergenceTable> {
    if ns.is_empty() || ns.len() != paths.len() {
        return Err(MdeError::InvalidConfig("one path per resolution is required".into()));
    }
    let times = paths[0].times().to_vec();
    let rows: Vec<ConvergenceRow> = match reference {
        Some(r) => (0..ns.len())
            .into_par_iter()
            .map(|i| {
                let error = sup_w1(&times, |t| interpolate_at(&paths[i], t), |t| r.at(t))?;
                Ok(ConvergenceRow {
                    n: ns[i],
                    against: None,
                    error,
                })
            })
            .collect::<Result<_>>()?,
        None => (0..ns.len().saturating_sub(1))
            .into_par_iter()
            .map(|i| {
                let error = sup_w1(
                    &times,
                    |t| interpolate_at(&paths[i], t),
                    |t| interpolate_at(&paths[i + 1], t),
                )?;
                Ok(ConvergenceRow {
                    n: ns[i],
                    against: Some(ns[i + 1]),
                    error,
                })
            })
            .collect::<Result<_>>()?,
    };
    Ok(ConvergenceTable { scheme, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeGap {
    pub a: SchemeKind,
    pub b: SchemeKind,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareTable {
    pub n: usize,
    pub gaps: Vec<SchemeGap>,
}

impl CompareTable {
    pub fn gap(&self, a: SchemeKind, b: SchemeKind) -> Option<f64> {
        self.gaps
            .iter()
            .find(|g| (g.a == a && g.b == b) || (g.a == b && g.b == a))
            .map(|g| g.gap)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,scheme_a,scheme_b,gap\n");
        for g in &self.gaps {
            s.push_str(&format!("{},{},{},{}\n", self.n, g.a, g.b, fmt_f64(g.gap)));
        }
        s
    }
}

/// Pairwise sup-node W1 gaps among already computed runs of equal grid.
pub fn compare_paths(n: usize, paths: &[(SchemeKind, &MeasurePath)]) -> Result<CompareTable> {
    let mut pairs = Vec::new();
    for i in 0..paths.len() {
        for j in i + 1..paths.len() {
            pairs.push((i, j));
        }
    }
    let gaps = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (ka, pa) = paths[i];
            let (kb, pb) = paths[j];
            if pa.times().len() != pb.times().len() {
                return Err(MdeError::InvalidConfig("compared runs must share node times".into()));
            }
            let mut gap = 0.0f64;
            for (ma, mb) in pa.measures().iter().zip(pb.measures()) {
                gap = gap.max(w1_distance(ma, mb)?);
            }
            Ok(SchemeGap { a: ka, b: kb, gap })
        })
        .collect::<Result<_>>()?;
    Ok(CompareTable { n, gaps })
}

/// Runs all three schemes at resolution `n` and reports pairwise gaps.
pub fn scheme_compare(spec: &PvfSpec, mu0: &DiscreteMeasure, n: usize, study: &StudyConfig) -> Result<CompareTable> {
    let paths: Vec<MeasurePath> = SchemeKind::ALL
        .par_iter()
        .map(|&k| run(spec, mu0, &study.scheme_config(k, n)?))
        .collect::<Result<_>>()?;
    let refs: Vec<_> = SchemeKind::ALL.iter().copied().zip(paths.iter()).collect();
    compare_paths(n, &refs)
}
