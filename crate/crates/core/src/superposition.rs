//! Probabilistic representation of scheme outputs as finite weighted
//! families of piecewise-linear curves, and the checks that such a family
//! follows the PVF in mean.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{MdeError, Result};
use crate::measure::{lex_cmp, DiscreteMeasure, LiftedMeasure, CANONICAL_TOL, MASS_TOL};
use crate::pvf::PvfSpec;
use crate::schemes::{MeasurePath, DEFAULT_MAX_ATOMS};

/// One weighted curve: `knots[k]` is its position at `times[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub weight: f64,
    pub knots: Vec<Vec<f64>>,
}

impl Curve {
    fn key(&self) -> Vec<f64> {
        self.knots.iter().flatten().copied().collect()
    }
}

/// Weighted curves sharing the knot times; evaluated by linear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEnsemble {
    pub times: Vec<f64>,
    pub curves: Vec<Curve>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub weight: f64,
    pub start: Vec<f64>,
    pub velocity: Vec<f64>,
}

/// Straight segments `t -> start + (t - t_start) velocity` on one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentEnsemble {
    pub t_start: f64,
    pub t_end: f64,
    pub segments: Vec<Segment>,
}

/// Outcome of the fiber-barycenter check at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarycenterReport {
    pub t: f64,
    /// Largest `|mean right slope - w(y)|` over the occupied positions `y`.
    pub max_defect: f64,
    pub positions: usize,
    /// Slopes are one-sided at knots; the right derivative is used.
    pub convention: &'static str,
}

/// One segment per lifted atom.
pub fn segment_ensemble(v: &LiftedMeasure, t_start: f64, t_end: f64) -> Result<SegmentEnsemble> {
    if t_start.partial_cmp(&t_end) != Some(std::cmp::Ordering::Less) {
        return Err(MdeError::InvalidConfig(format!(
            "segment interval [{t_start}, {t_end}] is empty"
        )));
    }
    let segments = v
        .iter()
        .map(|(x, vel, w)| Segment {
            weight: w,
            start: x.to_vec(),
            velocity: vel.to_vec(),
        })
        .collect();
    Ok(SegmentEnsemble {
        t_start,
        t_end,
        segments,
    })
}

/// Groups item indices by position (exact up to [`CANONICAL_TOL`]) and
/// returns, per atom of `joint`, the indices landing on it. Items that match
/// no atom are reported as an error.
fn group_by_atom<'a, I>(joint: &DiscreteMeasure, points: I, what: &str) -> Result<Vec<Vec<usize>>>
where
    I: Iterator<Item = &'a [f64]>,
{
    let mut groups = vec![Vec::new(); joint.len()];
    for (i, p) in points.enumerate() {
        let a = joint.find_atom(p, CANONICAL_TOL).ok_or_else(|| MdeError::EndpointMismatch {
            position: p.to_vec(),
            detail: format!("{what} point is not an atom of the joint measure"),
        })?;
        groups[a].push(i);
    }
    Ok(groups)
}

impl TrajectoryEnsemble {
    /// Constant one-knot curves on the atoms of `mu`.
    pub fn from_measure(mu: &DiscreteMeasure, t0: f64) -> Self {
        Self {
            times: vec![t0],
            curves: mu
                .iter()
                .map(|(x, w)| Curve {
                    weight: w,
                    knots: vec![x.to_vec()],
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.curves.iter().map(|c| c.weight).sum()
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("ensembles have at least one knot")
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let (start, end) = (self.t_start(), self.t_end());
        let tol = 1e-12 * end.abs().max(1.0);
        if !(t >= start - tol && t <= end + tol) {
            return Err(MdeError::OutOfRange { t, start, end });
        }
        if self.times.len() == 1 {
            return Ok((0, 0.0));
        }
        let k = self.times.partition_point(|&s| s <= t).clamp(1, self.times.len() - 1) - 1;
        let s = ((t - self.times[k]) / (self.times[k + 1] - self.times[k])).clamp(0.0, 1.0);
        Ok((k, s))
    }

    fn position(curve: &Curve, k: usize, s: f64) -> Vec<f64> {
        if s == 0.0 {
            return curve.knots[k].clone();
        }
        if s == 1.0 {
            return curve.knots[k + 1].clone();
        }
        curve.knots[k]
            .iter()
            .zip(&curve.knots[k + 1])
            .map(|(a, b)| a + s * (b - a))
            .collect()
    }

    /// Position of every curve at `t`.
    pub fn positions_at(&self, t: f64) -> Result<Vec<Vec<f64>>> {
        let (k, s) = self.locate(t)?;
        Ok(self.curves.iter().map(|c| Self::position(c, k, s)).collect())
    }

    /// Right-hand slope of every curve at `t` (requires `t < t_end`).
    pub fn right_slopes_at(&self, t: f64) -> Result<Vec<Vec<f64>>> {
        let (start, end) = (self.t_start(), self.t_end());
        let tol = 1e-12 * end.abs().max(1.0);
        if self.times.len() < 2 || !(t >= start - tol && t < end - tol) {
            return Err(MdeError::OutOfRange { t, start, end });
        }
        let k = self.times.partition_point(|&s| s <= t + tol) - 1;
        let dt = self.times[k + 1] - self.times[k];
        Ok(self
            .curves
            .iter()
            .map(|c| {
                c.knots[k]
                    .iter()
                    .zip(&c.knots[k + 1])
                    .map(|(a, b)| (b - a) / dt)
                    .collect()
            })
            .collect())
    }

    /// Merges curves whose knots all agree within [`CANONICAL_TOL`] and
    /// sorts curves lexicographically by knots.
    fn merge_identical(&mut self) {
        let mut keyed: Vec<(Vec<f64>, Curve)> = self.curves.drain(..).map(|c| (c.key(), c)).collect();
        keyed.sort_by(|a, b| lex_cmp(&a.0, &b.0));
        let mut out: Vec<(Vec<f64>, Curve)> = Vec::with_capacity(keyed.len());
        for (key, curve) in keyed {
            match out.last_mut() {
                Some((k, last)) if k.iter().zip(&key).all(|(a, b)| (a - b).abs() <= CANONICAL_TOL) => {
                    last.weight += curve.weight;
                }
                _ => out.push((key, curve)),
            }
        }
        self.curves = out.into_iter().map(|(_, c)| c).collect();
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ensembles serialize")
    }
}

/// Glues `tail` onto `head` through their common distribution `joint`:
/// within each joint atom the head curves ending there and the tail segments
/// starting there are paired by the product of their conditional weights.
pub fn concat_merge(
    head: &TrajectoryEnsemble,
    tail: &SegmentEnsemble,
    joint: &DiscreteMeasure,
) -> Result<TrajectoryEnsemble> {
    let tol = 1e-12 * head.t_end().abs().max(1.0);
    if (head.t_end() - tail.t_start).abs() > tol {
        return Err(MdeError::InvalidConfig(format!(
            "head ends at {} but tail starts at {}",
            head.t_end(),
            tail.t_start
        )));
    }
    let last = head.times.len() - 1;
    let head_groups = group_by_atom(joint, head.curves.iter().map(|c| c.knots[last].as_slice()), "head endpoint")?;
    let tail_groups = group_by_atom(joint, tail.segments.iter().map(|s| s.start.as_slice()), "tail start")?;

    let dt = tail.t_end - tail.t_start;
    let mut curves = Vec::new();
    for (a, (hg, tg)) in head_groups.iter().zip(&tail_groups).enumerate() {
        let m = joint.weight(a);
        let mh: f64 = hg.iter().map(|&i| head.curves[i].weight).sum();
        let mt: f64 = tg.iter().map(|&i| tail.segments[i].weight).sum();
        if (mh - m).abs() > MASS_TOL || (mt - m).abs() > MASS_TOL {
            return Err(MdeError::EndpointMismatch {
                position: joint.atom(a).to_vec(),
                detail: format!("joint mass {m}, head mass {mh}, tail mass {mt}"),
            });
        }
        for &i in hg {
            let c = &head.curves[i];
            for &j in tg {
                let s = &tail.segments[j];
                let mut knots = c.knots.clone();
                knots.push(s.start.iter().zip(&s.velocity).map(|(x, v)| x + dt * v).collect());
                curves.push(Curve {
                    weight: m * (c.weight / mh) * (s.weight / mt),
                    knots,
                });
            }
        }
    }
    let mut times = head.times.clone();
    times.push(tail.t_end);
    let mut out = TrajectoryEnsemble { times, curves };
    out.merge_identical();
    Ok(out)
}

/// Representation of a scheme run as a trajectory ensemble, with the
/// default curve cap.
pub fn build_representation(path: &MeasurePath) -> Result<TrajectoryEnsemble> {
    build_representation_capped(path, DEFAULT_MAX_ATOMS)
}

pub fn build_representation_capped(path: &MeasurePath, max_curves: usize) -> Result<TrajectoryEnsemble> {
    if !path.has_interpolation() {
        return Err(MdeError::MissingInterpolation {
            interval: path.interp().len(),
        });
    }
    let times = path.times();
    let mut eta = TrajectoryEnsemble::from_measure(&path.measures()[0], times[0]);
    for (k, lifted) in path.interp().iter().enumerate() {
        let tail = segment_ensemble(lifted, times[k], times[k + 1])?;
        let projected: usize = eta.len() * tail.segments.len();
        if projected > max_curves && eta.len().max(tail.segments.len()) > max_curves {
            return Err(MdeError::SupportBlowup {
                count: projected,
                cap: max_curves,
            });
        }
        eta = concat_merge(&eta, &tail, &path.measures()[k])?;
        if eta.len() > max_curves {
            return Err(MdeError::SupportBlowup {
                count: eta.len(),
                cap: max_curves,
            });
        }
    }
    Ok(eta)
}

/// `e_t # eta`.
pub fn evaluate_pushforward(eta: &TrajectoryEnsemble, t: f64) -> Result<DiscreteMeasure> {
    let pos = eta.positions_at(t)?;
    let dim = pos.first().map(Vec::len).ok_or(MdeError::EmptyInput)?;
    let coords = pos.into_iter().flatten().collect();
    let weights = eta.curves.iter().map(|c| c.weight).collect();
    DiscreteMeasure::new(dim, coords, weights)
}

/// Compares, at every occupied position `y` at time `t`, the mean right
/// slope of the curves through `y` with the PVF's barycentric field at
/// `(e_t # eta, y)`.
pub fn verify_fiber_barycenter(eta: &TrajectoryEnsemble, spec: &PvfSpec, t: f64) -> Result<BarycenterReport> {
    let slopes = eta.right_slopes_at(t)?;
    let positions = eta.positions_at(t)?;
    let mu = evaluate_pushforward(eta, t)?;
    let field = spec.barycentric_field(&mu)?;
    let dim = mu.dim();
    let mut sums: BTreeMap<usize, (f64, Vec<f64>)> = BTreeMap::new();
    for ((p, s), c) in positions.iter().zip(&slopes).zip(&eta.curves) {
        let a = mu.find_atom(p, CANONICAL_TOL).ok_or_else(|| MdeError::EndpointMismatch {
            position: p.clone(),
            detail: "curve position missing from the pushforward".into(),
        })?;
        let entry = sums.entry(a).or_insert_with(|| (0.0, vec![0.0; dim]));
        entry.0 += c.weight;
        for (acc, v) in entry.1.iter_mut().zip(s) {
            *acc += c.weight * v;
        }
    }
    let mut max_defect = 0.0f64;
    for (a, (w, sum)) in &sums {
        let w_field = field.velocity(*a);
        let defect = sum
            .iter()
            .zip(w_field)
            .map(|(s, f)| (s / w - f).powi(2))
            .sum::<f64>()
            .sqrt();
        max_defect = max_defect.max(defect);
    }
    Ok(BarycenterReport {
        t,
        max_defect,
        positions: sums.len(),
        convention: "right derivative",
    })
}

/// Largest curve speed over all intervals.
pub fn max_slope(eta: &TrajectoryEnsemble) -> f64 {
    let mut best = 0.0f64;
    for k in 0..eta.times.len().saturating_sub(1) {
        let dt = eta.times[k + 1] - eta.times[k];
        for c in &eta.curves {
            let speed = c.knots[k]
                .iter()
                .zip(&c.knots[k + 1])
                .map(|(a, b)| ((b - a) / dt).powi(2))
                .sum::<f64>()
                .sqrt();
            best = best.max(speed);
        }
    }
    best
}
