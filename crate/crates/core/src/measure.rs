//! Finitely-supported probability measures on `R^d` and on the tangent
//! bundle `R^d x R^d`.
//!
//! Every measure is kept in canonical form: atoms sorted lexicographically,
//! atoms closer than [`CANONICAL_TOL`] (per coordinate) merged, atoms lighter
//! than [`WEIGHT_FLOOR`] dropped and the remaining weights renormalized to a
//! total mass of one. Measures are immutable values; every operation returns
//! a new measure.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::io::{self, Write};

use crate::error::{MdeError, Result};

/// Per-coordinate tolerance used to identify atoms.
pub const CANONICAL_TOL: f64 = 1e-12;
/// Atoms lighter than this are dropped during canonicalization.
pub const WEIGHT_FLOOR: f64 = 1e-15;
/// Tolerance on total mass.
pub const MASS_TOL: f64 = 1e-9;

/// A probability measure on `R^dim` with finitely many atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

/// A probability measure on `R^dim x R^dim` with finitely many atoms. Each
/// atom is a (position, velocity) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

/// A lifted measure split into its position marginal and the conditional
/// velocity law over each base atom.
#[derive(Debug, Clone, PartialEq)]
pub struct Disintegration {
    pub base: DiscreteMeasure,
    /// `fibers[i]` is the velocity law over `base.atom(i)`.
    pub fibers: Vec<DiscreteMeasure>,
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => {}
            other => return other,
        }
    }
    Ordering::Equal
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Greedy grouping of lexicographically sorted points: each point joins the
/// earliest existing group whose representative (its first point) lies within
/// `tol` in the l-infinity norm, otherwise it opens a new group. Only the
/// first `key_len` coordinates of each `stride`-sized record are compared.
///
/// Returns the group index of every point and the point index of every
/// group representative.
pub(crate) fn group_sorted(
    coords: &[f64],
    stride: usize,
    key_len: usize,
    tol: f64,
) -> (Vec<usize>, Vec<usize>) {
    let n = coords.len().checked_div(stride).unwrap_or(0);
    let key = |i: usize| &coords[i * stride..i * stride + key_len];
    let mut group_of = Vec::with_capacity(n);
    let mut reps: Vec<usize> = Vec::new();
    for i in 0..n {
        let p = key(i);
        let mut found = None;
        // reps are ordered by first coordinate, so only a trailing window can match
        for g in (0..reps.len()).rev() {
            let r = key(reps[g]);
            if r[0] < p[0] - tol {
                break;
            }
            if linf(r, p) <= tol {
                found = Some(g);
            }
        }
        match found {
            Some(g) => group_of.push(g),
            None => {
                group_of.push(reps.len());
                reps.push(i);
            }
        }
    }
    (group_of, reps)
}

/// Sorts records, merges near-duplicates, applies the weight floor and
/// renormalizes. Weights must already be validated as finite and
/// nonnegative with a positive sum.
fn canonicalize(
    stride: usize,
    coords: &[f64],
    weights: &[f64],
    tol: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = weights.len();
    let total: f64 = weights.iter().sum();
    let mut order: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
    order.sort_by(|&a, &b| {
        lex_cmp(
            &coords[a * stride..(a + 1) * stride],
            &coords[b * stride..(b + 1) * stride],
        )
    });
    let mut sorted = Vec::with_capacity(order.len() * stride);
    let mut sorted_w = Vec::with_capacity(order.len());
    for &i in &order {
        sorted.extend_from_slice(&coords[i * stride..(i + 1) * stride]);
        sorted_w.push(weights[i] / total);
    }
    let (group_of, reps) = group_sorted(&sorted, stride, stride, tol);
    let mut group_w = vec![0.0; reps.len()];
    for (i, &g) in group_of.iter().enumerate() {
        group_w[g] += sorted_w[i];
    }
    let kept: Vec<usize> = (0..reps.len()).filter(|&g| group_w[g] >= WEIGHT_FLOOR).collect();
    let kept_total: f64 = kept.iter().map(|&g| group_w[g]).sum();
    let mut out = Vec::with_capacity(kept.len() * stride);
    let mut out_w = Vec::with_capacity(kept.len());
    for g in kept {
        let r = reps[g];
        out.extend_from_slice(&sorted[r * stride..(r + 1) * stride]);
        out_w.push(group_w[g] / kept_total);
    }
    (out, out_w)
}

fn validate(dim: usize, stride: usize, coords: &[f64], weights: &[f64]) -> Result<()> {
    if dim == 0 {
        return Err(MdeError::InvalidMeasure("dimension must be positive".into()));
    }
    if weights.is_empty() {
        return Err(MdeError::EmptyInput);
    }
    if coords.len() != weights.len() * stride {
        return Err(MdeError::InvalidMeasure(format!(
            "{} coordinates do not describe {} atoms of width {}",
            coords.len(),
            weights.len(),
            stride
        )));
    }
    if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
        return Err(MdeError::InvalidMeasure(format!(
            "non-finite coordinate at atom {}",
            i / stride
        )));
    }
    for (index, &weight) in weights.iter().enumerate() {
        if weight.is_nan() || weight.is_infinite() {
            return Err(MdeError::InvalidMeasure(format!("non-finite weight at atom {index}")));
        }
        if weight < 0.0 {
            return Err(MdeError::NegativeWeight { index, weight });
        }
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(MdeError::InvalidMeasure("total weight must be positive".into()));
    }
    Ok(())
}

/// Builds a canonical measure from a list of points and nonnegative weights.
pub fn make_measure(points: &[Vec<f64>], weights: &[f64]) -> Result<DiscreteMeasure> {
    let dim = points.first().map(Vec::len).ok_or(MdeError::EmptyInput)?;
    if points.len() != weights.len() {
        return Err(MdeError::InvalidMeasure(format!(
            "{} points but {} weights",
            points.len(),
            weights.len()
        )));
    }
    let mut coords = Vec::with_capacity(points.len() * dim);
    for p in points {
        if p.len() != dim {
            return Err(MdeError::DimMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        coords.extend_from_slice(p);
    }
    DiscreteMeasure::new(dim, coords, weights.to_vec())
}

impl DiscreteMeasure {
    /// Builds a canonical measure from flat coordinates (`dim` per atom).
    pub fn new(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(dim, coords, weights, CANONICAL_TOL)
    }

    /// Like [`DiscreteMeasure::new`] with an explicit merge tolerance.
    pub fn with_tolerance(dim: usize, coords: Vec<f64>, weights: Vec<f64>, tol: f64) -> Result<Self> {
        validate(dim, dim, &coords, &weights)?;
        let (coords, weights) = canonicalize(dim, &coords, &weights, tol.max(0.0));
        Ok(Self { dim, coords, weights })
    }

    /// One-dimensional convenience constructor.
    pub fn from_1d(points: &[f64], weights: &[f64]) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(MdeError::InvalidMeasure(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        Self::new(1, points.to_vec(), weights.to_vec())
    }

    /// Uniform weights on the given 1-D points.
    pub fn uniform_1d(points: &[f64]) -> Result<Self> {
        Self::from_1d(points, &vec![1.0; points.len()])
    }

    pub fn dirac(point: &[f64]) -> Self {
        assert!(!point.is_empty(), "dirac needs a point of positive dimension");
        Self {
            dim: point.len(),
            coords: point.to_vec(),
            weights: vec![1.0],
        }
    }

    /// Midpoint quantile discretization of the uniform law on `[a, b]`.
    pub fn uniform_quantiles(a: f64, b: f64, atoms: usize) -> Result<Self> {
        if atoms == 0 {
            return Err(MdeError::EmptyInput);
        }
        if !(a.is_finite() && b.is_finite()) || b < a {
            return Err(MdeError::InvalidMeasure(format!("bad interval [{a}, {b}]")));
        }
        let h = (b - a) / atoms as f64;
        let pts: Vec<f64> = (0..atoms).map(|i| a + (i as f64 + 0.5) * h).collect();
        Self::uniform_1d(&pts)
    }

    /// Wraps data that is already canonical.
    pub(crate) fn from_canonical(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(coords.len(), dim * weights.len());
        Self { dim, coords, weights }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.coords
            .chunks_exact(self.dim)
            .zip(self.weights.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `<mu, f>`.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    /// Weighted mean of the atoms.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (x, w) in self.iter() {
            for (mi, xi) in m.iter_mut().zip(x) {
                *mi += w * xi;
            }
        }
        m
    }

    /// Index of the atom within `tol` (l-infinity) of `x`, if any.
    pub fn find_atom(&self, x: &[f64], tol: f64) -> Option<usize> {
        if x.len() != self.dim {
            return None;
        }
        let lo = x[0] - tol;
        let (mut a, mut b) = (0, self.len());
        while a < b {
            let mid = (a + b) / 2;
            if self.atom(mid)[0] < lo {
                a = mid + 1;
            } else {
                b = mid;
            }
        }
        (a..self.len())
            .take_while(|&i| self.atom(i)[0] <= x[0] + tol)
            .find(|&i| linf(self.atom(i), x) <= tol)
    }

    /// Image measure under `f`. Atoms landing within [`CANONICAL_TOL`] of
    /// each other are merged.
    pub fn push_forward<F: Fn(&[f64]) -> Vec<f64>>(&self, f: F) -> Result<DiscreteMeasure> {
        let mut out_dim = None;
        let mut coords = Vec::with_capacity(self.coords.len());
        for (x, _) in self.iter() {
            let y = f(x);
            match out_dim {
                None => out_dim = Some(y.len()),
                Some(d) if d != y.len() => {
                    return Err(MdeError::DimMismatch {
                        expected: d,
                        found: y.len(),
                    })
                }
                _ => {}
            }
            coords.extend(y);
        }
        DiscreteMeasure::new(out_dim.unwrap_or(0), coords, self.weights.clone())
    }

    /// `mu (+) nu`: the law of `X + Y` for independent `X ~ mu`, `Y ~ nu`.
    pub fn convolve(&self, other: &DiscreteMeasure) -> Result<DiscreteMeasure> {
        if self.dim != other.dim {
            return Err(MdeError::DimMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut coords = Vec::with_capacity(self.len() * other.len() * self.dim);
        let mut weights = Vec::with_capacity(self.len() * other.len());
        for (x, wx) in self.iter() {
            for (y, wy) in other.iter() {
                coords.extend(x.iter().zip(y).map(|(a, b)| a + b));
                weights.push(wx * wy);
            }
        }
        DiscreteMeasure::new(self.dim, coords, weights)
    }

    /// `a . mu`: push-forward under `x -> a x`.
    pub fn scale_product(&self, a: f64) -> DiscreteMeasure {
        let coords = self.coords.iter().map(|x| a * x).collect();
        DiscreteMeasure::new(self.dim, coords, self.weights.clone())
            .expect("scaling a valid measure by a finite factor is valid")
    }

    /// Greedy lexicographic merge of atoms within `tol` (l-infinity).
    pub fn coalesce(&self, tol: f64) -> DiscreteMeasure {
        DiscreteMeasure::with_tolerance(self.dim, self.coords.clone(), self.weights.clone(), tol)
            .expect("coalescing a valid measure is valid")
    }

    /// Largest Euclidean norm over the support.
    pub fn support_radius(&self) -> f64 {
        self.coords
            .chunks_exact(self.dim)
            .map(norm)
            .fold(0.0, f64::max)
    }

    /// Drops atoms with weight below `floor` and renormalizes. Returns the
    /// pruned measure and the mass removed.
    pub fn prune(&self, floor: f64) -> (DiscreteMeasure, f64) {
        if floor <= 0.0 {
            return (self.clone(), 0.0);
        }
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.weights[i] >= floor).collect();
        if keep.is_empty() || keep.len() == self.len() {
            return (self.clone(), 0.0);
        }
        let removed: f64 = (0..self.len())
            .filter(|&i| self.weights[i] < floor)
            .map(|i| self.weights[i])
            .sum();
        let kept_total = 1.0 - removed;
        let mut coords = Vec::with_capacity(keep.len() * self.dim);
        let mut weights = Vec::with_capacity(keep.len());
        for i in keep {
            coords.extend_from_slice(self.atom(i));
            weights.push(self.weights[i] / kept_total);
        }
        (DiscreteMeasure::from_canonical(self.dim, coords, weights), removed)
    }

    /// Atom-by-atom comparison of two canonical measures.
    pub fn approx_eq(&self, other: &DiscreteMeasure, coord_tol: f64, weight_tol: f64) -> bool {
        self.dim == other.dim
            && self.len() == other.len()
            && self
                .iter()
                .zip(other.iter())
                .all(|((x, wx), (y, wy))| linf(x, y) <= coord_tol && (wx - wy).abs() <= weight_tol)
    }

    /// CSV rows `t,x1..xd,weight`, one per atom.
    pub fn csv_rows(&self, t: f64) -> String {
        let mut s = String::new();
        for (x, w) in self.iter() {
            s.push_str(&fmt_f64(t));
            for c in x {
                s.push(',');
                s.push_str(&fmt_f64(*c));
            }
            s.push(',');
            s.push_str(&fmt_f64(w));
            s.push('\n');
        }
        s
    }

    pub fn write_csv<W: Write>(&self, out: &mut W, t: f64) -> io::Result<()> {
        writeln!(out, "{}", csv_header(self.dim))?;
        out.write_all(self.csv_rows(t).as_bytes())
    }
}

/// `t,x1,...,xd,weight`.
pub fn csv_header(dim: usize) -> String {
    let mut h = String::from("t");
    for i in 1..=dim {
        let _ = write!(h, ",x{i}");
    }
    h.push_str(",weight");
    h
}

/// Fixed 17-significant-digit formatting used by every CSV artifact.
pub fn fmt_f64(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

impl LiftedMeasure {
    /// Builds a canonical lifted measure. `coords` holds `2 * dim` values per
    /// atom: the position followed by the velocity.
    pub fn new(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        validate(dim, 2 * dim, &coords, &weights)?;
        let (coords, weights) = canonicalize(2 * dim, &coords, &weights, CANONICAL_TOL);
        Ok(Self { dim, coords, weights })
    }

    pub fn from_pairs(pairs: &[(Vec<f64>, Vec<f64>)], weights: &[f64]) -> Result<Self> {
        let dim = pairs.first().map(|p| p.0.len()).ok_or(MdeError::EmptyInput)?;
        if pairs.len() != weights.len() {
            return Err(MdeError::InvalidMeasure(format!(
                "{} pairs but {} weights",
                pairs.len(),
                weights.len()
            )));
        }
        let mut coords = Vec::with_capacity(pairs.len() * 2 * dim);
        for (x, v) in pairs {
            for part in [x, v] {
                if part.len() != dim {
                    return Err(MdeError::DimMismatch {
                        expected: dim,
                        found: part.len(),
                    });
                }
                coords.extend_from_slice(part);
            }
        }
        Self::new(dim, coords, weights.to_vec())
    }

    /// The product `mu (x) omega`: every atom of `mu` carries the fiber `omega`.
    pub fn product(base: &DiscreteMeasure, fiber: &DiscreteMeasure) -> Result<Self> {
        if base.dim() != fiber.dim() {
            return Err(MdeError::DimMismatch {
                expected: base.dim(),
                found: fiber.dim(),
            });
        }
        let dim = base.dim();
        let mut coords = Vec::with_capacity(base.len() * fiber.len() * 2 * dim);
        let mut weights = Vec::with_capacity(base.len() * fiber.len());
        for (x, wx) in base.iter() {
            for (v, wv) in fiber.iter() {
                coords.extend_from_slice(x);
                coords.extend_from_slice(v);
                weights.push(wx * wv);
            }
        }
        Self::new(dim, coords, weights)
    }

    /// `mu (x) delta_{v(x)}` for per-atom velocities (`velocities[i]` belongs
    /// to `base.atom(i)`).
    pub fn graph(base: &DiscreteMeasure, velocities: &[Vec<f64>]) -> Result<Self> {
        let dim = base.dim();
        let mut coords = Vec::with_capacity(base.len() * 2 * dim);
        for ((x, _), v) in base.iter().zip(velocities) {
            if v.len() != dim {
                return Err(MdeError::DimMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            coords.extend_from_slice(x);
            coords.extend_from_slice(v);
        }
        Self::new(dim, coords, base.weights().to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        let s = 2 * self.dim * i;
        &self.coords[s..s + self.dim]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        let s = 2 * self.dim * i + self.dim;
        &self.coords[s..s + self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(position, velocity, weight)` triples.
    pub fn iter(&self) -> impl Iterator<Item = (&[f64], &[f64], f64)> + '_ {
        self.coords
            .chunks_exact(2 * self.dim)
            .zip(self.weights.iter().copied())
            .map(move |(c, w)| (&c[..self.dim], &c[self.dim..], w))
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Position marginal (push-forward under the projection `(x, v) -> x`).
    pub fn base(&self) -> DiscreteMeasure {
        self.disintegrate().base
    }

    /// Largest `|v|` over the support.
    pub fn max_speed(&self) -> f64 {
        self.iter().map(|(_, v, _)| norm(v)).fold(0.0, f64::max)
    }

    /// Push-forward under `(x, v) -> x + s v`, merging atoms within `tol`.
    pub fn displace(&self, s: f64, tol: f64) -> DiscreteMeasure {
        let mut coords = Vec::with_capacity(self.len() * self.dim);
        for (x, v, _) in self.iter() {
            coords.extend(x.iter().zip(v).map(|(a, b)| a + s * b));
        }
        DiscreteMeasure::with_tolerance(self.dim, coords, self.weights.clone(), tol)
            .expect("displacing a valid lifted measure is valid")
    }

    /// Splits into the position marginal and conditional velocity laws.
    /// Positions are identified at [`CANONICAL_TOL`].
    pub fn disintegrate(&self) -> Disintegration {
        let stride = 2 * self.dim;
        let (group_of, reps) = group_sorted(&self.coords, stride, self.dim, CANONICAL_TOL);
        let mut base_w = vec![0.0; reps.len()];
        for (i, &g) in group_of.iter().enumerate() {
            base_w[g] += self.weights[i];
        }
        let mut fiber_coords: Vec<Vec<f64>> = vec![Vec::new(); reps.len()];
        let mut fiber_w: Vec<Vec<f64>> = vec![Vec::new(); reps.len()];
        for (i, &g) in group_of.iter().enumerate() {
            fiber_coords[g].extend_from_slice(self.velocity(i));
            fiber_w[g].push(self.weights[i] / base_w[g]);
        }
        let mut base_coords = Vec::with_capacity(reps.len() * self.dim);
        for &r in &reps {
            base_coords.extend_from_slice(self.position(r));
        }
        let fibers = fiber_coords
            .into_iter()
            .zip(fiber_w)
            .map(|(c, w)| {
                DiscreteMeasure::new(self.dim, c, w).expect("fiber of a valid lifted measure")
            })
            .collect();
        Disintegration {
            base: DiscreteMeasure::from_canonical(self.dim, base_coords, base_w),
            fibers,
        }
    }

    pub fn approx_eq(&self, other: &LiftedMeasure, coord_tol: f64, weight_tol: f64) -> bool {
        self.dim == other.dim
            && self.len() == other.len()
            && self.coords.chunks_exact(2 * self.dim).zip(other.coords.chunks_exact(2 * self.dim)).all(
                |(a, b)| linf(a, b) <= coord_tol,
            )
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| (a - b).abs() <= weight_tol)
    }
}

impl Disintegration {
    /// Fiber over the base atom within [`CANONICAL_TOL`] of `x`.
    pub fn fiber_at(&self, x: &[f64]) -> Option<&DiscreteMeasure> {
        self.base.find_atom(x, CANONICAL_TOL).map(|i| &self.fibers[i])
    }

    /// `base (x) fibers`.
    pub fn recombine(&self) -> Result<LiftedMeasure> {
        let dim = self.base.dim();
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for ((x, wx), fiber) in self.base.iter().zip(&self.fibers) {
            for (v, wv) in fiber.iter() {
                coords.extend_from_slice(x);
                coords.extend_from_slice(v);
                weights.push(wx * wv);
            }
        }
        LiftedMeasure::new(dim, coords, weights)
    }
}
