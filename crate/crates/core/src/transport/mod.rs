//! Wasserstein-1 distances between finitely-supported measures.
//!
//! On the line the distance is computed exactly by walking the two quantile
//! functions. Everywhere else it is the optimal value of the transportation
//! LP, solved by the dense simplex in [`simplex`].
//!
//! The ground metric on the tangent bundle is the sum
//! `|x - y| + |v - w|` of the Euclidean position and velocity distances.

pub mod simplex;

use std::fmt::Write as _;

use crate::error::{MdeError, Result};
use crate::measure::{dist, fmt_f64, DiscreteMeasure, LiftedMeasure, MASS_TOL};
use simplex::StandardLp;

/// A coupling between two atomic measures: `mass[i * cols + j]` is the mass
/// moved from atom `i` of the first measure to atom `j` of the second.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    pub mass: Vec<f64>,
}

/// An additional constraint `sum coeffs[i * cols + j] * T[i][j] <= bound`.
#[derive(Debug, Clone)]
pub struct ExtraConstraint {
    pub coeffs: Vec<f64>,
    pub bound: f64,
}

impl TransportPlan {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mass[i * self.cols + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.mass.chunks_exact(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for row in self.mass.chunks_exact(self.cols) {
            for (acc, m) in s.iter_mut().zip(row) {
                *acc += m;
            }
        }
        s
    }

    pub fn cost(&self, costs: &[f64]) -> f64 {
        self.mass.iter().zip(costs).map(|(m, c)| m * c).sum()
    }

    /// `i,j,mass` rows for every nonzero entry.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,mass\n");
        for i in 0..self.rows {
            for j in 0..self.cols {
                let m = self.get(i, j);
                if m > 0.0 {
                    let _ = writeln!(s, "{i},{j},{}", fmt_f64(m));
                }
            }
        }
        s
    }
}

fn normalized(marginal: &[f64], what: &str) -> Result<Vec<f64>> {
    if marginal.is_empty() {
        return Err(MdeError::EmptyInput);
    }
    if let Some((index, &weight)) = marginal.iter().enumerate().find(|(_, w)| **w < 0.0) {
        return Err(MdeError::NegativeWeight { index, weight });
    }
    let total: f64 = marginal.iter().sum();
    if !total.is_finite() || (total - 1.0).abs() > MASS_TOL {
        return Err(MdeError::InvalidMeasure(format!(
            "{what} marginal sums to {total}, expected 1"
        )));
    }
    Ok(marginal.iter().map(|w| w / total).collect())
}

/// Optimal plan of the transportation LP with cost matrix `costs`
/// (row-major, `row_marginals.len()` by `col_marginals.len()`), optionally
/// subject to one extra linear inequality. Returns the plan and its cost.
pub fn lp_solve(
    costs: &[f64],
    row_marginals: &[f64],
    col_marginals: &[f64],
    extra: Option<&ExtraConstraint>,
) -> Result<(TransportPlan, f64)> {
    let a = normalized(row_marginals, "row")?;
    let b = normalized(col_marginals, "column")?;
    let (m, n) = (a.len(), b.len());
    if costs.len() != m * n {
        return Err(MdeError::InvalidConfig(format!(
            "cost matrix has {} entries, expected {}",
            costs.len(),
            m * n
        )));
    }
    if costs.iter().any(|c| !c.is_finite()) {
        return Err(MdeError::InvalidConfig("non-finite transport cost".into()));
    }
    if let Some(e) = extra {
        if e.coeffs.len() != m * n || !e.bound.is_finite() {
            return Err(MdeError::InvalidConfig("malformed extra constraint".into()));
        }
    }

    let vars = m * n + usize::from(extra.is_some());
    let rows = m + n + usize::from(extra.is_some());
    let mut mat = vec![0.0; rows * vars];
    for i in 0..m {
        for j in 0..n {
            mat[i * vars + i * n + j] = 1.0;
            mat[(m + j) * vars + i * n + j] = 1.0;
        }
    }
    let mut rhs: Vec<f64> = a.iter().chain(&b).copied().collect();
    let mut c = costs.to_vec();
    if let Some(e) = extra {
        let r = m + n;
        mat[r * vars..r * vars + m * n].copy_from_slice(&e.coeffs);
        mat[r * vars + m * n] = 1.0;
        rhs.push(e.bound);
        c.push(0.0);
    }
    let lp = StandardLp {
        rows,
        cols: vars,
        a: mat,
        b: rhs,
        c,
    };
    let sol = simplex::solve(&lp, 10 * m * n)?;
    let plan = TransportPlan {
        rows: m,
        cols: n,
        mass: sol.x[..m * n].to_vec(),
    };
    let value = plan.cost(costs);
    Ok((plan, value))
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(MdeError::DimMismatch { expected: a, found: b });
    }
    Ok(())
}

/// Exact W1 on the line: integral of `|F^-1 - G^-1|` over `(0, 1)`,
/// accumulated over the merged breakpoints of the two quantile functions.
pub fn w1_quantile_1d(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    check_dims(mu.dim(), nu.dim())?;
    if mu.dim() != 1 {
        return Err(MdeError::DimMismatch {
            expected: 1,
            found: mu.dim(),
        });
    }
    let (xs, ws) = (mu.coords(), mu.weights());
    let (ys, vs) = (nu.coords(), nu.weights());
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (ws[0], vs[0]);
    let mut total = 0.0;
    while i < xs.len() && j < ys.len() {
        let chunk = ra.min(rb);
        total += chunk * (xs[i] - ys[j]).abs();
        ra -= chunk;
        rb -= chunk;
        // the smaller remainder is now exactly zero
        if ra <= rb {
            i += 1;
            if i < xs.len() {
                ra = ws[i];
            }
        } else {
            j += 1;
            if j < ys.len() {
                rb = vs[j];
            }
        }
    }
    Ok(total)
}

/// W1 through the transportation LP with Euclidean ground cost.
pub fn w1_lp(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    check_dims(mu.dim(), nu.dim())?;
    let costs: Vec<f64> = mu
        .iter()
        .flat_map(|(x, _)| nu.iter().map(move |(y, _)| dist(x, y)))
        .collect();
    let (_, value) = lp_solve(&costs, mu.weights(), nu.weights(), None)?;
    Ok(value)
}

/// Wasserstein-1 distance with Euclidean ground metric.
pub fn w1_distance(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    check_dims(mu.dim(), nu.dim())?;
    if mu.dim() == 1 {
        w1_quantile_1d(mu, nu)
    } else {
        w1_lp(mu, nu)
    }
}

fn lifted_costs<F>(v1: &LiftedMeasure, v2: &LiftedMeasure, cost: F) -> Vec<f64>
where
    F: Fn(&[f64], &[f64], &[f64], &[f64]) -> f64,
{
    let mut c = Vec::with_capacity(v1.len() * v2.len());
    for (x, v, _) in v1.iter() {
        for (y, w, _) in v2.iter() {
            c.push(cost(x, v, y, w));
        }
    }
    c
}

/// W1 on the tangent bundle with ground metric `|x - y| + |v - w|`.
pub fn lifted_w1(v1: &LiftedMeasure, v2: &LiftedMeasure) -> Result<f64> {
    check_dims(v1.dim(), v2.dim())?;
    let costs = lifted_costs(v1, v2, |x, v, y, w| dist(x, y) + dist(v, w));
    let (_, value) = lp_solve(&costs, v1.weights(), v2.weights(), None)?;
    Ok(value)
}

/// Minimal mean velocity displacement over couplings of `v1` and `v2`
/// whose position part is an optimal plan between the two bases.
///
/// Solved in two stages: the optimal position cost `W*` first, then the
/// velocity cost subject to a position cost of at most
/// `W* + 1e-9 (1 + W*)`. Not a metric: it vanishes whenever the fibers can
/// be matched exactly along an optimal position plan.
pub fn fiber_pseudometric(v1: &LiftedMeasure, v2: &LiftedMeasure) -> Result<f64> {
    check_dims(v1.dim(), v2.dim())?;
    let position = lifted_costs(v1, v2, |x, _, y, _| dist(x, y));
    let velocity = lifted_costs(v1, v2, |_, v, _, w| dist(v, w));
    let (_, w_star) = lp_solve(&position, v1.weights(), v2.weights(), None)?;
    let extra = ExtraConstraint {
        coeffs: position,
        bound: w_star + 1e-9 * (1.0 + w_star),
    };
    let (_, value) = lp_solve(&velocity, v1.weights(), v2.weights(), Some(&extra))?;
    Ok(value.max(0.0))
}
