//! Independent reference computations shared by the integration suites.
#![allow(dead_code)]

use mde_core::measure::{DiscreteMeasure, LiftedMeasure};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// W1 on the line as `∫ |F(x) - G(x)| dx` over the merged support.
pub fn cdf_w1(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let mut xs: Vec<f64> = mu.coords().iter().chain(nu.coords()).copied().collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let cdf = |m: &DiscreteMeasure, x: f64| -> f64 { m.iter().filter(|(p, _)| p[0] <= x).map(|(_, w)| w).sum() };
    xs.windows(2)
        .map(|w| (cdf(mu, w[0]) - cdf(nu, w[0])).abs() * (w[1] - w[0]))
        .sum()
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    let pivot = a[col].clone();
                    for (x, p) in a[r][col..].iter_mut().zip(&pivot[col..]) {
                        *x -= f * p;
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Every basic feasible plan of the transportation polytope with the given
/// marginals, by enumeration of column bases. Small instances only.
pub fn transport_vertices(rows: &[f64], cols: &[f64]) -> Vec<Vec<f64>> {
    let (m, n) = (rows.len(), cols.len());
    // one column-marginal equation is redundant
    let eqs = m + n - 1;
    let mut rhs: Vec<f64> = rows.to_vec();
    rhs.extend_from_slice(&cols[..n - 1]);
    let coeff = |e: usize, var: usize| -> f64 {
        let (i, j) = (var / n, var % n);
        if e < m {
            f64::from(u8::from(i == e))
        } else {
            f64::from(u8::from(j == e - m))
        }
    };
    let mut out = Vec::new();
    for basis in subsets(m * n, eqs) {
        let a: Vec<Vec<f64>> = (0..eqs).map(|e| basis.iter().map(|&v| coeff(e, v)).collect()).collect();
        if let Some(x) = solve_square(a, rhs.clone()) {
            if x.iter().all(|v| *v >= -1e-12) {
                let mut plan = vec![0.0; m * n];
                for (&v, &val) in basis.iter().zip(&x) {
                    plan[v] = val.max(0.0);
                }
                out.push(plan);
            }
        }
    }
    out
}

fn plan_cost(plan: &[f64], costs: &[f64]) -> f64 {
    plan.iter().zip(costs).map(|(a, b)| a * b).sum()
}

/// Minimum of the transportation LP over the enumerated vertices.
pub fn vertex_min(costs: &[f64], rows: &[f64], cols: &[f64]) -> f64 {
    transport_vertices(rows, cols)
        .iter()
        .map(|p| plan_cost(p, costs))
        .fold(f64::INFINITY, f64::min)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn w1_vertex(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let costs: Vec<f64> = mu
        .iter()
        .flat_map(|(x, _)| nu.iter().map(move |(y, _)| euclid(x, y)))
        .collect();
    vertex_min(&costs, mu.weights(), nu.weights())
}

/// Velocity cost minimized over the vertices that are optimal for the
/// position cost.
pub fn fiber_vertex(a: &LiftedMeasure, b: &LiftedMeasure) -> f64 {
    let mut pos = Vec::new();
    let mut vel = Vec::new();
    for (x, v, _) in a.iter() {
        for (y, w, _) in b.iter() {
            pos.push(euclid(x, y));
            vel.push(euclid(v, w));
        }
    }
    let verts = transport_vertices(a.weights(), b.weights());
    let best = verts.iter().map(|p| plan_cost(p, &pos)).fold(f64::INFINITY, f64::min);
    verts
        .iter()
        .filter(|p| plan_cost(p, &pos) <= best + 1e-10)
        .map(|p| plan_cost(p, &vel))
        .fold(f64::INFINITY, f64::min)
}

/// `E|S_n| / n` for a simple symmetric walk of `n` unit steps, from
/// log-binomial coefficients.
pub fn binomial_mad(n: usize) -> f64 {
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, i| {
            *acc += (i as f64).ln();
            Some(*acc)
        }))
        .collect();
    let ln2 = std::f64::consts::LN_2;
    (0..=n)
        .map(|i| {
            let lc = ln_fact[n] - ln_fact[i] - ln_fact[n - i] - n as f64 * ln2;
            lc.exp() * (2.0 * i as f64 - n as f64).abs()
        })
        .sum::<f64>()
        / n as f64
}

pub fn random_measure(rng: &mut ChaCha8Rng, dim: usize, max_atoms: usize) -> DiscreteMeasure {
    let k = rng.gen_range(1..=max_atoms);
    let coords = (0..k * dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let weights = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    DiscreteMeasure::new(dim, coords, weights).unwrap()
}

pub fn random_lifted(rng: &mut ChaCha8Rng, max_atoms: usize) -> LiftedMeasure {
    let k = rng.gen_range(1..=max_atoms);
    // coarse positions make ties in the optimal plan common
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..k)
        .map(|_| {
            (
                vec![f64::from(rng.gen_range(-3..=3)) * 0.5],
                vec![rng.gen_range(-2.0..2.0)],
            )
        })
        .collect();
    let weights: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    LiftedMeasure::from_pairs(&pairs, &weights).unwrap()
}
