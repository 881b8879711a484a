//! Dense two-phase primal simplex for small linear programs in standard form
//!
//! ```text
//! minimize c.x  subject to  A x = b,  x >= 0
//! ```
//!
//! Entering and leaving variables follow Bland's rule, so the method
//! terminates on degenerate problems (the transportation polytope is highly
//! degenerate). Redundant equality rows are tolerated: their artificial
//! variables stay basic at zero and are never priced back in.

use crate::error::{MdeError, Result};

const PIVOT_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-9;

/// An equality-form LP. `a` is row-major with `cols` entries per row.
#[derive(Debug, Clone)]
pub struct StandardLp {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

struct Tableau {
    rows: usize,
    /// real columns followed by one artificial per row, then the rhs
    width: usize,
    real: usize,
    t: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.t[r * self.width + self.width - 1]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let p = self.t[pr * w + pc];
        for j in 0..w {
            self.t[pr * w + j] /= p;
        }
        let prow: Vec<f64> = self.t[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.t[r * w + pc];
            if f != 0.0 {
                let row = &mut self.t[r * w..(r + 1) * w];
                for (x, p) in row.iter_mut().zip(&prow) {
                    *x -= f * p;
                }
                row[pc] = 0.0;
            }
        }
        let f = self.obj[pc];
        if f != 0.0 {
            for (x, p) in self.obj.iter_mut().zip(&prow) {
                *x -= f * p;
            }
            self.obj[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Reduced-cost row for `costs` (length `width - 1`) under the current basis.
    fn price(&mut self, costs: &[f64]) {
        let w = self.width;
        self.obj = costs.to_vec();
        self.obj.push(0.0);
        for r in 0..self.rows {
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                for j in 0..w {
                    self.obj[j] -= cb * self.t[r * w + j];
                }
            }
        }
    }

    /// Runs simplex iterations over columns `< allowed`; returns the pivot count.
    fn optimize(&mut self, allowed: usize, rc_eps: f64, cap: usize) -> Result<usize> {
        let mut iterations = 0;
        loop {
            let entering = (0..allowed).find(|&j| self.obj[j] < -rc_eps);
            let Some(pc) = entering else {
                return Ok(iterations);
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r).max(0.0) / a;
                    best = match best {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            let tie = (ratio - bratio).abs() <= 1e-12 * (1.0 + bratio.abs());
                            if ratio < bratio && !tie || tie && self.basis[r] < self.basis[br] {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            // Every LP built here is bounded (x sums to a constant), so an
            // unbounded ray means the column is numerically degenerate.
            let Some((pr, _)) = best else {
                return Err(MdeError::Infeasible);
            };
            if iterations >= cap {
                return Err(MdeError::IterationCap { cap });
            }
            self.pivot(pr, pc);
            iterations += 1;
        }
    }
}

/// Solves `lp` to optimality. `cap` bounds the pivots of each phase.
pub fn solve(lp: &StandardLp, cap: usize) -> Result<LpSolution> {
    let rows = lp.rows;
    let real = lp.cols;
    let width = real + rows + 1;
    let mut t = vec![0.0; rows * width];
    for r in 0..rows {
        let sign = if lp.b[r] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..real {
            t[r * width + j] = sign * lp.a[r * real + j];
        }
        t[r * width + real + r] = 1.0;
        t[r * width + width - 1] = sign * lp.b[r];
    }
    let mut tab = Tableau {
        rows,
        width,
        real,
        t,
        obj: Vec::new(),
        basis: (real..real + rows).collect(),
    };

    let mut phase1 = vec![0.0; real + rows];
    for c in phase1.iter_mut().skip(real) {
        *c = 1.0;
    }
    tab.price(&phase1);
    let mut iterations = tab.optimize(real + rows, 1e-12, cap)?;
    let infeasibility: f64 = (0..rows)
        .filter(|&r| tab.basis[r] >= real)
        .map(|r| tab.rhs(r).abs())
        .sum();
    if infeasibility > FEAS_EPS {
        return Err(MdeError::Infeasible);
    }
    // drive zero-level artificials out of the basis where a real column allows it
    for r in 0..rows {
        if tab.basis[r] >= tab.real {
            if let Some(j) = (0..tab.real).find(|&j| tab.at(r, j).abs() > 1e-9) {
                tab.pivot(r, j);
                iterations += 1;
            }
        }
    }

    let scale = lp.c.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut phase2 = lp.c.clone();
    phase2.extend(std::iter::repeat_n(0.0, rows));
    tab.price(&phase2);
    iterations += tab.optimize(real, 1e-11 * (1.0 + scale), cap)?;

    let mut x = vec![0.0; real];
    for r in 0..rows {
        let j = tab.basis[r];
        if j < real {
            x[j] = tab.rhs(r).max(0.0);
        }
    }
    let value = x.iter().zip(&lp.c).map(|(x, c)| x * c).sum();
    Ok(LpSolution { x, value, iterations })
}
