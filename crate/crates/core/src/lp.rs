//! Dense two-phase simplex with Bland's rule.
//!
//! Sized for the per-round games of the strategies: a few dozen variables
//! and constraints. Duals are read off the tableau columns that started as the
//! identity (slacks or artificials).

use crate::error::{Error, Result};
use crate::stats;

const EPS: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// `minimize c^T x` subject to the rows and `x >= 0`.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Relation, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per row, with `A^T y <= c` at optimality.
    pub duals: Vec<f64>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { objective, rows: Vec::new() }
    }

    pub fn row(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) -> &mut Self {
        self.rows.push((coeffs, rel, rhs));
        self
    }

    pub fn solve(&self) -> Result<LpSolution> {
        stats::record_lp();
        Tableau::build(self)?.run(self)
    }
}

struct Tableau {
    n: usize,
    ncols: usize,
    t: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    artificial_start: usize,
    id_col: Vec<usize>,
    flipped: Vec<bool>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Result<Self> {
        let n = lp.objective.len();
        let m = lp.rows.len();
        let mut rows = Vec::with_capacity(m);
        let mut flipped = Vec::with_capacity(m);
        for (coeffs, rel, rhs) in &lp.rows {
            if coeffs.len() != n {
                return Err(Error::Dimension { expected: n, got: coeffs.len() });
            }
            if *rhs < 0.0 {
                let rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                rows.push((coeffs.iter().map(|c| -c).collect::<Vec<_>>(), rel, -rhs));
                flipped.push(true);
            } else {
                rows.push((coeffs.clone(), *rel, *rhs));
                flipped.push(false);
            }
        }
        let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let artificial_start = n + n_slack;
        let ncols = artificial_start + n_art;
        let mut t = vec![vec![0.0; ncols + 1]; m];
        let mut basis = vec![0; m];
        let mut id_col = vec![0; m];
        let (mut next_slack, mut next_art) = (n, artificial_start);
        for (i, (coeffs, rel, rhs)) in rows.iter().enumerate() {
            t[i][..n].copy_from_slice(coeffs);
            t[i][ncols] = *rhs;
            match rel {
                Relation::Le => {
                    t[i][next_slack] = 1.0;
                    basis[i] = next_slack;
                    id_col[i] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    t[i][next_slack] = -1.0;
                    next_slack += 1;
                    t[i][next_art] = 1.0;
                    basis[i] = next_art;
                    id_col[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    t[i][next_art] = 1.0;
                    basis[i] = next_art;
                    id_col[i] = next_art;
                    next_art += 1;
                }
            }
        }
        Ok(Self {
            n,
            ncols,
            t,
            obj: vec![0.0; ncols + 1],
            basis,
            artificial_start,
            id_col,
            flipped,
        })
    }

    fn set_objective(&mut self, cost: &[f64]) {
        self.obj = vec![0.0; self.ncols + 1];
        self.obj[..cost.len()].copy_from_slice(cost);
        for r in 0..self.t.len() {
            let cb = cost.get(self.basis[r]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for j in 0..=self.ncols {
                    self.obj[j] -= cb * self.t[r][j];
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.t[r][j];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i != r {
                let f = row[j];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                    row[j] = 0.0;
                }
            }
        }
        let f = self.obj[j];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.obj[j] = 0.0;
        }
        self.basis[r] = j;
    }

    /// Runs Bland's rule over columns `< limit`.
    fn optimize(&mut self, limit: usize) -> Result<()> {
        for _ in 0..MAX_PIVOTS {
            let Some(j) = (0..limit).find(|&j| self.obj[j] < -EPS) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.t.len() {
                let a = self.t[r][j];
                if a > EPS {
                    let ratio = self.t[r][self.ncols] / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio - 1e-12
                                || (ratio <= bratio + 1e-12 && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Solver("linear program is unbounded".into()));
            };
            self.pivot(r, j);
        }
        Err(Error::Solver(format!("simplex exceeded {MAX_PIVOTS} pivots")))
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        if self.artificial_start < self.ncols {
            let mut phase1 = vec![0.0; self.ncols];
            phase1[self.artificial_start..].iter_mut().for_each(|c| *c = 1.0);
            self.set_objective(&phase1);
            self.optimize(self.ncols)?;
            let infeasibility = -self.obj[self.ncols];
            if infeasibility > FEAS_TOL {
                return Err(Error::Solver(format!(
                    "linear program is infeasible (phase-one residual {infeasibility:e})"
                )));
            }
            for r in 0..self.t.len() {
                if self.basis[r] >= self.artificial_start {
                    if let Some(j) = (0..self.artificial_start).find(|&j| self.t[r][j].abs() > FEAS_TOL) {
                        self.pivot(r, j);
                    }
                }
            }
        }
        self.set_objective(&lp.objective);
        self.optimize(self.artificial_start)?;

        let mut x = vec![0.0; self.n];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                x[b] = self.t[r][self.ncols].max(0.0);
            }
        }
        let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        let cost = |j: usize| lp.objective.get(j).copied().unwrap_or(0.0);
        let duals = (0..self.t.len())
            .map(|i| {
                let y: f64 = (0..self.t.len())
                    .map(|r| cost(self.basis[r]) * self.t[r][self.id_col[i]])
                    .sum();
                if self.flipped[i] {
                    -y
                } else {
                    y
                }
            })
            .collect();
        Ok(LpSolution { x, objective, duals })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), value 36.
        let mut lp = LinearProgram::new(vec![-3.0, -5.0]);
        lp.row(vec![1.0, 0.0], Relation::Le, 4.0)
            .row(vec![0.0, 2.0], Relation::Le, 12.0)
            .row(vec![3.0, 2.0], Relation::Le, 18.0);
        let s = lp.solve().unwrap();
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
        assert!((s.objective + 36.0).abs() < 1e-12);
        // Dual optimum (0, 1.5, 1) for the max form, negated for the min form.
        let expected = [0.0, -1.5, -1.0];
        for (y, e) in s.duals.iter().zip(expected) {
            assert!((y - e).abs() < 1e-12, "{:?}", s.duals);
        }
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + 2y s.t. x + y = 1, x >= 0.25, y >= 0.5 (as -y <= -0.5) -> (0.5, 0.5).
        let mut lp = LinearProgram::new(vec![1.0, 2.0]);
        lp.row(vec![1.0, 1.0], Relation::Eq, 1.0)
            .row(vec![1.0, 0.0], Relation::Ge, 0.25)
            .row(vec![0.0, -1.0], Relation::Le, -0.5);
        let s = lp.solve().unwrap();
        assert!((s.x[0] - 0.5).abs() < 1e-12 && (s.x[1] - 0.5).abs() < 1e-12);
        assert!((s.objective - 1.5).abs() < 1e-12);
        // Strong duality: b^T y equals the optimum.
        let by = s.duals[0] * 1.0 + s.duals[1] * 0.25 + s.duals[2] * -0.5;
        assert!((by - 1.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.row(vec![1.0], Relation::Le, 1.0).row(vec![1.0], Relation::Ge, 2.0);
        assert!(matches!(lp.solve(), Err(Error::Solver(m)) if m.contains("infeasible")));
        let mut lp = LinearProgram::new(vec![-1.0]);
        lp.row(vec![-1.0], Relation::Le, 1.0);
        assert!(matches!(lp.solve(), Err(Error::Solver(m)) if m.contains("unbounded")));
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.row(vec![1.0, 1.0], Relation::Eq, 1.0).row(vec![2.0, 2.0], Relation::Eq, 2.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
    }
}
