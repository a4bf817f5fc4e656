//! Zero-sum matrix games and weighted minmax problems.
//!
//! Convention: the row player minimizes `p^T M q`, the column player maximizes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation};
use crate::prob::MixedAction;

/// Absolute duality gap above which a solution is rejected as a solver failure.
const GAP_REJECT: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixGame {
    payoff: Vec<Vec<f64>>,
}

impl MatrixGame {
    pub fn new(payoff: Vec<Vec<f64>>) -> Result<Self> {
        let cols = payoff.first().map_or(0, |r| r.len());
        if cols == 0 {
            return Err(Error::InvalidParameter("matrix game needs at least one row and column".into()));
        }
        if payoff.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidParameter("ragged payoff matrix".into()));
        }
        if payoff.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite payoff entry".into()));
        }
        Ok(Self { payoff })
    }

    pub fn rows(&self) -> usize {
        self.payoff.len()
    }

    pub fn cols(&self) -> usize {
        self.payoff[0].len()
    }

    pub fn payoff(&self) -> &[Vec<f64>] {
        &self.payoff
    }

    /// `max_b (p^T M)_b`: the row strategy's guaranteed ceiling.
    pub fn row_guarantee(&self, p: &MixedAction) -> f64 {
        (0..self.cols())
            .map(|b| (0..self.rows()).map(|a| p.get(a) * self.payoff[a][b]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `min_a (M q)_a`: the column strategy's guaranteed floor.
    pub fn col_guarantee(&self, q: &MixedAction) -> f64 {
        self.payoff
            .iter()
            .map(|row| row.iter().zip(q.weights()).map(|(m, w)| m * w).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSolution {
    pub value: f64,
    pub row_strategy: MixedAction,
    pub col_strategy: MixedAction,
}

impl GameSolution {
    /// Row guarantee minus column guarantee; zero at an exact equilibrium.
    pub fn duality_gap(&self, g: &MatrixGame) -> f64 {
        g.row_guarantee(&self.row_strategy) - g.col_guarantee(&self.col_strategy)
    }
}

fn to_mixed(mut v: Vec<f64>) -> Result<MixedAction> {
    v.iter_mut().for_each(|x| *x = x.max(0.0));
    let s: f64 = v.iter().sum();
    if s <= 0.0 {
        return Err(Error::Solver("degenerate LP strategy".into()));
    }
    v.iter_mut().for_each(|x| *x /= s);
    MixedAction::new(v)
}

fn dump(m: &[Vec<f64>]) -> String {
    format!("{m:?}")
}

/// Solves the game by shifting entries to be at least 1 and solving
/// `max 1^T x s.t. M'^T x <= 1`; the column strategy comes from the duals.
pub fn solve_matrix_game(g: &MatrixGame) -> Result<GameSolution> {
    let (na, nb) = (g.rows(), g.cols());
    if na == 1 || nb == 1 {
        return Ok(solve_degenerate(g));
    }
    let min = g.payoff.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - min;
    let mut lp = LinearProgram::new(vec![-1.0; na]);
    for b in 0..nb {
        lp.row((0..na).map(|a| g.payoff[a][b] + shift).collect(), Relation::Le, 1.0);
    }
    let sol = lp
        .solve()
        .map_err(|e| Error::Solver(format!("{e}; matrix {}", dump(&g.payoff))))?;
    let p = to_mixed(sol.x)?;
    let q = to_mixed(sol.duals.iter().map(|y| -y).collect())?;
    let out = GameSolution {
        value: g.row_guarantee(&p),
        row_strategy: p,
        col_strategy: q,
    };
    let gap = out.duality_gap(g);
    if gap.abs() > GAP_REJECT {
        return Err(Error::Solver(format!("duality gap {gap:e}; matrix {}", dump(&g.payoff))));
    }
    Ok(out)
}

/// One row or one column: the single player just picks the best pure action.
fn solve_degenerate(g: &MatrixGame) -> GameSolution {
    let (na, nb) = (g.rows(), g.cols());
    if na == 1 {
        let b = argmax(&g.payoff[0]);
        GameSolution {
            value: g.payoff[0][b],
            row_strategy: MixedAction::dirac(1, 0),
            col_strategy: MixedAction::dirac(nb, b),
        }
    } else {
        let col: Vec<f64> = g.payoff.iter().map(|r| r[0]).collect();
        let a = argmin(&col);
        GameSolution {
            value: col[a],
            row_strategy: MixedAction::dirac(na, a),
            col_strategy: MixedAction::dirac(1, 0),
        }
    }
}

/// First index attaining the maximum within 1e-12.
pub fn argmax(v: &[f64]) -> usize {
    let best = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    v.iter().position(|x| *x >= best - 1e-12).unwrap_or(0)
}

/// First index attaining the minimum within 1e-12.
pub fn argmin(v: &[f64]) -> usize {
    let best = v.iter().copied().fold(f64::INFINITY, f64::min);
    v.iter().position(|x| *x <= best + 1e-12).unwrap_or(0)
}

/// Weighted minmax value `sum_s w_s max_b (p M_s)_b` of a fixed `p`.
pub fn weighted_minmax_value(blocks: &[(f64, Vec<Vec<f64>>)], p: &MixedAction) -> f64 {
    blocks
        .iter()
        .filter(|(w, _)| *w > 0.0)
        .map(|(w, m)| {
            let nb = m[0].len();
            let worst = (0..nb)
                .map(|b| (0..m.len()).map(|a| p.get(a) * m[a][b]).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            w * worst
        })
        .sum()
}

/// Minimizes `sum_s w_s max_b (p M_s)_b` over mixed `p` with one LP in the
/// variables `(p, z_s)`.
pub fn solve_weighted_minmax(blocks: &[(f64, Vec<Vec<f64>>)]) -> Result<(MixedAction, f64)> {
    let na = blocks
        .first()
        .map(|(_, m)| m.len())
        .ok_or_else(|| Error::InvalidParameter("weighted minmax needs at least one block".into()))?;
    if na == 0 {
        return Err(Error::InvalidParameter("blocks need at least one row".into()));
    }
    for (w, m) in blocks {
        if !(w.is_finite() && *w >= 0.0) {
            return Err(Error::InvalidParameter(format!("block weight {w} must be >= 0")));
        }
        if m.len() != na {
            return Err(Error::Dimension { expected: na, got: m.len() });
        }
        let nb = m[0].len();
        if nb == 0 || m.iter().any(|r| r.len() != nb) {
            return Err(Error::InvalidParameter("ragged or empty block".into()));
        }
    }
    let active: Vec<&(f64, Vec<Vec<f64>>)> = blocks.iter().filter(|(w, _)| *w > 0.0).collect();
    if active.is_empty() {
        return Ok((MixedAction::uniform(na), 0.0));
    }
    if na == 1 {
        let p = MixedAction::dirac(1, 0);
        let v = weighted_minmax_value(blocks, &p);
        return Ok((p, v));
    }
    let ns = active.len();
    let mut cost = vec![0.0; na + ns];
    for (s, (w, _)) in active.iter().enumerate() {
        cost[na + s] = *w;
    }
    let mut lp = LinearProgram::new(cost);
    for (s, (_, m)) in active.iter().enumerate() {
        let shift = 1.0 - m.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        for b in 0..m[0].len() {
            let mut row = vec![0.0; na + ns];
            for a in 0..na {
                row[a] = m[a][b] + shift;
            }
            row[na + s] = -1.0;
            lp.row(row, Relation::Le, 0.0);
        }
    }
    let mut simplex = vec![1.0; na];
    simplex.resize(na + ns, 0.0);
    lp.row(simplex, Relation::Eq, 1.0);
    let sol = lp.solve()?;
    let p = to_mixed(sol.x[..na].to_vec())?;
    let v = weighted_minmax_value(blocks, &p);
    Ok((p, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(m: Vec<Vec<f64>>) -> GameSolution {
        solve_matrix_game(&MatrixGame::new(m).unwrap()).unwrap()
    }

    #[test]
    fn matching_pennies() {
        let s = solve(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        assert!(s.value.abs() < 1e-12);
        assert!((s.row_strategy.get(0) - 0.5).abs() < 1e-12);
        assert!((s.col_strategy.get(0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_closed_form() {
        let s = solve(vec![vec![3.0, 1.0], vec![0.0, 2.0]]);
        // (ad - bc) / (a + d - b - c) = (6 - 0) / (5 - 1).
        assert!((s.value - 1.5).abs() < 1e-12);
    }

    #[test]
    fn one_by_one_and_strips() {
        let s = solve(vec![vec![-2.5]]);
        assert_eq!(s.value, -2.5);
        assert_eq!(s.row_strategy, MixedAction::dirac(1, 0));
        let row = solve(vec![vec![1.0, 4.0, 4.0]]);
        assert_eq!((row.value, row.col_strategy.as_dirac()), (4.0, Some(1)));
        let col = solve(vec![vec![3.0], vec![-1.0], vec![-1.0]]);
        assert_eq!((col.value, col.row_strategy.as_dirac()), (-1.0, Some(1)));
    }

    #[test]
    fn invalid_games() {
        assert!(MatrixGame::new(vec![]).is_err());
        assert!(MatrixGame::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(MatrixGame::new(vec![vec![f64::NAN]]).is_err());
    }

    #[test]
    fn weighted_minmax_examples() {
        let m = vec![vec![3.0, 1.0], vec![0.0, 2.0]];
        let (p, v) = solve_weighted_minmax(&[(1.0, m.clone())]).unwrap();
        let g = solve(m);
        assert!((v - g.value).abs() < 1e-12);
        assert!((p.get(0) - g.row_strategy.get(0)).abs() < 1e-12);

        let (p, v) = solve_weighted_minmax(&[(0.0, vec![vec![1.0], vec![2.0], vec![3.0]])]).unwrap();
        assert_eq!((p, v), (MixedAction::uniform(3), 0.0));

        let blocks = vec![
            (0.5, vec![vec![1.0], vec![0.0]]),
            (0.5, vec![vec![0.0], vec![1.0]]),
        ];
        let (p, v) = solve_weighted_minmax(&blocks).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        // Any p attains 0.5 here; the value is what is pinned.
        assert!((weighted_minmax_value(&blocks, &p) - 0.5).abs() < 1e-12);
        assert!(solve_weighted_minmax(&[]).is_err());
    }

    #[test]
    fn tie_breaks_pick_smallest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmin(&[2.0, 0.0, 0.0 + 1e-13]), 1);
    }
}
