//! Player and Nature strategies and the per-round approachability step.
//!
//! The per-round problem separates across contexts with weights
//! `Q^hat(x, .)`, so only the realized `x` is ever solved. Under unaware
//! monitoring Nature's action at `x` cannot depend on `s` and the step is a
//! matrix game; under aware monitoring Nature picks one column per group and
//! the step is a weighted minmax.

pub mod nature;
pub mod player;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::game::{solve_matrix_game, solve_weighted_minmax, MatrixGame};
use crate::objectives::ObjectivePair;
use crate::payoff::PayoffTensor;
use crate::prob::{JointDistribution, MixedAction};

pub use nature::{nature_best_response, BestResponse, Nature, NatureFamily, NatureSpec, NatureStrategy};
pub use player::{pareto_oracle_aware, pareto_oracle_unaware, ApproachabilityPlayer, HatRule, Player, PlayerSpec, PlayerStrategy, QSource, TabulatedPlayer};

/// Steering vectors shorter than this make every action optimal.
pub const ZERO_STEERING: f64 = 1e-12;

/// What Nature sees before acting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitoring {
    Aware,
    Unaware,
}

/// Nature's view of the current context. Only [`Monitoring::observe`]
/// builds one, so an unaware observation never carries `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    x: usize,
    s: Option<usize>,
}

impl Monitoring {
    pub fn observe(self, x: usize, s: usize) -> Observation {
        match self {
            Monitoring::Aware => Observation { x, s: Some(s) },
            Monitoring::Unaware => Observation { x, s: None },
        }
    }

    pub fn n_observations(self, n_x: usize, n_s: usize) -> usize {
        match self {
            Monitoring::Aware => n_x * n_s,
            Monitoring::Unaware => n_x,
        }
    }
}

impl Observation {
    pub fn x(&self) -> usize {
        self.x
    }

    pub fn s(&self) -> Option<usize> {
        self.s
    }

    /// Dense index: `x * n_s + s` when aware, `x` when unaware.
    pub fn index(&self, n_s: usize) -> usize {
        match self.s {
            Some(s) => self.x * n_s + s,
            None => self.x,
        }
    }
}

/// Which branch produced a step's action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Solved,
    ZeroSteering,
    OffSupport,
    SingleAction,
}

fn scalarized(payoff: &PayoffTensor, steering: &[f64], x: usize, s: usize) -> Vec<Vec<f64>> {
    let sh = payoff.shape();
    (0..sh.n_a)
        .map(|a| (0..sh.n_b).map(|b| payoff.dot(a, b, x, s, steering)).collect())
        .collect()
}

/// Player's action at `x` for steering `d = m_bar - c_bar`, with context
/// weights `row[s] = Q^hat(x, s)`.
pub fn step_at(payoff: &PayoffTensor, row: &[f64], steering: &[f64], monitoring: Monitoring, x: usize) -> Result<(MixedAction, StepKind)> {
    let sh = payoff.shape();
    check_dim(payoff.dim(), steering.len())?;
    check_dim(sh.n_s, row.len())?;
    if sh.n_a == 1 {
        return Ok((MixedAction::dirac(1, 0), StepKind::SingleAction));
    }
    if steering.iter().map(|v| v * v).sum::<f64>().sqrt() < ZERO_STEERING {
        return Ok((MixedAction::uniform(sh.n_a), StepKind::ZeroSteering));
    }
    if row.iter().sum::<f64>() <= 0.0 {
        return Ok((MixedAction::uniform(sh.n_a), StepKind::OffSupport));
    }
    let p = match monitoring {
        Monitoring::Unaware => {
            let mut m = vec![vec![0.0; sh.n_b]; sh.n_a];
            for (s, &w) in row.iter().enumerate() {
                if w > 0.0 {
                    for (acc, block) in m.iter_mut().zip(scalarized(payoff, steering, x, s)) {
                        for (v, e) in acc.iter_mut().zip(block) {
                            *v += w * e;
                        }
                    }
                }
            }
            solve_matrix_game(&MatrixGame::new(m)?)?.row_strategy
        }
        Monitoring::Aware => {
            let blocks: Vec<(f64, Vec<Vec<f64>>)> = row
                .iter()
                .enumerate()
                .map(|(s, &w)| (w, scalarized(payoff, steering, x, s)))
                .collect();
            solve_weighted_minmax(&blocks)?.0
        }
    };
    Ok((p, StepKind::Solved))
}

/// The per-`x` objective of the step evaluated at `p`: Nature's best reply
/// value, jointly over groups (unaware) or group by group (aware).
pub fn step_value(payoff: &PayoffTensor, row: &[f64], steering: &[f64], monitoring: Monitoring, x: usize, p: &MixedAction) -> f64 {
    let sh = payoff.shape();
    let per_group: Vec<Vec<f64>> = (0..sh.n_s)
        .map(|s| {
            (0..sh.n_b)
                .map(|b| (0..sh.n_a).map(|a| p.get(a) * payoff.dot(a, b, x, s, steering)).sum())
                .collect()
        })
        .collect();
    match monitoring {
        Monitoring::Unaware => (0..sh.n_b)
            .map(|b| row.iter().zip(&per_group).map(|(w, g)| w * g[b]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max),
        Monitoring::Aware => row
            .iter()
            .zip(&per_group)
            .map(|(w, g)| w * g.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .sum(),
    }
}

/// Argmin family of the approachability step at the realized `x`.
pub fn blackwell_step(
    pair: &ObjectivePair,
    q_hat: &JointDistribution,
    m_bar: &[f64],
    c_bar: &[f64],
    monitoring: Monitoring,
    x: usize,
) -> Result<MixedAction> {
    check_dim(m_bar.len(), c_bar.len())?;
    let d: Vec<f64> = m_bar.iter().zip(c_bar).map(|(m, c)| m - c).collect();
    Ok(step_at(&pair.payoff, q_hat.row(x), &d, monitoring, x)?.0)
}
