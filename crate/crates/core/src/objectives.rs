//! Catalog of (payoff tensor, target set) pairs: calibration, no-regret,
//! their group-wise versions, demographic parity, equalized payoffs and the
//! group-weight-free tradeoff reformulation.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::TargetSet;
use crate::payoff::{CalibrationGrid, PayoffTensor, RewardTensor, Shape};
use crate::prob::JointDistribution;

/// A vector payoff and the closed convex set its average should approach.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectivePair {
    pub name: String,
    pub payoff: PayoffTensor,
    pub target: TargetSet,
    /// Whether payoff entries embed `1 / gamma_s` factors.
    pub gamma_dependent: bool,
}

impl ObjectivePair {
    pub fn new(name: impl Into<String>, payoff: PayoffTensor, target: TargetSet, gamma_dependent: bool) -> Result<Self> {
        check_dim(payoff.dim(), target.dim())?;
        Ok(Self { name: name.into(), payoff, target, gamma_dependent })
    }

    pub fn shape(&self) -> Shape {
        self.payoff.shape()
    }
}

fn positive_gammas(gammas: &[f64]) -> Result<()> {
    match gammas.iter().position(|g| !(*g > 0.0)) {
        Some(s) => Err(Error::DegenerateGroup(s)),
        None => Ok(()),
    }
}

fn two_groups(gammas: &[f64]) -> Result<()> {
    if gammas.len() != 2 {
        return Err(Error::UnsupportedCardinality(format!("needs exactly two groups, got {}", gammas.len())));
    }
    positive_gammas(gammas)
}

/// Calibration: `m(k, b) = (a_k - b) e_k`, target the l1 ball of radius `1/N`.
pub fn calibration(grid: CalibrationGrid, n_x: usize, n_s: usize) -> Result<ObjectivePair> {
    let n = grid.n();
    let shape = Shape::new(n, 2, n_x, n_s)?;
    let payoff = PayoffTensor::from_fn(shape, n, |k, b, _, _, out| out[k] = grid.level(k) - b as f64)?;
    ObjectivePair::new("calibration", payoff, TargetSet::l1_ball(n, 1.0 / n as f64)?, false)
}

/// Group-wise calibration with `1 / gamma_s` block weights.
pub fn group_calibration(grid: CalibrationGrid, gammas: &[f64], n_x: usize) -> Result<ObjectivePair> {
    group_calibration_with_radius(grid, gammas, n_x, 1.0 / grid.n() as f64)
}

/// Group-wise calibration with an explicit l1 radius.
pub fn group_calibration_with_radius(grid: CalibrationGrid, gammas: &[f64], n_x: usize, radius: f64) -> Result<ObjectivePair> {
    positive_gammas(gammas)?;
    let n = grid.n();
    let shape = Shape::new(n, 2, n_x, gammas.len())?;
    let payoff = PayoffTensor::from_fn(shape, n * gammas.len(), |k, b, _, s, out| {
        out[s * n + k] = (grid.level(k) - b as f64) / gammas[s];
    })?;
    let target = TargetSet::l1_ball(n * gammas.len(), radius)?;
    ObjectivePair::new("group_calibration", payoff, target, true)
}

/// Vanilla regret: coordinate `a'` is `r(a,b,x,s) - r(a',b,x,s)`.
pub fn no_regret(r: &RewardTensor) -> Result<ObjectivePair> {
    let shape = r.shape();
    let payoff = PayoffTensor::from_fn(shape, shape.n_a, |a, b, x, s, out| {
        for (alt, o) in out.iter_mut().enumerate() {
            *o = r.get(a, b, x, s) - r.get(alt, b, x, s);
        }
    })?;
    ObjectivePair::new("no_regret", payoff, TargetSet::orthant(shape.n_a)?, false)
}

/// Group-wise regret, one unnormalized block of `|A|` coordinates per group.
pub fn group_no_regret(r: &RewardTensor) -> Result<ObjectivePair> {
    let shape = r.shape();
    let n_a = shape.n_a;
    let payoff = PayoffTensor::from_fn(shape, n_a * shape.n_s, |a, b, x, s, out| {
        for alt in 0..n_a {
            out[s * n_a + alt] = r.get(a, b, x, s) - r.get(alt, b, x, s);
        }
    })?;
    ObjectivePair::new("group_no_regret", payoff, TargetSet::orthant(n_a * shape.n_s)?, false)
}

/// Demographic parity: `(a_k 1{s=0} / gamma_0, a_k 1{s=1} / gamma_1)` in the slab `|u - v| <= delta`.
pub fn demographic_parity(grid: CalibrationGrid, gammas: &[f64], delta: f64, n_x: usize) -> Result<ObjectivePair> {
    two_groups(gammas)?;
    let shape = Shape::new(grid.n(), 2, n_x, 2)?;
    let payoff = PayoffTensor::from_fn(shape, 2, |k, _, _, s, out| out[s] = grid.level(k) / gammas[s])?;
    ObjectivePair::new("demographic_parity", payoff, TargetSet::slab(vec![1.0, -1.0], delta)?, true)
}

/// Equalized average payoffs: `r 1{s=s'} / gamma_s'` in the slab `|u - v| <= epsilon`.
pub fn equalized_payoffs(r: &RewardTensor, gammas: &[f64], epsilon: f64) -> Result<ObjectivePair> {
    two_groups(gammas)?;
    check_dim(r.shape().n_s, 2)?;
    let payoff = PayoffTensor::from_fn(r.shape(), 2, |a, b, x, s, out| out[s] = r.get(a, b, x, s) / gammas[s])?;
    ObjectivePair::new("equalized_payoffs", payoff, TargetSet::slab(vec![1.0, -1.0], epsilon)?, true)
}

/// Group-weight-free payoff `(m~gr-cal, m~dp)` of dimension `2N + 2`.
pub fn tilde_payoff(grid: CalibrationGrid, n_x: usize) -> Result<PayoffTensor> {
    let n = grid.n();
    let shape = Shape::new(n, 2, n_x, 2)?;
    PayoffTensor::from_fn(shape, 2 * n + 2, |k, b, _, s, out| {
        out[s * n + k] = grid.level(k) - b as f64;
        out[2 * n + s] = grid.level(k);
    })
}

/// Target of the tilde payoff, carrying the group weights.
pub fn tilde_target(grid: CalibrationGrid, gammas: &[f64], epsilon: f64, delta: f64) -> Result<TargetSet> {
    two_groups(gammas)?;
    let n = grid.n();
    let mut weights = vec![1.0 / gammas[0]; n];
    weights.extend(vec![1.0 / gammas[1]; n]);
    let gcal = TargetSet::intersection(vec![
        TargetSet::l1_ball(2 * n, 1.0)?,
        TargetSet::weighted_l1_ball(weights, epsilon)?,
    ])?;
    let dp = TargetSet::slab(vec![1.0 / gammas[0], -1.0 / gammas[1]], delta)?;
    TargetSet::product(vec![gcal, dp])
}

pub fn tilde_tradeoff(grid: CalibrationGrid, gammas: &[f64], epsilon: f64, delta: f64, n_x: usize) -> Result<ObjectivePair> {
    ObjectivePair::new(
        "tilde_tradeoff",
        tilde_payoff(grid, n_x)?,
        tilde_target(grid, gammas, epsilon, delta)?,
        false,
    )
}

/// Concatenate payoffs and take the product of targets.
pub fn combine(pairs: &[ObjectivePair]) -> Result<ObjectivePair> {
    match pairs {
        [] => Err(Error::InvalidParameter("cannot combine an empty list of objectives".into())),
        [one] => Ok(one.clone()),
        _ => {
            let payoffs: Vec<&PayoffTensor> = pairs.iter().map(|p| &p.payoff).collect();
            ObjectivePair::new(
                pairs.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join("+"),
                PayoffTensor::concat(&payoffs)?,
                TargetSet::product(pairs.iter().map(|p| p.target.clone()).collect())?,
                pairs.iter().any(|p| p.gamma_dependent),
            )
        }
    }
}

/// What the Player is allowed to know about the context distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnowledgeMode {
    KnownQ,
    EstimatedQ,
    UnknownTarget,
}

/// Named reward tensors for configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RewardSpec {
    /// Row-major `[a][b][x][s]` values.
    Dense {
        #[serde(with = "crate::decimal::vec")]
        values: Vec<f64>,
    },
    /// `1{a = b}`.
    Match,
    /// `a^2` for group 0 and `(a - 1)^2` for group 1, actions read as integers.
    GroupSquared,
    /// The forecast level `a_k` of the calibration grid.
    ForecastLevel,
    Constant {
        #[serde(with = "crate::decimal")]
        value: f64,
    },
}

impl RewardSpec {
    pub fn build(&self, shape: Shape, grid: Option<CalibrationGrid>) -> Result<RewardTensor> {
        match self {
            RewardSpec::Dense { values } => RewardTensor::from_flat(shape, values.clone()),
            RewardSpec::Match => RewardTensor::from_fn(shape, |a, b, _, _| if a == b { 1.0 } else { 0.0 }),
            RewardSpec::GroupSquared => {
                if shape.n_s != 2 {
                    return Err(Error::UnsupportedCardinality("group_squared reward needs two groups".into()));
                }
                RewardTensor::from_fn(shape, |a, _, _, s| {
                    let a = a as f64;
                    if s == 0 {
                        a * a
                    } else {
                        (a - 1.0) * (a - 1.0)
                    }
                })
            }
            RewardSpec::ForecastLevel => {
                let grid = grid
                    .filter(|g| g.n() == shape.n_a)
                    .ok_or_else(|| Error::InvalidParameter("forecast_level reward needs a calibration grid matching |A|".into()))?;
                RewardTensor::from_fn(shape, |a, _, _, _| grid.level(a))
            }
            RewardSpec::Constant { value } => RewardTensor::from_fn(shape, |_, _, _, _| *value),
        }
    }
}

/// Catalog entry addressed by name in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    Calibration {
        n: usize,
    },
    GroupCalibration {
        n: usize,
        #[serde(default, with = "crate::decimal::option", skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    NoRegret {
        reward: RewardSpec,
    },
    GroupNoRegret {
        reward: RewardSpec,
    },
    DemographicParity {
        n: usize,
        #[serde(default, with = "crate::decimal::option", skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
    EqualizedPayoffs {
        reward: RewardSpec,
        #[serde(with = "crate::decimal")]
        epsilon: f64,
    },
    TildeTradeoff {
        n: usize,
        #[serde(with = "crate::decimal")]
        epsilon: f64,
        #[serde(with = "crate::decimal")]
        delta: f64,
    },
}

impl ObjectiveSpec {
    pub fn label(&self) -> &'static str {
        match self {
            ObjectiveSpec::Calibration { .. } => "calibration",
            ObjectiveSpec::GroupCalibration { .. } => "group_calibration",
            ObjectiveSpec::NoRegret { .. } => "no_regret",
            ObjectiveSpec::GroupNoRegret { .. } => "group_no_regret",
            ObjectiveSpec::DemographicParity { .. } => "demographic_parity",
            ObjectiveSpec::EqualizedPayoffs { .. } => "equalized_payoffs",
            ObjectiveSpec::TildeTradeoff { .. } => "tilde_tradeoff",
        }
    }

    /// Whether the payoff embeds the group weights.
    pub fn gamma_dependent(&self) -> bool {
        matches!(
            self,
            ObjectiveSpec::GroupCalibration { .. } | ObjectiveSpec::DemographicParity { .. } | ObjectiveSpec::EqualizedPayoffs { .. }
        )
    }

    /// Calibration grid implied by the entry, if any.
    pub fn grid(&self) -> Result<Option<CalibrationGrid>> {
        match self {
            ObjectiveSpec::Calibration { n }
            | ObjectiveSpec::GroupCalibration { n, .. }
            | ObjectiveSpec::DemographicParity { n, .. }
            | ObjectiveSpec::TildeTradeoff { n, .. } => Ok(Some(CalibrationGrid::new(*n)?)),
            _ => Ok(None),
        }
    }

    /// Build the pair. Group weights come from the true `q`, so entries that
    /// embed them are refused unless the Player knows `q`.
    pub fn build(&self, shape: Shape, q: &JointDistribution, mode: KnowledgeMode) -> Result<ObjectivePair> {
        if self.gamma_dependent() && mode != KnowledgeMode::KnownQ {
            return Err(Error::InvalidParameter(format!(
                "`{}` embeds the group weights and is only allowed in known_q mode; use tilde_tradeoff instead",
                self.label()
            )));
        }
        check_dim(shape.n_x, q.n_x())?;
        check_dim(shape.n_s, q.n_s())?;
        let gammas = q.marginal_gamma();
        let grid = self.grid()?;
        if let Some(g) = grid {
            if shape.n_a != g.n() || shape.n_b != 2 {
                return Err(Error::InvalidParameter(format!(
                    "`{}` needs |A| = N = {} and |B| = 2, instance has |A| = {}, |B| = {}",
                    self.label(),
                    g.n(),
                    shape.n_a,
                    shape.n_b
                )));
            }
        }
        let (n_x, n_s) = (shape.n_x, shape.n_s);
        match self {
            ObjectiveSpec::Calibration { .. } => calibration(grid.unwrap(), n_x, n_s),
            ObjectiveSpec::GroupCalibration { epsilon, .. } => {
                let g = grid.unwrap();
                group_calibration_with_radius(g, &gammas, n_x, epsilon.unwrap_or(1.0 / g.n() as f64))
            }
            ObjectiveSpec::NoRegret { reward } => no_regret(&reward.build(shape, None)?),
            ObjectiveSpec::GroupNoRegret { reward } => group_no_regret(&reward.build(shape, None)?),
            ObjectiveSpec::DemographicParity { delta, .. } => {
                let g = grid.unwrap();
                demographic_parity(g, &gammas, delta.unwrap_or(1.0 / g.n() as f64), n_x)
            }
            ObjectiveSpec::EqualizedPayoffs { reward, epsilon } => {
                equalized_payoffs(&reward.build(shape, None)?, &gammas, *epsilon)
            }
            ObjectiveSpec::TildeTradeoff { epsilon, delta, .. } => tilde_tradeoff(grid.unwrap(), &gammas, *epsilon, *delta, n_x),
        }
    }
}

/// Build and combine a list of catalog entries.
pub fn build_all(specs: &[ObjectiveSpec], shape: Shape, q: &JointDistribution, mode: KnowledgeMode) -> Result<ObjectivePair> {
    let pairs = specs.iter().map(|s| s.build(shape, q, mode)).collect::<Result<Vec<_>>>()?;
    combine(&pairs)
}
