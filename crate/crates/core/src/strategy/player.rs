//! Player strategies: Blackwell approachability with known or estimated
//! context law and fixed or doubling targets, constant forecasts, and the
//! closed-form tradeoff oracles.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::estimation::{schedule, EmpiricalJoint, HatSets, TradeoffSlack};
use crate::geometry::TargetSet;
use crate::objectives::{KnowledgeMode, ObjectivePair};
use crate::payoff::{CalibrationGrid, PayoffTensor};
use crate::prob::{DensityPartition, JointDistribution, MixedAction};
use crate::stats::RunningMean;

use super::{step_at, Monitoring, NatureSpec};

/// A Player that picks a family at the observed `x` and learns the full
/// outcome once the round is over.
pub trait Player: Send {
    fn family(&mut self, x: usize) -> Result<MixedAction>;
    fn observe(&mut self, x: usize, s: usize, a: usize, b: usize) -> Result<()>;
    /// Target rebuilds so far, for strategies that have them.
    fn refreshes(&self) -> u64 {
        0
    }
}

/// Where the Player's context weights come from.
#[derive(Debug, Clone)]
pub enum QSource {
    Known(JointDistribution),
    /// Empirical frequencies of past rounds.
    Estimated(EmpiricalJoint),
}

impl QSource {
    fn row(&self, x: usize) -> Vec<f64> {
        match self {
            QSource::Known(q) => q.row(x).to_vec(),
            QSource::Estimated(e) => e.row(x),
        }
    }

    fn update(&mut self, x: usize, s: usize) -> Result<()> {
        match self {
            QSource::Known(_) => Ok(()),
            QSource::Estimated(e) => e.update(x, s),
        }
    }
}

/// How a doubling Player rebuilds its set at the end of round `2^r`.
#[derive(Debug, Clone)]
pub enum HatRule {
    /// Always the given set (reduces to a fixed target).
    Frozen(TargetSet),
    /// Plug-in hat sets for the tilde tradeoff payoff.
    Estimated {
        grid: CalibrationGrid,
        tau: f64,
        slack: TradeoffSlack,
    },
}

#[derive(Debug, Clone)]
enum TargetSource {
    Fixed(TargetSet),
    Doubling {
        rule: HatRule,
        emp: EmpiricalJoint,
        current: TargetSet,
        refreshes: u64,
    },
}

/// Steers the running payoff average toward its projection onto a target.
#[derive(Debug, Clone)]
pub struct ApproachabilityPlayer {
    payoff: PayoffTensor,
    monitoring: Monitoring,
    q: QSource,
    target: TargetSource,
    mean: RunningMean,
}

impl ApproachabilityPlayer {
    pub fn new(payoff: PayoffTensor, target: TargetSet, q: QSource, monitoring: Monitoring) -> Result<Self> {
        check_dim(payoff.dim(), target.dim())?;
        Self::check_q(&payoff, &q)?;
        Ok(Self {
            mean: RunningMean::new(payoff.dim()),
            payoff,
            monitoring,
            q,
            target: TargetSource::Fixed(target),
        })
    }

    /// Target rebuilt by `rule` at the end of every round `t = 2^r`. Before
    /// the first refresh the set is `initial`.
    pub fn doubling(payoff: PayoffTensor, rule: HatRule, initial: TargetSet, q: QSource, monitoring: Monitoring) -> Result<Self> {
        check_dim(payoff.dim(), initial.dim())?;
        Self::check_q(&payoff, &q)?;
        if let HatRule::Frozen(set) = &rule {
            check_dim(payoff.dim(), set.dim())?;
        }
        if let HatRule::Estimated { grid, tau, .. } = &rule {
            check_dim(2 * grid.n() + 2, payoff.dim())?;
            if !(0.0..=1.0).contains(tau) {
                return Err(Error::InvalidParameter(format!("tau = {tau} outside [0, 1]")));
            }
        }
        let sh = payoff.shape();
        let space = crate::prob::ContextSpace::indexed(sh.n_x, sh.n_s)?;
        Ok(Self {
            mean: RunningMean::new(payoff.dim()),
            payoff,
            monitoring,
            q,
            target: TargetSource::Doubling { rule, emp: EmpiricalJoint::new(space), current: initial, refreshes: 0 },
        })
    }

    /// The whole range of the tilde payoff: unit l1 ball times unit box.
    pub fn tilde_range(grid: CalibrationGrid) -> Result<TargetSet> {
        TargetSet::product(vec![
            TargetSet::l1_ball(2 * grid.n(), 1.0)?,
            TargetSet::boxed(vec![0.0; 2], vec![1.0; 2])?,
        ])
    }

    fn check_q(payoff: &PayoffTensor, q: &QSource) -> Result<()> {
        let sh = payoff.shape();
        let (n_x, n_s) = match q {
            QSource::Known(q) => (q.n_x(), q.n_s()),
            QSource::Estimated(e) => (e.space().n_x(), e.space().n_s()),
        };
        check_dim(sh.n_x, n_x)?;
        check_dim(sh.n_s, n_s)
    }

    pub fn current_target(&self) -> &TargetSet {
        match &self.target {
            TargetSource::Fixed(t) => t,
            TargetSource::Doubling { current, .. } => current,
        }
    }

    pub fn average_payoff(&self) -> Vec<f64> {
        self.mean.mean()
    }
}

impl Player for ApproachabilityPlayer {
    fn family(&mut self, x: usize) -> Result<MixedAction> {
        let n_a = self.payoff.shape().n_a;
        if self.mean.count() == 0 {
            return Ok(MixedAction::uniform(n_a));
        }
        let m = self.mean.mean();
        let c = self.current_target().project(&m)?;
        let d: Vec<f64> = m.iter().zip(&c).map(|(m, c)| m - c).collect();
        Ok(step_at(&self.payoff, &self.q.row(x), &d, self.monitoring, x)?.0)
    }

    fn observe(&mut self, x: usize, s: usize, a: usize, b: usize) -> Result<()> {
        self.mean.push(self.payoff.entry(a, b, x, s));
        self.q.update(x, s)?;
        if let TargetSource::Doubling { rule, emp, current, refreshes } = &mut self.target {
            emp.update(x, s)?;
            if schedule::is_refresh(emp.total()) {
                *current = match rule {
                    HatRule::Frozen(set) => set.clone(),
                    HatRule::Estimated { grid, tau, slack } => HatSets::from_empirical(emp, *tau, *slack)?.target(*grid)?,
                };
                *refreshes += 1;
            }
        }
        Ok(())
    }

    fn refreshes(&self) -> u64 {
        match &self.target {
            TargetSource::Fixed(_) => 0,
            TargetSource::Doubling { refreshes, .. } => *refreshes,
        }
    }
}

fn two_point_mixture(n: usize, k_base: usize, k_tilt: usize, tau: f64) -> Result<MixedAction> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidParameter(format!("tau = {tau} outside [0, 1]")));
    }
    let mut w = vec![0.0; n];
    w[k_base] += 1.0 - tau;
    w[k_tilt] += tau;
    MixedAction::new(w)
}

/// `(1 - tau) Dirac(round(1/2)) + tau Dirac(f(x))` where `f(x)` rounds the
/// label probability of the group whose density dominates at `x` (group 1
/// on ties). `label_prob[x][s]` is Nature's probability of outcome 1.
pub fn pareto_oracle_aware(tau: f64, grid: CalibrationGrid, label_prob: &[Vec<f64>], x: usize, partition: &DensityPartition) -> Result<MixedAction> {
    let row = label_prob.get(x).ok_or(Error::IndexOutOfRange { index: x, size: label_prob.len() })?;
    check_dim(2, row.len())?;
    let s = if partition.in_x0(x) { 0 } else { 1 };
    two_point_mixture(grid.n(), grid.round(0.5), grid.round(row[s]), tau)
}

/// `(1 - tau) Dirac(round(Qbar)) + tau Dirac(round(q^x(1)))` with
/// `Qbar = sum_x q^x(1) Q^0(x)`.
pub fn pareto_oracle_unaware(tau: f64, grid: CalibrationGrid, label_prob: &[f64], x: usize, q: &JointDistribution) -> Result<MixedAction> {
    check_dim(q.n_x(), label_prob.len())?;
    if x >= label_prob.len() {
        return Err(Error::IndexOutOfRange { index: x, size: label_prob.len() });
    }
    let q_bar = unaware_base_level(label_prob, q)?;
    two_point_mixture(grid.n(), grid.round(q_bar), grid.round(label_prob[x]), tau)
}

/// `sum_x q^x(1) Q^0(x)`.
pub fn unaware_base_level(label_prob: &[f64], q: &JointDistribution) -> Result<f64> {
    let g0 = q.conditional_given_s(0)?;
    Ok(g0.expect(label_prob))
}

/// Fixed per-context families, e.g. the tradeoff oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPlayer {
    families: Vec<MixedAction>,
}

impl TabulatedPlayer {
    pub fn new(families: Vec<MixedAction>) -> Result<Self> {
        let n = families.first().map(|p| p.len()).ok_or_else(|| Error::InvalidParameter("no families".into()))?;
        if families.iter().any(|p| p.len() != n) {
            return Err(Error::InvalidParameter("families over different action sets".into()));
        }
        Ok(Self { families })
    }

    pub fn pareto_aware(tau: f64, grid: CalibrationGrid, label_prob: &[Vec<f64>], q: &JointDistribution) -> Result<Self> {
        check_dim(q.n_x(), label_prob.len())?;
        let part = DensityPartition::of(q)?;
        Self::new((0..q.n_x()).map(|x| pareto_oracle_aware(tau, grid, label_prob, x, &part)).collect::<Result<_>>()?)
    }

    pub fn pareto_unaware(tau: f64, grid: CalibrationGrid, label_prob: &[f64], q: &JointDistribution) -> Result<Self> {
        Self::new((0..q.n_x()).map(|x| pareto_oracle_unaware(tau, grid, label_prob, x, q)).collect::<Result<_>>()?)
    }

    pub fn families(&self) -> &[MixedAction] {
        &self.families
    }
}

impl Player for TabulatedPlayer {
    fn family(&mut self, x: usize) -> Result<MixedAction> {
        self.families
            .get(x)
            .cloned()
            .ok_or(Error::IndexOutOfRange { index: x, size: self.families.len() })
    }

    fn observe(&mut self, _: usize, _: usize, _: usize, _: usize) -> Result<()> {
        Ok(())
    }
}

/// Every Player strategy the engine can run.
#[derive(Debug, Clone)]
pub enum PlayerStrategy {
    Approachability(Box<ApproachabilityPlayer>),
    ConstantForecast { n: usize, k: usize },
    Tabulated(TabulatedPlayer),
}

impl PlayerStrategy {
    pub fn constant(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::IndexOutOfRange { index: k, size: n });
        }
        Ok(PlayerStrategy::ConstantForecast { n, k })
    }
}

impl Player for PlayerStrategy {
    fn family(&mut self, x: usize) -> Result<MixedAction> {
        match self {
            PlayerStrategy::Approachability(p) => p.family(x),
            PlayerStrategy::ConstantForecast { n, k } => Ok(MixedAction::dirac(*n, *k)),
            PlayerStrategy::Tabulated(p) => p.family(x),
        }
    }

    fn observe(&mut self, x: usize, s: usize, a: usize, b: usize) -> Result<()> {
        match self {
            PlayerStrategy::Approachability(p) => p.observe(x, s, a, b),
            PlayerStrategy::ConstantForecast { .. } => Ok(()),
            PlayerStrategy::Tabulated(p) => p.observe(x, s, a, b),
        }
    }

    fn refreshes(&self) -> u64 {
        match self {
            PlayerStrategy::Approachability(p) => p.refreshes(),
            _ => 0,
        }
    }
}

/// Player entries selectable from an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlayerSpec {
    /// Blackwell strategy on the experiment's pair; context weights are
    /// `Q` in known_q mode and empirical frequencies in estimated_q mode.
    Blackwell,
    /// Doubling-phase strategy on the tilde payoff with plug-in hat sets.
    /// `frozen` keeps the true target instead (a reduction check).
    DoublingUnknownTarget {
        #[serde(with = "crate::decimal")]
        tau: f64,
        #[serde(default)]
        slack: TradeoffSlack,
        #[serde(default)]
        frozen: bool,
    },
    ConstantForecast {
        k: usize,
    },
    ParetoOracleAware {
        #[serde(with = "crate::decimal")]
        tau: f64,
    },
    ParetoOracleUnaware {
        #[serde(with = "crate::decimal")]
        tau: f64,
    },
}

impl PlayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PlayerSpec::Blackwell => "blackwell",
            PlayerSpec::DoublingUnknownTarget { .. } => "doubling_unknown_target",
            PlayerSpec::ConstantForecast { .. } => "constant_forecast",
            PlayerSpec::ParetoOracleAware { .. } => "pareto_oracle_aware",
            PlayerSpec::ParetoOracleUnaware { .. } => "pareto_oracle_unaware",
        }
    }

    /// The same entry with a different tradeoff parameter, when it has one.
    pub fn with_tau(&self, tau: f64) -> Self {
        match self.clone() {
            PlayerSpec::DoublingUnknownTarget { slack, frozen, .. } => PlayerSpec::DoublingUnknownTarget { tau, slack, frozen },
            PlayerSpec::ParetoOracleAware { .. } => PlayerSpec::ParetoOracleAware { tau },
            PlayerSpec::ParetoOracleUnaware { .. } => PlayerSpec::ParetoOracleUnaware { tau },
            other => other,
        }
    }

    /// Builds a fresh strategy. `grid` is the forecast grid of the
    /// instance; the oracles read Nature's family from `nature`.
    pub fn build(
        &self,
        pair: &ObjectivePair,
        q: &JointDistribution,
        mode: KnowledgeMode,
        monitoring: Monitoring,
        grid: Option<CalibrationGrid>,
        nature: &NatureSpec,
    ) -> Result<PlayerStrategy> {
        let sh = pair.shape();
        let q_source = || -> Result<QSource> {
            Ok(match mode {
                KnowledgeMode::KnownQ => QSource::Known(q.clone()),
                _ => QSource::Estimated(EmpiricalJoint::new(crate::prob::ContextSpace::indexed(sh.n_x, sh.n_s)?)),
            })
        };
        let need_grid = || grid.ok_or_else(|| Error::InvalidParameter(format!("`{}` needs a calibration grid", self.name())));
        match self {
            PlayerSpec::Blackwell => {
                if mode == KnowledgeMode::UnknownTarget {
                    return Err(Error::InvalidParameter(
                        "blackwell needs a known target; use doubling_unknown_target in unknown_target mode".into(),
                    ));
                }
                let p = ApproachabilityPlayer::new(pair.payoff.clone(), pair.target.clone(), q_source()?, monitoring)?;
                Ok(PlayerStrategy::Approachability(Box::new(p)))
            }
            PlayerSpec::DoublingUnknownTarget { tau, slack, frozen } => {
                let g = need_grid()?;
                let rule = if *frozen {
                    HatRule::Frozen(pair.target.clone())
                } else {
                    HatRule::Estimated { grid: g, tau: *tau, slack: *slack }
                };
                let initial = if *frozen { pair.target.clone() } else { ApproachabilityPlayer::tilde_range(g)? };
                let p = ApproachabilityPlayer::doubling(pair.payoff.clone(), rule, initial, q_source()?, monitoring)?;
                Ok(PlayerStrategy::Approachability(Box::new(p)))
            }
            PlayerSpec::ConstantForecast { k } => PlayerStrategy::constant(sh.n_a, *k),
            PlayerSpec::ParetoOracleAware { tau } => {
                let table = oracle_table(nature, q)?;
                Ok(PlayerStrategy::Tabulated(TabulatedPlayer::pareto_aware(*tau, need_grid()?, &table, q)?))
            }
            PlayerSpec::ParetoOracleUnaware { tau } => {
                if nature.monitoring() != Monitoring::Unaware {
                    return Err(Error::InvalidParameter("pareto_oracle_unaware needs an unaware Nature".into()));
                }
                let table = oracle_table(nature, q)?;
                let col: Vec<f64> = table.iter().map(|r| r[0]).collect();
                Ok(PlayerStrategy::Tabulated(TabulatedPlayer::pareto_unaware(*tau, need_grid()?, &col, q)?))
            }
        }
    }
}

fn oracle_table(nature: &NatureSpec, q: &JointDistribution) -> Result<Vec<Vec<f64>>> {
    nature
        .family(q)?
        .ok_or_else(|| Error::InvalidParameter("oracle players need a stationary Nature family".into()))?
        .label_table(q.n_x())
}
