//! Nature strategies: stationary families indexed by the observation, an
//! adversarial best response, and the catalog of hard instances.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::game::argmax;
use crate::objectives::ObjectivePair;
use crate::prob::{DensityPartition, JointDistribution, MixedAction};
use crate::stats::RunningMean;

use super::{step_at, Monitoring, Observation};

/// Nature acts on an [`Observation`] only; it may learn the full outcome
/// after the round.
pub trait Nature: Send {
    fn monitoring(&self) -> Monitoring;
    fn family(&mut self, obs: Observation) -> Result<MixedAction>;
    fn observe(&mut self, _x: usize, _s: usize, _a: usize, _b: usize) -> Result<()> {
        Ok(())
    }
}

/// One distribution over outcomes per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct NatureFamily {
    monitoring: Monitoring,
    n_s: usize,
    families: Vec<MixedAction>,
}

impl NatureFamily {
    /// `families` is indexed by [`Observation::index`].
    pub fn new(monitoring: Monitoring, n_x: usize, n_s: usize, families: Vec<MixedAction>) -> Result<Self> {
        check_dim(monitoring.n_observations(n_x, n_s), families.len())?;
        let n_b = families[0].len();
        if families.iter().any(|q| q.len() != n_b) {
            return Err(Error::InvalidParameter("families over different outcome sets".into()));
        }
        Ok(Self { monitoring, n_s, families })
    }

    /// Binary outcomes with `P(b = 1) = label_prob(x, s)`; for unaware
    /// monitoring `s` is always passed as 0.
    pub fn binary(monitoring: Monitoring, n_x: usize, n_s: usize, label_prob: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut fams = Vec::new();
        for x in 0..n_x {
            match monitoring {
                Monitoring::Unaware => fams.push(bernoulli(label_prob(x, 0))?),
                Monitoring::Aware => {
                    for s in 0..n_s {
                        fams.push(bernoulli(label_prob(x, s))?);
                    }
                }
            }
        }
        Self::new(monitoring, n_x, n_s, fams)
    }

    pub fn n_b(&self) -> usize {
        self.families[0].len()
    }

    pub fn at(&self, obs: Observation) -> &MixedAction {
        &self.families[obs.index(self.n_s)]
    }

    /// `P(b = 1)` as a `[x][s]` table, for binary outcomes.
    pub fn label_table(&self, n_x: usize) -> Result<Vec<Vec<f64>>> {
        check_dim(2, self.n_b())?;
        Ok((0..n_x)
            .map(|x| (0..self.n_s).map(|s| self.at(self.monitoring.observe(x, s)).get(1)).collect())
            .collect())
    }
}

fn bernoulli(p1: f64) -> Result<MixedAction> {
    if !(0.0..=1.0).contains(&p1) {
        return Err(Error::InvalidDistribution(format!("label probability {p1} outside [0, 1]")));
    }
    MixedAction::new(vec![1.0 - p1, p1])
}

impl Nature for NatureFamily {
    fn monitoring(&self) -> Monitoring {
        self.monitoring
    }

    fn family(&mut self, obs: Observation) -> Result<MixedAction> {
        Ok(self.at(obs).clone())
    }
}

/// Recomputes the Player's step from the true context law and answers with
/// the worst pure outcome for it (smallest index on ties).
#[derive(Debug, Clone)]
pub struct BestResponse {
    pair: ObjectivePair,
    q: JointDistribution,
    monitoring: Monitoring,
    mean: RunningMean,
}

impl BestResponse {
    pub fn new(pair: ObjectivePair, q: JointDistribution, monitoring: Monitoring) -> Result<Self> {
        let sh = pair.shape();
        check_dim(sh.n_x, q.n_x())?;
        check_dim(sh.n_s, q.n_s())?;
        Ok(Self { mean: RunningMean::new(pair.payoff.dim()), pair, q, monitoring })
    }
}

/// Dirac at the outcome maximizing `<m_bar - c_bar, m(p, b, .)>` for the
/// Player's step `p`, weighting groups by `Q(x, .)` when `s` is unobserved.
pub fn nature_best_response(
    pair: &ObjectivePair,
    q: &JointDistribution,
    monitoring: Monitoring,
    m_bar: &[f64],
    c_bar: &[f64],
    obs: Observation,
) -> Result<MixedAction> {
    check_dim(m_bar.len(), c_bar.len())?;
    let d: Vec<f64> = m_bar.iter().zip(c_bar).map(|(m, c)| m - c).collect();
    let x = obs.x();
    let (p, _) = step_at(&pair.payoff, q.row(x), &d, monitoring, x)?;
    let sh = pair.shape();
    let weights: Vec<(usize, f64)> = match obs.s() {
        Some(s) => vec![(s, 1.0)],
        None => q.row(x).iter().copied().enumerate().collect(),
    };
    let scores: Vec<f64> = (0..sh.n_b)
        .map(|b| {
            weights
                .iter()
                .map(|&(s, w)| w * (0..sh.n_a).map(|a| p.get(a) * pair.payoff.dot(a, b, x, s, &d)).sum::<f64>())
                .sum()
        })
        .collect();
    Ok(MixedAction::dirac(sh.n_b, argmax(&scores)))
}

impl Nature for BestResponse {
    fn monitoring(&self) -> Monitoring {
        self.monitoring
    }

    fn family(&mut self, obs: Observation) -> Result<MixedAction> {
        if self.mean.count() == 0 {
            return Ok(MixedAction::dirac(self.pair.shape().n_b, 0));
        }
        let m = self.mean.mean();
        let c = self.pair.target.project(&m)?;
        nature_best_response(&self.pair, &self.q, self.monitoring, &m, &c, obs)
    }

    fn observe(&mut self, x: usize, s: usize, a: usize, b: usize) -> Result<()> {
        self.mean.push(self.pair.payoff.entry(a, b, x, s));
        Ok(())
    }
}

/// Nature entries selectable from an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NatureSpec {
    /// Explicit families, one row per observation.
    Stationary {
        monitoring: Monitoring,
        #[serde(with = "crate::decimal::matrix")]
        families: Vec<Vec<f64>>,
    },
    BestResponse { monitoring: Monitoring },
    /// Unaware binary outcomes with a fixed label probability; the
    /// group-wise no-regret condition fails for every such family.
    CounterExample1 {
        #[serde(with = "crate::decimal", default = "half")]
        label_prob: f64,
    },
    /// Aware, outcome equal to the sensitive attribute.
    CounterExample2,
    /// Aware, outcome 1 for group 0 and 0 for group 1.
    ParetoLowerAware,
    /// Unaware, outcome 0 where group 0 dominates and 1 elsewhere.
    ParetoLowerUnaware,
    /// Unaware, `P(b = 0)` is 1 where group 0 dominates and `1/2 + epsilon`
    /// elsewhere.
    EqualizedPayoffImpossibility {
        #[serde(with = "crate::decimal")]
        epsilon: f64,
    },
}

fn half() -> f64 {
    0.5
}

impl NatureSpec {
    pub fn name(&self) -> &'static str {
        match self {
            NatureSpec::Stationary { .. } => "stationary",
            NatureSpec::BestResponse { .. } => "best_response",
            NatureSpec::CounterExample1 { .. } => "counter_example1",
            NatureSpec::CounterExample2 => "counter_example2",
            NatureSpec::ParetoLowerAware => "pareto_lower_aware",
            NatureSpec::ParetoLowerUnaware => "pareto_lower_unaware",
            NatureSpec::EqualizedPayoffImpossibility { .. } => "equalized_payoff_impossibility",
        }
    }

    pub fn monitoring(&self) -> Monitoring {
        match self {
            NatureSpec::Stationary { monitoring, .. } | NatureSpec::BestResponse { monitoring } => *monitoring,
            NatureSpec::CounterExample2 | NatureSpec::ParetoLowerAware => Monitoring::Aware,
            NatureSpec::CounterExample1 { .. } | NatureSpec::ParetoLowerUnaware | NatureSpec::EqualizedPayoffImpossibility { .. } => {
                Monitoring::Unaware
            }
        }
    }

    /// The stationary family of this entry, if it has one.
    pub fn family(&self, q: &JointDistribution) -> Result<Option<NatureFamily>> {
        let (n_x, n_s) = (q.n_x(), q.n_s());
        let m = self.monitoring();
        let fam = match self {
            NatureSpec::BestResponse { .. } => return Ok(None),
            NatureSpec::Stationary { families, .. } => {
                NatureFamily::new(m, n_x, n_s, families.iter().map(|r| MixedAction::new(r.clone())).collect::<Result<_>>()?)?
            }
            NatureSpec::CounterExample1 { label_prob } => NatureFamily::binary(m, n_x, n_s, |_, _| *label_prob)?,
            NatureSpec::CounterExample2 => {
                check_dim(2, n_s)?;
                NatureFamily::binary(m, n_x, n_s, |_, s| s as f64)?
            }
            NatureSpec::ParetoLowerAware => {
                check_dim(2, n_s)?;
                NatureFamily::binary(m, n_x, n_s, |_, s| if s == 0 { 1.0 } else { 0.0 })?
            }
            NatureSpec::ParetoLowerUnaware => {
                let part = DensityPartition::of(q)?;
                NatureFamily::binary(m, n_x, n_s, |x, _| if part.in_x0(x) { 0.0 } else { 1.0 })?
            }
            NatureSpec::EqualizedPayoffImpossibility { epsilon } => {
                if !(0.0..0.5).contains(epsilon) {
                    return Err(Error::InvalidParameter(format!("epsilon = {epsilon} outside [0, 1/2)")));
                }
                let part = DensityPartition::of(q)?;
                NatureFamily::binary(m, n_x, n_s, |x, _| if part.in_x0(x) { 0.0 } else { 0.5 - epsilon })?
            }
        };
        Ok(Some(fam))
    }

    pub fn build(&self, q: &JointDistribution, pair: &ObjectivePair) -> Result<NatureStrategy> {
        if let NatureSpec::BestResponse { monitoring } = self {
            return Ok(NatureStrategy::BestResponse(Box::new(BestResponse::new(pair.clone(), q.clone(), *monitoring)?)));
        }
        let fam = self.family(q)?.expect("stationary entry");
        check_dim(pair.shape().n_b, fam.n_b())?;
        Ok(NatureStrategy::Stationary(fam))
    }
}

/// Every Nature strategy the engine can run.
#[derive(Debug, Clone)]
pub enum NatureStrategy {
    Stationary(NatureFamily),
    BestResponse(Box<BestResponse>),
}

impl Nature for NatureStrategy {
    fn monitoring(&self) -> Monitoring {
        match self {
            NatureStrategy::Stationary(f) => f.monitoring(),
            NatureStrategy::BestResponse(b) => b.monitoring(),
        }
    }

    fn family(&mut self, obs: Observation) -> Result<MixedAction> {
        match self {
            NatureStrategy::Stationary(f) => f.family(obs),
            NatureStrategy::BestResponse(b) => b.family(obs),
        }
    }

    fn observe(&mut self, x: usize, s: usize, a: usize, b: usize) -> Result<()> {
        match self {
            NatureStrategy::Stationary(_) => Ok(()),
            NatureStrategy::BestResponse(n) => n.observe(x, s, a, b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{calibration, no_regret};
    use crate::payoff::{CalibrationGrid, RewardTensor, Shape};
    use crate::prob::ContextSpace;

    fn three_point() -> JointDistribution {
        JointDistribution::from_conditionals(
            ContextSpace::indexed(3, 2).unwrap(),
            &[0.5, 0.5],
            &[vec![0.6, 0.4, 0.0], vec![0.0, 0.4, 0.6]],
        )
        .unwrap()
    }

    fn all_specs() -> Vec<NatureSpec> {
        vec![
            NatureSpec::CounterExample1 { label_prob: 0.5 },
            NatureSpec::CounterExample2,
            NatureSpec::ParetoLowerAware,
            NatureSpec::ParetoLowerUnaware,
            NatureSpec::EqualizedPayoffImpossibility { epsilon: 0.1 },
        ]
    }

    #[test]
    fn catalog_families_match_their_constructions() {
        let q = three_point();
        let aware = NatureSpec::ParetoLowerAware.family(&q).unwrap().unwrap();
        for x in 0..3 {
            assert_eq!(aware.at(Monitoring::Aware.observe(x, 0)).get(1), 1.0);
            assert_eq!(aware.at(Monitoring::Aware.observe(x, 1)).get(0), 1.0);
        }
        let ce2 = NatureSpec::CounterExample2.family(&q).unwrap().unwrap();
        for x in 0..3 {
            for s in 0..2 {
                assert_eq!(ce2.at(Monitoring::Aware.observe(x, s)).as_dirac(), Some(s));
            }
        }
        let eq = NatureSpec::EqualizedPayoffImpossibility { epsilon: 0.1 }.family(&q).unwrap().unwrap();
        let p0: Vec<f64> = (0..3).map(|x| eq.at(Monitoring::Unaware.observe(x, 0)).get(0)).collect();
        assert_eq!(p0[0], 1.0);
        assert!((p0[1] - 0.6).abs() < 1e-15 && (p0[2] - 0.6).abs() < 1e-15);
        let lower = NatureSpec::ParetoLowerUnaware.family(&q).unwrap().unwrap();
        assert_eq!(lower.label_table(3).unwrap(), vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn unaware_entries_ignore_the_sensitive_attribute() {
        let q = three_point();
        for spec in all_specs().into_iter().filter(|s| s.monitoring() == Monitoring::Unaware) {
            let mut fam = spec.family(&q).unwrap().unwrap();
            for x in 0..3 {
                let a = fam.family(Monitoring::Unaware.observe(x, 0)).unwrap();
                let b = fam.family(Monitoring::Unaware.observe(x, 1)).unwrap();
                assert_eq!(a, b, "{}", spec.name());
            }
        }
    }

    #[test]
    fn spec_serde_round_trip() {
        for spec in all_specs() {
            let text = serde_json::to_string(&spec).unwrap();
            assert_eq!(serde_json::from_str::<NatureSpec>(&text).unwrap(), spec);
        }
        let parsed: NatureSpec = serde_json::from_str(r#"{"kind":"counter_example1"}"#).unwrap();
        assert_eq!(parsed, NatureSpec::CounterExample1 { label_prob: 0.5 });
        assert!(serde_json::from_str::<NatureSpec>(r#"{"kind":"nope"}"#).is_err());
    }

    #[test]
    fn best_response_zero_steering_and_single_action() {
        let q = three_point();
        let pair = calibration(CalibrationGrid::new(4).unwrap(), 3, 2).unwrap();
        let m = vec![0.0; 4];
        let r = nature_best_response(&pair, &q, Monitoring::Unaware, &m, &m, Monitoring::Unaware.observe(1, 0)).unwrap();
        assert_eq!(r, MixedAction::dirac(2, 0));
        let shape = Shape::new(2, 1, 3, 2).unwrap();
        let rew = RewardTensor::from_fn(shape, |a, _, _, _| a as f64).unwrap();
        let pair = no_regret(&rew).unwrap();
        let r = nature_best_response(&pair, &q, Monitoring::Aware, &[1.0, 0.0], &[0.0, 0.0], Monitoring::Aware.observe(0, 1)).unwrap();
        assert_eq!(r, MixedAction::dirac(1, 0));
    }

    #[test]
    fn best_response_matches_grid_search_on_two_by_two() {
        // Matching-pennies style regret game: the Player's step is fixed,
        // Nature's mixed reply is searched on a grid.
        let q = JointDistribution::from_conditionals(ContextSpace::indexed(1, 1).unwrap(), &[1.0], &[vec![1.0]]).unwrap();
        let shape = Shape::new(2, 2, 1, 1).unwrap();
        let rew = RewardTensor::from_fn(shape, |a, b, _, _| if a == b { 1.0 } else { 0.3 * a as f64 }).unwrap();
        let pair = no_regret(&rew).unwrap();
        let m_bar = vec![-0.4, 0.1];
        let c_bar = pair.target.project(&m_bar).unwrap();
        let obs = Monitoring::Unaware.observe(0, 0);
        let br = nature_best_response(&pair, &q, Monitoring::Unaware, &m_bar, &c_bar, obs).unwrap();
        let d: Vec<f64> = m_bar.iter().zip(&c_bar).map(|(m, c)| m - c).collect();
        let (p, _) = step_at(&pair.payoff, q.row(0), &d, Monitoring::Unaware, 0).unwrap();
        let score = |qb: &MixedAction| -> f64 {
            let m = pair.payoff.mixed(&p, qb, 0, 0);
            m.iter().zip(&d).map(|(a, b)| a * b).sum()
        };
        let best_grid = (0..=200)
            .map(|i| score(&MixedAction::new(vec![1.0 - i as f64 / 200.0, i as f64 / 200.0]).unwrap()))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((score(&br) - best_grid).abs() < 1e-9);
    }
}
