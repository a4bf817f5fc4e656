//! Experiment files: schema, validation and the prepared experiment.
//!
//! Reals are written as decimal strings (`"0.25"`). Validation resolves
//! every cross-reference up front so a run never fails on configuration.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use fairapp_core::engine::{log_grid, run, RunConfig, Trajectory};
use fairapp_core::metrics::MetricContext;
use fairapp_core::objectives::{build_all, KnowledgeMode, ObjectivePair, ObjectiveSpec, RewardSpec};
use fairapp_core::payoff::{CalibrationGrid, Shape};
use fairapp_core::prob::{JointConfig, JointDistribution};
use fairapp_core::strategy::{Monitoring, NatureSpec, PlayerSpec};

use crate::Invalid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Actions {
    pub n_a: usize,
    pub n_b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParetoBlock {
    #[serde(with = "fairapp_core::decimal::vec")]
    pub taus: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckBlock {
    /// Two simplex-grid resolutions for the Nature families.
    pub resolutions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub instance: String,
    pub contexts: JointConfig,
    pub actions: Actions,
    pub objectives: Vec<ObjectiveSpec>,
    /// Reward used by the regret and equalized-payoff metrics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<RewardSpec>,
    pub player: PlayerSpec,
    pub nature: NatureSpec,
    pub monitoring: Monitoring,
    pub mode: KnowledgeMode,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pareto: Option<ParetoBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Invalid(format!("malformed experiment spec: {e}")).into())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

/// A validated spec with every core object built.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub spec: ExperimentSpec,
    pub q: JointDistribution,
    pub shape: Shape,
    pub pair: ObjectivePair,
    pub grid: Option<CalibrationGrid>,
    pub metrics: MetricContext,
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

impl Experiment {
    pub fn new(spec: ExperimentSpec) -> Result<Self> {
        if spec.instance.is_empty() || spec.instance.contains(['/', '\\']) {
            return Err(invalid(format!("instance name `{}` must be non-empty and contain no path separators", spec.instance)));
        }
        if spec.horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        if spec.seeds.is_empty() {
            return Err(invalid("seeds must list at least one seed"));
        }
        if spec.objectives.is_empty() {
            return Err(invalid("objectives must list at least one entry"));
        }
        let q = JointDistribution::try_from(&spec.contexts).context("contexts")?;
        let shape = Shape::new(spec.actions.n_a, spec.actions.n_b, q.n_x(), q.n_s()).context("actions")?;
        let pair = build_all(&spec.objectives, shape, &q, spec.mode).context("objectives")?;

        let mut grid: Option<CalibrationGrid> = None;
        for o in &spec.objectives {
            if let Some(g) = o.grid()? {
                match grid {
                    Some(prev) if prev.n() != g.n() => {
                        return Err(invalid(format!("objectives use different grids (N = {} and N = {})", prev.n(), g.n())))
                    }
                    _ => grid = Some(g),
                }
            }
        }
        if spec.nature.monitoring() != spec.monitoring {
            return Err(invalid(format!(
                "nature `{}` observes {:?} but the experiment declares monitoring {:?}",
                spec.nature.name(),
                spec.nature.monitoring(),
                spec.monitoring
            )));
        }
        check_tilde_levels(&spec, &q)?;

        let reward = spec.reward.as_ref().map(|r| r.build(shape, grid)).transpose().context("reward")?;
        let metrics = MetricContext { grid, reward, gammas: q.marginal_gamma() };
        metrics.check(shape).context("metrics")?;

        let exp = Self { spec, q, shape, pair, grid, metrics };
        // Building once surfaces strategy errors before any run starts.
        exp.spec.player.build(&exp.pair, &exp.q, exp.spec.mode, exp.spec.monitoring, exp.grid, &exp.spec.nature).context("player")?;
        exp.spec.nature.build(&exp.q, &exp.pair).context("nature")?;
        Ok(exp)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(ExperimentSpec::load(path)?)
    }

    pub fn run_config(&self, seed: u64) -> RunConfig {
        RunConfig {
            q: self.q.clone(),
            pair: self.pair.clone(),
            metrics: self.metrics.clone(),
            monitoring: self.spec.monitoring,
            horizon: self.spec.horizon,
            seed,
            sample_at: log_grid(self.spec.horizon),
            store_rounds: false,
        }
    }

    /// One trajectory with fresh strategies.
    pub fn run_seed(&self, seed: u64) -> fairapp_core::Result<Trajectory> {
        let config = self.run_config(seed);
        let s = &self.spec;
        let mut player = s.player.build(&self.pair, &self.q, s.mode, s.monitoring, self.grid, &s.nature)?;
        let mut nature = s.nature.build(&self.q, &self.pair)?;
        run(&config, &mut player, &mut nature)
    }
}

/// A doubling Player estimates the tilde levels from `tau` and its slack;
/// the evaluated target must use the same map at the true distribution.
fn check_tilde_levels(spec: &ExperimentSpec, q: &JointDistribution) -> Result<()> {
    let PlayerSpec::DoublingUnknownTarget { tau, slack, frozen: false } = &spec.player else {
        return Ok(());
    };
    let [ObjectiveSpec::TildeTradeoff { epsilon, delta, .. }] = spec.objectives.as_slice() else {
        return Err(invalid("doubling_unknown_target needs exactly one objective, tilde_tradeoff"));
    };
    let (e, d) = slack.levels(q.group_tv()?, *tau);
    if (e - epsilon).abs() > 1e-9 || (d - delta).abs() > 1e-9 {
        return Err(invalid(format!(
            "tilde_tradeoff levels (epsilon {epsilon}, delta {delta}) do not match the player's tau and slack, \
             which give (epsilon {e}, delta {d}) at the true distribution"
        )));
    }
    Ok(())
}
