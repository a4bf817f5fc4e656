//! Round-by-round simulation of the online protocol.
//!
//! Each round draws `(x, s)` from `Q`, lets the Player pick from `x` and
//! Nature pick from its observation simultaneously, then reveals everything.
//! Contexts, Player draws and Nature draws use separate seeded streams.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{MetricAccumulator, MetricContext, MetricPoint, Round};
use crate::objectives::ObjectivePair;
use crate::prob::JointDistribution;
use crate::rng::{stream, Stream};
use crate::stats::RunningMean;
use crate::strategy::{Monitoring, Nature, Player};

/// Everything a run needs besides the two strategies.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub q: JointDistribution,
    /// Pair whose distance `d_t` is tracked.
    pub pair: ObjectivePair,
    pub metrics: MetricContext,
    pub monitoring: Monitoring,
    pub horizon: u64,
    pub seed: u64,
    /// Rounds at which metrics are sampled, increasing.
    pub sample_at: Vec<u64>,
    /// Keep every round in the trajectory.
    pub store_rounds: bool,
}

/// Powers of two up to `horizon`, plus `horizon` itself.
pub fn log_grid(horizon: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (0..64).map(|i| 1u64 << i).take_while(|&t| t <= horizon).collect();
    if out.last() != Some(&horizon) && horizon > 0 {
        out.push(horizon);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub horizon: u64,
    /// Empty unless the config asked to keep rounds.
    pub rounds: Vec<Round>,
    pub average_payoff: Vec<f64>,
    pub group_counts: Vec<u64>,
    pub samples: Vec<MetricPoint>,
    /// Target rebuilds by a doubling Player, for reporting.
    pub refreshes: u64,
}

impl Trajectory {
    pub fn last(&self) -> Option<&MetricPoint> {
        self.samples.last()
    }

    /// CSV with the fixed metric columns; undefined values are blank.
    pub fn to_csv(&self) -> String {
        let mut out = MetricPoint::COLUMNS.join(",");
        out.push('\n');
        for p in &self.samples {
            let row: Vec<String> = MetricPoint::COLUMNS
                .iter()
                .map(|c| match (*c, p.get(c)) {
                    ("t", _) => p.t.to_string(),
                    (_, Some(v)) => format!("{v:?}"),
                    (_, None) => String::new(),
                })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

impl RunConfig {
    fn validate(&self, nature_monitoring: Monitoring) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        if nature_monitoring != self.monitoring {
            return Err(Error::InvalidParameter(format!(
                "Nature strategy observes {:?} but the run is configured {:?}",
                nature_monitoring, self.monitoring
            )));
        }
        let sh = self.pair.shape();
        crate::error::check_dim(sh.n_x, self.q.n_x())?;
        crate::error::check_dim(sh.n_s, self.q.n_s())?;
        self.metrics.check(sh)?;
        if self.sample_at.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("sample rounds must be strictly increasing".into()));
        }
        Ok(())
    }
}

fn fail(round: u64, mean: &RunningMean, e: Error) -> Error {
    Error::RoundFailed {
        round,
        message: e.to_string(),
        state: format!("average payoff {:?}", mean.mean()),
    }
}

/// Runs the protocol for `config.horizon` rounds.
pub fn run<P: Player + ?Sized, N: Nature + ?Sized>(config: &RunConfig, player: &mut P, nature: &mut N) -> Result<Trajectory> {
    config.validate(nature.monitoring())?;
    let mut ctx_rng = stream(config.seed, Stream::Context);
    let mut player_rng = stream(config.seed, Stream::Player);
    let mut nature_rng = stream(config.seed, Stream::Nature);
    let mut acc = MetricAccumulator::new(config.metrics.clone(), config.pair.shape())?;
    let mut mean = RunningMean::new(config.pair.payoff.dim());
    let mut rounds = Vec::with_capacity(if config.store_rounds { config.horizon as usize } else { 0 });
    let mut samples = Vec::with_capacity(config.sample_at.len());
    let mut next = config.sample_at.iter().copied().peekable();
    for t in 1..=config.horizon {
        let (x, s) = config.q.sample(&mut ctx_rng);
        let obs = config.monitoring.observe(x, s);
        let p = player.family(x).map_err(|e| fail(t, &mean, e))?;
        let qb = nature.family(obs).map_err(|e| fail(t, &mean, e))?;
        let a = p.sample(&mut player_rng);
        let b = qb.sample(&mut nature_rng);
        player.observe(x, s, a, b).map_err(|e| fail(t, &mean, e))?;
        nature.observe(x, s, a, b).map_err(|e| fail(t, &mean, e))?;
        let r = Round { x, s, a, b };
        mean.push(config.pair.payoff.entry(a, b, x, s));
        acc.push(r);
        if config.store_rounds {
            rounds.push(r);
        }
        while next.peek() == Some(&t) {
            let d = config.pair.target.distance(&mean.mean()).map_err(|e| fail(t, &mean, e))?;
            samples.push(acc.point(Some(d)));
            next.next();
        }
    }
    Ok(Trajectory {
        seed: config.seed,
        horizon: config.horizon,
        rounds,
        average_payoff: mean.mean(),
        group_counts: acc.group_counts().to_vec(),
        samples,
        refreshes: player.refreshes(),
    })
}

/// Largest distance from a single payoff value to the pair's target.
pub fn payoff_range_constant(pair: &ObjectivePair) -> Result<f64> {
    let sh = pair.shape();
    let mut k: f64 = 0.0;
    for a in 0..sh.n_a {
        for b in 0..sh.n_b {
            for x in 0..sh.n_x {
                for s in 0..sh.n_s {
                    k = k.max(pair.target.distance(pair.payoff.entry(a, b, x, s))?);
                }
            }
        }
    }
    Ok(k)
}
