//! Frontier sweeps between group calibration and demographic parity.
//!
//! For each tradeoff parameter `tau` an oracle Player runs against a
//! lower-bound Nature; the achieved group-calibration error and parity gap
//! are summarized across seeds next to the analytic band for that `tau`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run, RunConfig, Trajectory};
use crate::error::{Error, Result};
use crate::metrics::MetricContext;
use crate::objectives::{combine, demographic_parity, group_calibration, KnowledgeMode};
use crate::payoff::CalibrationGrid;
use crate::prob::JointDistribution;
use crate::stats::Summary;
use crate::strategy::{Monitoring, NatureSpec, PlayerSpec};

/// Analytic band `(lower, upper)` for the group-calibration error at `tau`.
///
/// Aware Nature: `1 - tau TV`; unaware Nature: `(1 - tau) TV`. The upper end
/// adds the `1/N` discretization slack.
pub fn analytic_band(monitoring: Monitoring, tau: f64, tv: f64, n: usize) -> (f64, f64) {
    let lower = match monitoring {
        Monitoring::Aware => 1.0 - tau * tv,
        Monitoring::Unaware => (1.0 - tau) * tv,
    };
    (lower, lower + 1.0 / n as f64)
}

/// One frontier sweep.
#[derive(Debug, Clone)]
pub struct FrontierConfig {
    pub q: JointDistribution,
    pub grid: CalibrationGrid,
    pub nature: NatureSpec,
    /// Template whose `tau` is replaced at each grid point.
    pub player: PlayerSpec,
    pub taus: Vec<f64>,
    pub horizon: u64,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub tau: f64,
    /// Parity budget `tau TV`.
    pub delta: f64,
    pub gc: Summary,
    pub dp: Summary,
    pub band_lower: f64,
    pub band_upper: f64,
}

impl FrontierConfig {
    fn run_config(&self, tau: f64, seed: u64) -> Result<RunConfig> {
        let gammas = self.q.marginal_gamma();
        let tv = self.q.group_tv()?;
        let n_x = self.q.n_x();
        let pair = combine(&[
            group_calibration(self.grid, &gammas, n_x)?,
            demographic_parity(self.grid, &gammas, tau * tv, n_x)?,
        ])?;
        Ok(RunConfig {
            q: self.q.clone(),
            pair,
            metrics: MetricContext { grid: Some(self.grid), reward: None, gammas },
            monitoring: self.nature.monitoring(),
            horizon: self.horizon,
            seed,
            sample_at: vec![self.horizon],
            store_rounds: false,
        })
    }

    /// Single oracle run at `tau`.
    pub fn run_one(&self, tau: f64, seed: u64) -> Result<Trajectory> {
        let config = self.run_config(tau, seed)?;
        let mut player = self.player.with_tau(tau).build(
            &config.pair,
            &self.q,
            KnowledgeMode::KnownQ,
            config.monitoring,
            Some(self.grid),
            &self.nature,
        )?;
        let mut nature = self.nature.build(&self.q, &config.pair)?;
        run(&config, &mut player, &mut nature)
    }
}

/// Runs every `(tau, seed)` entry in parallel and summarizes per `tau`.
pub fn frontier(config: &FrontierConfig) -> Result<Vec<FrontierPoint>> {
    if config.seeds.is_empty() || config.taus.is_empty() {
        return Err(Error::InvalidParameter("frontier needs at least one tau and one seed".into()));
    }
    if let Some(t) = config.taus.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::InvalidParameter(format!("tau {t} outside [0, 1]")));
    }
    let tv = config.q.group_tv()?;
    let jobs: Vec<(usize, u64)> = (0..config.taus.len())
        .flat_map(|i| config.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let finals: Vec<(usize, f64, f64)> = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let tr = config.run_one(config.taus[i], seed)?;
            let last = tr.last().ok_or_else(|| Error::InvalidParameter("empty trajectory".into()))?;
            let gc = last.cgr.ok_or_else(|| Error::InvalidParameter("group calibration undefined".into()))?;
            let dp = last.dp.ok_or_else(|| Error::InvalidParameter("parity gap undefined".into()))?;
            Ok((i, gc, dp))
        })
        .collect::<Result<_>>()?;
    let monitoring = config.nature.monitoring();
    Ok(config
        .taus
        .iter()
        .enumerate()
        .map(|(i, &tau)| {
            let gc: Vec<f64> = finals.iter().filter(|f| f.0 == i).map(|f| f.1).collect();
            let dp: Vec<f64> = finals.iter().filter(|f| f.0 == i).map(|f| f.2).collect();
            let (band_lower, band_upper) = analytic_band(monitoring, tau, tv, config.grid.n());
            FrontierPoint {
                tau,
                delta: tau * tv,
                gc: Summary::of(&gc).expect("non-empty seeds"),
                dp: Summary::of(&dp).expect("non-empty seeds"),
                band_lower,
                band_upper,
            }
        })
        .collect())
}

/// CSV of frontier points, one row per `tau`.
pub fn frontier_csv(points: &[FrontierPoint]) -> String {
    let mut out = String::from("tau,delta,gc_mean,gc_stderr,dp_mean,dp_stderr,band_lower,band_upper\n");
    for p in points {
        out.push_str(&format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}\n",
            p.tau, p.delta, p.gc.mean, p.gc.stderr, p.dp.mean, p.dp.stderr, p.band_lower, p.band_upper
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::ContextSpace;

    fn instance(tv_half: bool) -> JointDistribution {
        let cond = if tv_half { vec![vec![0.75, 0.25], vec![0.25, 0.75]] } else { vec![vec![0.5, 0.5], vec![0.5, 0.5]] };
        JointDistribution::from_conditionals(ContextSpace::indexed(2, 2).unwrap(), &[0.5, 0.5], &cond).unwrap()
    }

    #[test]
    fn bands_match_closed_forms() {
        assert_eq!(analytic_band(Monitoring::Aware, 0.5, 0.5, 20), (0.75, 0.8));
        let (lo, hi) = analytic_band(Monitoring::Unaware, 1.0, 0.5, 20);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.05).abs() < 1e-15);
    }

    #[test]
    fn short_unaware_sweep_tracks_hand_values() {
        // Unaware oracle on this instance: forecast 0.225 on x1 with weight
        // 1 - tau, exact labels otherwise, so GC = 0.55 - 0.525 tau.
        let config = FrontierConfig {
            q: instance(true),
            grid: CalibrationGrid::new(20).unwrap(),
            nature: NatureSpec::ParetoLowerUnaware,
            player: PlayerSpec::ParetoOracleUnaware { tau: 0.0 },
            taus: vec![0.0, 1.0],
            horizon: 20_000,
            seeds: vec![1, 2],
        };
        let pts = frontier(&config).unwrap();
        assert!((pts[0].gc.mean - 0.55).abs() < 0.03, "{:?}", pts[0]);
        assert!((pts[1].gc.mean - 0.025).abs() < 0.03, "{:?}", pts[1]);
        assert!(pts[0].dp.mean < 0.02);
        assert_eq!(pts[1].delta, 0.5);
    }

    #[test]
    fn rejects_tau_outside_unit_interval() {
        let config = FrontierConfig {
            q: instance(false),
            grid: CalibrationGrid::new(4).unwrap(),
            nature: NatureSpec::ParetoLowerAware,
            player: PlayerSpec::ParetoOracleAware { tau: 0.0 },
            taus: vec![1.5],
            horizon: 10,
            seeds: vec![0],
        };
        assert!(frontier(&config).is_err());
    }
}
