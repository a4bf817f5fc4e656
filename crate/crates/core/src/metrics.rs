//! Criterion series over a run: distance to the target, calibration,
//! demographic parity, equalized payoffs and regret.
//!
//! Everything is computed from running compensated sums, so the values the
//! engine samples mid-run and the values recomputed from a stored
//! trajectory come from the same code.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::objectives::ObjectivePair;
use crate::payoff::{CalibrationGrid, RewardTensor, Shape};
use crate::stats::RunningMean;

/// One realized round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub x: usize,
    pub s: usize,
    pub a: usize,
    pub b: usize,
}

/// A metric that may be undefined, e.g. before a group has appeared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricValue {
    Value(f64),
    Missing(String),
}

impl MetricValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            MetricValue::Value(v) => Some(*v),
            MetricValue::Missing(_) => None,
        }
    }
}

/// What the metrics need beyond the rounds: the forecast grid when the
/// Player forecasts, a scalar reward when regret or payoffs are tracked,
/// and the true group weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricContext {
    pub grid: Option<CalibrationGrid>,
    pub reward: Option<RewardTensor>,
    pub gammas: Vec<f64>,
}

impl MetricContext {
    pub fn check(&self, shape: Shape) -> Result<()> {
        check_dim(shape.n_s, self.gammas.len())?;
        if let Some(g) = self.grid {
            if shape.n_a != g.n() || shape.n_b != 2 {
                return Err(Error::InvalidParameter(format!(
                    "calibration metrics need {} forecast levels and binary outcomes, got {}x{}",
                    g.n(),
                    shape.n_a,
                    shape.n_b
                )));
            }
        }
        if let Some(r) = &self.reward {
            if r.shape() != shape {
                return Err(Error::InvalidParameter("reward tensor does not match the game".into()));
            }
        }
        Ok(())
    }
}

/// Sampled values of every criterion at round `t`; `None` when the
/// criterion is not tracked or undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub t: u64,
    pub d: Option<f64>,
    pub c: Option<f64>,
    pub cgr: Option<f64>,
    pub dp: Option<f64>,
    pub p: Option<f64>,
    pub r: Option<f64>,
    pub rgr: Option<f64>,
}

impl MetricPoint {
    pub const COLUMNS: [&'static str; 8] = ["t", "d_t", "C_t", "Cgr_t", "D_t", "P_t", "R_t", "Rgr_t"];

    pub fn get(&self, column: &str) -> Option<f64> {
        match column {
            "t" => Some(self.t as f64),
            "d_t" => self.d,
            "C_t" => self.c,
            "Cgr_t" => self.cgr,
            "D_t" => self.dp,
            "P_t" => self.p,
            "R_t" => self.r,
            "Rgr_t" => self.rgr,
            _ => None,
        }
    }
}

/// Running sums behind every metric.
#[derive(Debug, Clone)]
pub struct MetricAccumulator {
    ctx: MetricContext,
    shape: Shape,
    n: u64,
    group_counts: Vec<u64>,
    /// `[s][k]` blocks of `(a_k - b) 1{k_t = k, s_t = s}`.
    cal: Option<RunningMean>,
    /// `a_t 1{s_t = s}` (forecast value; action index without a grid).
    forecast: RunningMean,
    /// `r_t 1{s_t = s}`.
    reward: Option<RunningMean>,
    /// `[s][a']` blocks of `(r(a_t) - r(a')) 1{s_t = s}`.
    regret: Option<RunningMean>,
}

impl MetricAccumulator {
    pub fn new(ctx: MetricContext, shape: Shape) -> Result<Self> {
        ctx.check(shape)?;
        let n_s = shape.n_s;
        Ok(Self {
            cal: ctx.grid.map(|g| RunningMean::new(g.n() * n_s)),
            forecast: RunningMean::new(n_s),
            reward: ctx.reward.as_ref().map(|_| RunningMean::new(n_s)),
            regret: ctx.reward.as_ref().map(|_| RunningMean::new(shape.n_a * n_s)),
            group_counts: vec![0; n_s],
            n: 0,
            ctx,
            shape,
        })
    }

    pub fn push(&mut self, r: Round) {
        let n_s = self.shape.n_s;
        self.n += 1;
        self.group_counts[r.s] += 1;
        let level = match self.ctx.grid {
            Some(g) => g.level(r.a),
            None => r.a as f64,
        };
        if let (Some(cal), Some(g)) = (&mut self.cal, self.ctx.grid) {
            let mut v = vec![0.0; g.n() * n_s];
            v[r.s * g.n() + r.a] = level - r.b as f64;
            cal.push(&v);
        }
        let mut f = vec![0.0; n_s];
        f[r.s] = level;
        self.forecast.push(&f);
        if let Some(rew) = &self.ctx.reward {
            let got = rew.get(r.a, r.b, r.x, r.s);
            let mut v = vec![0.0; n_s];
            v[r.s] = got;
            self.reward.as_mut().expect("reward sums").push(&v);
            let n_a = self.shape.n_a;
            let mut reg = vec![0.0; n_a * n_s];
            for alt in 0..n_a {
                reg[r.s * n_a + alt] = got - rew.get(alt, r.b, r.x, r.s);
            }
            self.regret.as_mut().expect("regret sums").push(&reg);
        }
    }

    pub fn rounds(&self) -> u64 {
        self.n
    }

    pub fn group_counts(&self) -> &[u64] {
        &self.group_counts
    }

    fn groups_present(&self) -> MetricValue {
        match self.group_counts.iter().position(|&c| c == 0) {
            Some(s) => MetricValue::Missing(format!("group {s} has not appeared")),
            None => MetricValue::Value(0.0),
        }
    }

    /// `sum_k |(1/T) sum_t (a_k - b_t) 1{k_t = k}|`.
    pub fn calibration(&self) -> Result<f64> {
        let (cal, g) = self.cal_parts()?;
        let m = cal.mean();
        let n = g.n();
        Ok((0..n).map(|k| (0..self.shape.n_s).map(|s| m[s * n + k]).sum::<f64>().abs()).sum())
    }

    /// `sum_s sum_k |(1/(gamma_s T)) sum_t (a_k - b_t) 1{k_t = k, s_t = s}|`.
    pub fn group_calibration(&self) -> Result<MetricValue> {
        let (cal, _) = self.cal_parts()?;
        if let m @ MetricValue::Missing(_) = self.groups_present() {
            return Ok(m);
        }
        let n = self.ctx.grid.expect("grid").n();
        let m = cal.mean();
        Ok(MetricValue::Value(
            (0..self.shape.n_s)
                .map(|s| m[s * n..(s + 1) * n].iter().map(|v| v.abs()).sum::<f64>() / self.ctx.gammas[s])
                .sum(),
        ))
    }

    fn cal_parts(&self) -> Result<(&RunningMean, CalibrationGrid)> {
        match (&self.cal, self.ctx.grid) {
            (Some(c), Some(g)) => Ok((c, g)),
            _ => Err(Error::InvalidParameter("calibration metrics need a forecast grid".into())),
        }
    }

    fn two_group_gap(&self, sums: &RunningMean) -> Result<MetricValue> {
        if self.shape.n_s != 2 {
            return Err(Error::UnsupportedCardinality("group gaps need two groups".into()));
        }
        if let m @ MetricValue::Missing(_) = self.groups_present() {
            return Ok(m);
        }
        let m = sums.mean();
        Ok(MetricValue::Value((m[0] / self.ctx.gammas[0] - m[1] / self.ctx.gammas[1]).abs()))
    }

    /// `|(1/(gamma_0 T)) sum a_t 1{s=0} - (1/(gamma_1 T)) sum a_t 1{s=1}|`.
    pub fn demographic_parity(&self) -> Result<MetricValue> {
        self.two_group_gap(&self.forecast)
    }

    /// The same gap on rewards.
    pub fn equalized_payoffs(&self) -> Result<MetricValue> {
        let sums = self.reward.as_ref().ok_or_else(|| Error::InvalidParameter("equalized payoffs need a reward".into()))?;
        self.two_group_gap(sums)
    }

    /// `min_{a'} (1/T) sum_t (r(a_t, ..) - r(a', ..))`.
    pub fn regret(&self) -> Result<f64> {
        let m = self.regret_mean()?;
        let n_a = self.shape.n_a;
        Ok((0..n_a)
            .map(|alt| (0..self.shape.n_s).map(|s| m[s * n_a + alt]).sum::<f64>())
            .fold(f64::INFINITY, f64::min))
    }

    /// `min_{s, a'} (1/T) sum_t 1{s_t = s} (r(a_t, ..) - r(a', ..))`, the
    /// average of the group-wise regret payoff.
    pub fn group_regret(&self) -> Result<f64> {
        Ok(self.regret_mean()?.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// Group-wise regret with the `1/(gamma_s T)` normalization.
    pub fn group_regret_normalized(&self) -> Result<MetricValue> {
        if let m @ MetricValue::Missing(_) = self.groups_present() {
            return Ok(m);
        }
        let m = self.regret_mean()?;
        let n_a = self.shape.n_a;
        Ok(MetricValue::Value(
            m.iter()
                .enumerate()
                .map(|(i, v)| v / self.ctx.gammas[i / n_a])
                .fold(f64::INFINITY, f64::min),
        ))
    }

    fn regret_mean(&self) -> Result<Vec<f64>> {
        self.regret
            .as_ref()
            .map(RunningMean::mean)
            .ok_or_else(|| Error::InvalidParameter("regret needs a reward".into()))
    }

    /// Every tracked criterion at the current round; `d` is filled in by
    /// the caller, which owns the payoff average.
    pub fn point(&self, d: Option<f64>) -> MetricPoint {
        let has_grid = self.ctx.grid.is_some();
        let has_reward = self.ctx.reward.is_some();
        let two = self.shape.n_s == 2;
        MetricPoint {
            t: self.n,
            d,
            c: if has_grid { self.calibration().ok() } else { None },
            cgr: if has_grid { self.group_calibration().ok().and_then(|v| v.value()) } else { None },
            dp: if two { self.demographic_parity().ok().and_then(|v| v.value()) } else { None },
            p: if has_reward && two { self.equalized_payoffs().ok().and_then(|v| v.value()) } else { None },
            r: if has_reward { self.regret().ok() } else { None },
            rgr: if has_reward { self.group_regret().ok() } else { None },
        }
    }
}

fn accumulate(rounds: &[Round], ctx: &MetricContext, shape: Shape) -> Result<MetricAccumulator> {
    let mut acc = MetricAccumulator::new(ctx.clone(), shape)?;
    for &r in rounds {
        acc.push(r);
    }
    Ok(acc)
}

pub fn metric_calibration(rounds: &[Round], ctx: &MetricContext, shape: Shape) -> Result<f64> {
    accumulate(rounds, ctx, shape)?.calibration()
}

pub fn metric_group_calibration(rounds: &[Round], ctx: &MetricContext, shape: Shape) -> Result<MetricValue> {
    accumulate(rounds, ctx, shape)?.group_calibration()
}

pub fn metric_dp(rounds: &[Round], ctx: &MetricContext, shape: Shape) -> Result<MetricValue> {
    accumulate(rounds, ctx, shape)?.demographic_parity()
}

pub fn metric_equalized_payoffs(rounds: &[Round], ctx: &MetricContext, shape: Shape) -> Result<MetricValue> {
    accumulate(rounds, ctx, shape)?.equalized_payoffs()
}

pub fn metric_regret(rounds: &[Round], ctx: &MetricContext, shape: Shape) -> Result<f64> {
    accumulate(rounds, ctx, shape)?.regret()
}

pub fn metric_group_regret(rounds: &[Round], ctx: &MetricContext, shape: Shape) -> Result<f64> {
    accumulate(rounds, ctx, shape)?.group_regret()
}

/// `(t, d_t)` at each requested round, `d_t` being the distance from the
/// average payoff of the first `t` rounds to the pair's target.
pub fn metric_distance_series(rounds: &[Round], pair: &ObjectivePair, at: &[u64]) -> Result<Vec<(u64, f64)>> {
    let mut mean = RunningMean::new(pair.payoff.dim());
    let mut out = Vec::with_capacity(at.len());
    let mut next = at.iter().peekable();
    for (i, r) in rounds.iter().enumerate() {
        mean.push(pair.payoff.entry(r.a, r.b, r.x, r.s));
        let t = i as u64 + 1;
        while next.peek() == Some(&&t) {
            out.push((t, pair.target.distance(&mean.mean())?));
            next.next();
        }
    }
    Ok(out)
}
