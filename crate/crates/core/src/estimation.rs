//! Online estimators of the context distribution and of the unknown tilde
//! target, with confidence widths and the doubling refresh schedule.
//!
//! Logs are natural logs. Widths follow the finite-context plug-in bounds:
//! `alpha2 = min(1, sqrt(ln(8t) / (2t)))` and
//! `alpha1 = min(1, theta(n0) + theta(n1))` with `theta(0) = 1` and
//! `theta(n) = sqrt((|X| + ln(8t)) / (2n))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::TargetSet;
use crate::payoff::CalibrationGrid;
use crate::prob::{half_l1, ContextSpace, JointDistribution};
use crate::rng;

/// Running counts `n[x][s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalJoint {
    space: ContextSpace,
    counts: Vec<u64>,
    total: u64,
}

impl EmpiricalJoint {
    pub fn new(space: ContextSpace) -> Self {
        let cells = space.n_x() * space.n_s();
        Self { space, counts: vec![0; cells], total: 0 }
    }

    pub fn update(&mut self, x: usize, s: usize) -> Result<()> {
        let (n_x, n_s) = (self.space.n_x(), self.space.n_s());
        if x >= n_x {
            return Err(Error::IndexOutOfRange { index: x, size: n_x });
        }
        if s >= n_s {
            return Err(Error::IndexOutOfRange { index: s, size: n_s });
        }
        self.counts[x * n_s + s] += 1;
        self.total += 1;
        Ok(())
    }

    pub fn space(&self) -> &ContextSpace {
        &self.space
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, x: usize, s: usize) -> u64 {
        self.counts[x * self.space.n_s() + s]
    }

    pub fn group_counts(&self) -> Vec<u64> {
        let n_s = self.space.n_s();
        (0..n_s)
            .map(|s| (0..self.space.n_x()).map(|x| self.counts[x * n_s + s]).sum())
            .collect()
    }

    /// Empirical `Q^hat(x, .)`; zeros before the first observation.
    pub fn row(&self, x: usize) -> Vec<f64> {
        let n_s = self.space.n_s();
        if self.total == 0 {
            return vec![0.0; n_s];
        }
        let t = self.total as f64;
        self.counts[x * n_s..(x + 1) * n_s].iter().map(|&c| c as f64 / t).collect()
    }

    pub fn q_hat(&self) -> Option<JointDistribution> {
        if self.total == 0 {
            return None;
        }
        let t = self.total as f64;
        JointDistribution::from_flat(self.space.clone(), self.counts.iter().map(|&c| c as f64 / t).collect()).ok()
    }

    pub fn gamma_hat(&self) -> Vec<f64> {
        let t = self.total.max(1) as f64;
        self.group_counts().iter().map(|&c| c as f64 / t).collect()
    }

    /// Empirical conditional of `x` given `s`, uniform for an unseen group.
    pub fn conditional(&self, s: usize) -> Vec<f64> {
        let n_s = self.space.n_s();
        let n_x = self.space.n_x();
        let ns: u64 = (0..n_x).map(|x| self.counts[x * n_s + s]).sum();
        if ns == 0 {
            return vec![1.0 / n_x as f64; n_x];
        }
        (0..n_x).map(|x| self.counts[x * n_s + s] as f64 / ns as f64).collect()
    }

    /// Plug-in estimate of `TV(Q^0, Q^1)`.
    pub fn tv_plugin(&self) -> Result<f64> {
        if self.space.n_s() != 2 {
            return Err(Error::UnsupportedCardinality("plug-in TV needs two groups".into()));
        }
        Ok(half_l1(&self.conditional(0), &self.conditional(1)))
    }

    /// `TV(Q^hat, Q)` over the joint table.
    pub fn tv_to(&self, q: &JointDistribution) -> Result<f64> {
        check_dim(self.counts.len(), q.n_x() * q.n_s())?;
        let t = self.total.max(1) as f64;
        Ok(0.5
            * self
                .counts
                .iter()
                .enumerate()
                .map(|(i, &c)| (c as f64 / t - q.prob(i / q.n_s(), i % q.n_s())).abs())
                .sum::<f64>())
    }
}

/// Confidence widths of the hat sets at round `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceWidths {
    pub alpha1: f64,
    pub alpha2: f64,
    pub t: u64,
}

impl ConfidenceWidths {
    pub fn compute(t: u64, n0: u64, n1: u64, x_card: usize) -> Result<Self> {
        if t == 0 || n0 + n1 != t {
            return Err(Error::InvalidParameter(format!("widths need t >= 1 and n0 + n1 = t (t={t}, n0={n0}, n1={n1})")));
        }
        let log8t = (8.0 * t as f64).ln();
        let theta = |n: u64| {
            if n == 0 {
                1.0
            } else {
                ((x_card as f64 + log8t) / (2.0 * n as f64)).sqrt()
            }
        };
        Ok(Self {
            alpha1: (theta(n0) + theta(n1)).min(1.0),
            alpha2: (log8t / (2.0 * t as f64)).sqrt().min(1.0),
            t,
        })
    }

    /// Known-distribution mode: no uncertainty.
    pub fn zero(t: u64) -> Self {
        Self { alpha1: 0.0, alpha2: 0.0, t }
    }

    pub fn inflation(&self) -> f64 {
        self.alpha1 + 4.0 * self.alpha2
    }
}

/// Slack added to the tradeoff levels: `eps = (1 - tau) M + eps_slack`,
/// `delta = tau M + delta_slack`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct TradeoffSlack {
    #[serde(with = "crate::decimal")]
    pub epsilon: f64,
    #[serde(with = "crate::decimal")]
    pub delta: f64,
}

impl TradeoffSlack {
    pub fn levels(&self, tv: f64, tau: f64) -> (f64, f64) {
        ((1.0 - tau) * tv + self.epsilon, tau * tv + self.delta)
    }
}

/// Estimated ingredients of the hat sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HatSets {
    pub gamma_hat: [f64; 2],
    pub m_hat: f64,
    pub tau: f64,
    pub widths: ConfidenceWidths,
    pub slack: TradeoffSlack,
}

impl HatSets {
    pub fn from_empirical(emp: &EmpiricalJoint, tau: f64, slack: TradeoffSlack) -> Result<Self> {
        check_tau(tau)?;
        let g = emp.group_counts();
        check_dim(2, g.len())?;
        let widths = ConfidenceWidths::compute(emp.total(), g[0], g[1], emp.space.n_x())?;
        let gh = emp.gamma_hat();
        Ok(Self { gamma_hat: [gh[0], gh[1]], m_hat: emp.tv_plugin()?, tau, widths, slack })
    }

    /// Exact plug-in values and zero widths.
    pub fn exact(q: &JointDistribution, tau: f64, slack: TradeoffSlack) -> Result<Self> {
        check_tau(tau)?;
        let g = q.marginal_gamma();
        check_dim(2, g.len())?;
        Ok(Self { gamma_hat: [g[0], g[1]], m_hat: q.group_tv()?, tau, widths: ConfidenceWidths::zero(0), slack })
    }

    pub fn epsilon_hat(&self) -> f64 {
        self.slack.levels(self.m_hat, self.tau).0
    }

    pub fn delta_hat(&self) -> f64 {
        self.slack.levels(self.m_hat, self.tau).1
    }

    /// `(C^gcal, C^dp)`; a weighted constraint implied by the unit ball or
    /// the box is dropped, which also covers a group with zero estimate.
    pub fn build_hat_sets(&self, grid: CalibrationGrid) -> Result<(TargetSet, TargetSet)> {
        let n = grid.n();
        let [g0, g1] = self.gamma_hat;
        let infl = self.widths.inflation();
        let unit = TargetSet::l1_ball(2 * n, 1.0)?;
        let r = g0 * g1 * self.epsilon_hat() + infl;
        let gcal = if r >= g0.max(g1) {
            unit
        } else {
            let mut w = vec![g1; n];
            w.extend(vec![g0; n]);
            TargetSet::intersection(vec![unit, TargetSet::weighted_l1_ball(w, r)?])?
        };
        let unit_box = TargetSet::boxed(vec![0.0; 2], vec![1.0; 2])?;
        let h = g0 * g1 * self.delta_hat() + infl;
        let dp = if h >= g0.max(g1) {
            unit_box
        } else {
            TargetSet::intersection(vec![unit_box, TargetSet::slab(vec![g1, -g0], h)?])?
        };
        Ok((gcal, dp))
    }

    /// The product hat set in the tilde payoff space.
    pub fn target(&self, grid: CalibrationGrid) -> Result<TargetSet> {
        let (gcal, dp) = self.build_hat_sets(grid)?;
        TargetSet::product(vec![gcal, dp])
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if (0.0..=1.0).contains(&tau) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("tau = {tau} outside [0, 1]")))
    }
}

/// Rounds at the end of which the hat set is rebuilt: `t = 2^r`.
pub mod schedule {
    pub fn is_refresh(t: u64) -> bool {
        t.is_power_of_two()
    }

    /// `floor(log2 t)` for `t >= 1`.
    pub fn phase(t: u64) -> u32 {
        63 - t.max(1).leading_zeros()
    }

    pub fn refresh_count(horizon: u64) -> u64 {
        if horizon == 0 {
            0
        } else {
            phase(horizon) as u64 + 1
        }
    }
}

/// Vertices of the box-restricted tilde target in its two blocks.
pub fn tilde_vertices(grid: CalibrationGrid, gammas: [f64; 2], epsilon: f64, delta: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = grid.n();
    let dim = 2 * n;
    let mut gcal = Vec::new();
    let axis = |s: usize| (gammas[s] * epsilon).min(1.0);
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; dim];
            v[i] = sign * axis(i / n);
            gcal.push(v);
        }
    }
    // Vertices where both the unit ball and the weighted constraint bind.
    let (w0, w1) = (1.0 / gammas[0], 1.0 / gammas[1]);
    if (w0 - w1).abs() > 1e-15 {
        let u = (epsilon - w1) / (w0 - w1);
        let v = 1.0 - u;
        if u > 1e-15 && v > 1e-15 {
            for i in 0..n {
                for j in n..dim {
                    for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                        let mut p = vec![0.0; dim];
                        p[i] = si * u;
                        p[j] = sj * v;
                        gcal.push(p);
                    }
                }
            }
        }
    }

    let lines: [([f64; 2], f64); 6] = [
        ([1.0, 0.0], 0.0),
        ([1.0, 0.0], 1.0),
        ([0.0, 1.0], 0.0),
        ([0.0, 1.0], 1.0),
        ([w0, -w1], delta),
        ([w0, -w1], -delta),
    ];
    let feasible = |p: &[f64; 2]| {
        let tol = 1e-12;
        (-tol..=1.0 + tol).contains(&p[0]) && (-tol..=1.0 + tol).contains(&p[1]) && (w0 * p[0] - w1 * p[1]).abs() <= delta + tol
    };
    let mut dp: Vec<Vec<f64>> = Vec::new();
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let ((a, b), (c, d)) = (lines[i], lines[j]);
            let det = a[0] * c[1] - a[1] * c[0];
            if det.abs() < 1e-15 {
                continue;
            }
            let p = [(b * c[1] - a[1] * d) / det, (a[0] * d - b * c[0]) / det];
            if feasible(&p) && !dp.iter().any(|q| (q[0] - p[0]).abs() < 1e-12 && (q[1] - p[1]).abs() < 1e-12) {
                dp.push(p.to_vec());
            }
        }
    }
    (gcal, dp)
}

/// Whether the box-restricted true tilde target sits inside the hat sets.
pub fn hat_sets_cover(hat: &HatSets, grid: CalibrationGrid, gammas: [f64; 2], epsilon: f64, delta: f64) -> Result<bool> {
    let (gcal_hat, dp_hat) = hat.build_hat_sets(grid)?;
    let (gv, dv) = tilde_vertices(grid, gammas, epsilon, delta);
    for v in &gv {
        if !gcal_hat.contains(v, 1e-9)? {
            return Ok(false);
        }
    }
    for v in &dv {
        if !dp_hat.contains(v, 1e-9)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Fraction of `n_reps` replications of `t` draws whose hat sets cover the
/// true tilde target.
pub fn coverage_frequency(
    q: &JointDistribution,
    grid: CalibrationGrid,
    tau: f64,
    slack: TradeoffSlack,
    t: u64,
    n_reps: usize,
    seed: u64,
) -> Result<f64> {
    let g = q.marginal_gamma();
    check_dim(2, g.len())?;
    let (eps, delta) = slack.levels(q.group_tv()?, tau);
    let hits = (0..n_reps)
        .into_par_iter()
        .map(|rep| {
            let mut r = rng::replication(seed, rep);
            let mut emp = EmpiricalJoint::new(q.space().clone());
            for _ in 0..t {
                let (x, s) = q.sample(&mut r);
                emp.update(x, s)?;
            }
            let hat = HatSets::from_empirical(&emp, tau, slack)?;
            hat_sets_cover(&hat, grid, [g[0], g[1]], eps, delta)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(hits.iter().filter(|h| **h).count() as f64 / n_reps as f64)
}

/// One row of the sequential-estimation diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub t: u64,
    pub mean_tv2: f64,
    pub t_times_mean_tv2: f64,
    pub stderr: f64,
}

pub const DIAGNOSTIC_GRID: [u64; 4] = [100, 400, 1600, 6400];

/// Monte-Carlo estimate of `E[TV^2(Q^hat_t, Q)]` at each `t` of `ts`.
pub fn assumption1_diagnostic(q: &JointDistribution, ts: &[u64], n_reps: usize, seed: u64) -> Result<Vec<DiagnosticRow>> {
    if n_reps < 2 {
        return Err(Error::InvalidParameter("diagnostic needs at least two replications".into()));
    }
    let mut sorted = ts.to_vec();
    sorted.sort_unstable();
    let horizon = *sorted.last().ok_or_else(|| Error::InvalidParameter("empty diagnostic grid".into()))?;
    let samples: Vec<Vec<f64>> = (0..n_reps)
        .into_par_iter()
        .map(|rep| {
            let mut r = rng::replication(seed, rep);
            let mut emp = EmpiricalJoint::new(q.space().clone());
            let mut out = Vec::with_capacity(sorted.len());
            let mut next = 0;
            for t in 1..=horizon {
                let (x, s) = q.sample(&mut r);
                emp.update(x, s)?;
                while next < sorted.len() && sorted[next] == t {
                    out.push(emp.tv_to(q)?.powi(2));
                    next += 1;
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let xs: Vec<f64> = samples.iter().map(|s| s[i]).collect();
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            DiagnosticRow { t, mean_tv2: mean, t_times_mean_tv2: t as f64 * mean, stderr: (var / n).sqrt() }
        })
        .collect())
}

pub fn diagnostic_csv(rows: &[DiagnosticRow]) -> String {
    let mut out = String::from("t,mean_tv2,t_times_mean_tv2,stderr\n");
    for r in rows {
        out.push_str(&format!("{},{:?},{:?},{:?}\n", r.t, r.mean_tv2, r.t_times_mean_tv2, r.stderr));
    }
    out
}
