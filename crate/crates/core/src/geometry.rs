//! Closed convex target sets with Euclidean projection, distance and
//! membership.
//!
//! Every variant has an exact projection except `Intersection`, which runs
//! Dykstra's alternating projections. Products project factor by factor.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::stats;

pub const DYKSTRA_MAX_SWEEPS: usize = 1_000_000;
pub const DYKSTRA_TOL: f64 = 1e-10;
/// Membership slack used when a projection result is checked against a set.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Largest member violation accepted from a converged Dykstra run.
const INFEASIBILITY_TOL: f64 = 1e-8;

/// Shape and parameters of a target set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetKind {
    /// `[0, inf)^dim`.
    Orthant { dim: usize },
    /// `{v : sum_i w_i |v_i| <= r}`.
    WeightedL1Ball {
        #[serde(with = "crate::decimal::vec")]
        weights: Vec<f64>,
        #[serde(with = "crate::decimal")]
        radius: f64,
    },
    /// `{v : |<w, v>| <= delta}`.
    WeightedSlab {
        #[serde(with = "crate::decimal::vec")]
        normal: Vec<f64>,
        #[serde(with = "crate::decimal")]
        half_width: f64,
    },
    Box {
        #[serde(with = "crate::decimal::vec")]
        lower: Vec<f64>,
        #[serde(with = "crate::decimal::vec")]
        upper: Vec<f64>,
    },
    /// Cartesian product; the coordinate split is the factor dimensions in order.
    Product { factors: Vec<TargetSet> },
    Intersection { members: Vec<TargetSet> },
}

/// A validated closed convex set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetKind", into = "SetKind")]
pub struct TargetSet {
    kind: SetKind,
    dim: usize,
}

impl From<TargetSet> for SetKind {
    fn from(t: TargetSet) -> Self {
        t.kind
    }
}

impl TryFrom<SetKind> for TargetSet {
    type Error = Error;

    fn try_from(kind: SetKind) -> Result<Self> {
        let dim = match &kind {
            SetKind::Orthant { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidParameter("orthant of dimension 0".into()));
                }
                *dim
            }
            SetKind::WeightedL1Ball { weights, radius } => {
                if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return Err(Error::InvalidParameter("l1 ball weights must be positive".into()));
                }
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::InvalidParameter(format!("l1 ball radius {radius} must be >= 0")));
                }
                weights.len()
            }
            SetKind::WeightedSlab { normal, half_width } => {
                if normal.is_empty() || normal.iter().any(|w| !w.is_finite()) || norm2(normal) == 0.0 {
                    return Err(Error::InvalidParameter("slab normal must be finite and nonzero".into()));
                }
                if !(half_width.is_finite() && *half_width >= 0.0) {
                    return Err(Error::InvalidParameter(format!("slab half-width {half_width} must be >= 0")));
                }
                normal.len()
            }
            SetKind::Box { lower, upper } => {
                check_dim(lower.len(), upper.len())?;
                if lower.is_empty() || lower.iter().zip(upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u)) {
                    return Err(Error::InvalidParameter("box bounds must be finite with lower <= upper".into()));
                }
                lower.len()
            }
            SetKind::Product { factors } => {
                if factors.is_empty() {
                    return Err(Error::InvalidParameter("empty product".into()));
                }
                factors.iter().map(|f| f.dim).sum()
            }
            SetKind::Intersection { members } => {
                let first = members
                    .first()
                    .ok_or_else(|| Error::InvalidParameter("empty intersection".into()))?;
                for m in members {
                    check_dim(first.dim, m.dim)?;
                }
                first.dim
            }
        };
        Ok(Self { kind, dim })
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl TargetSet {
    pub fn new(kind: SetKind) -> Result<Self> {
        Self::try_from(kind)
    }

    pub fn orthant(dim: usize) -> Result<Self> {
        Self::new(SetKind::Orthant { dim })
    }

    pub fn weighted_l1_ball(weights: Vec<f64>, radius: f64) -> Result<Self> {
        Self::new(SetKind::WeightedL1Ball { weights, radius })
    }

    pub fn l1_ball(dim: usize, radius: f64) -> Result<Self> {
        Self::weighted_l1_ball(vec![1.0; dim], radius)
    }

    pub fn slab(normal: Vec<f64>, half_width: f64) -> Result<Self> {
        Self::new(SetKind::WeightedSlab { normal, half_width })
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        Self::new(SetKind::Box { lower, upper })
    }

    pub fn product(factors: Vec<TargetSet>) -> Result<Self> {
        Self::new(SetKind::Product { factors })
    }

    pub fn intersection(members: Vec<TargetSet>) -> Result<Self> {
        Self::new(SetKind::Intersection { members })
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Euclidean projection of `v`.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, v.len())?;
        self.project_unchecked(v)
    }

    fn project_unchecked(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(match &self.kind {
            SetKind::Orthant { .. } => v.iter().map(|x| x.max(0.0)).collect(),
            SetKind::Box { lower, upper } => v
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(x, (l, u))| x.clamp(*l, *u))
                .collect(),
            SetKind::WeightedSlab { normal, half_width } => project_slab(normal, *half_width, v),
            SetKind::WeightedL1Ball { weights, radius } => project_weighted_l1(weights, *radius, v),
            SetKind::Product { factors } => {
                let mut out = Vec::with_capacity(v.len());
                let mut start = 0;
                for f in factors {
                    out.extend(f.project_unchecked(&v[start..start + f.dim])?);
                    start += f.dim;
                }
                out
            }
            SetKind::Intersection { members } => project_intersection(members, v)?,
        })
    }

    /// Squared Euclidean distance from `v` to the set.
    pub fn distance2(&self, v: &[f64]) -> Result<f64> {
        check_dim(self.dim, v.len())?;
        self.distance2_unchecked(v)
    }

    fn distance2_unchecked(&self, v: &[f64]) -> Result<f64> {
        match &self.kind {
            SetKind::Product { factors } => {
                let mut total = 0.0;
                let mut start = 0;
                for f in factors {
                    total += f.distance2_unchecked(&v[start..start + f.dim])?;
                    start += f.dim;
                }
                Ok(total)
            }
            SetKind::Orthant { .. } => Ok(v.iter().filter(|x| **x < 0.0).map(|x| x * x).sum()),
            _ => Ok(dist2(v, &self.project_unchecked(v)?)),
        }
    }

    pub fn distance(&self, v: &[f64]) -> Result<f64> {
        Ok(self.distance2(v)?.sqrt())
    }

    /// Whether the distance from `v` to the set is at most `tol`.
    pub fn contains(&self, v: &[f64], tol: f64) -> Result<bool> {
        check_dim(self.dim, v.len())?;
        if self.contains_exact(v) {
            return Ok(true);
        }
        Ok(self.distance2_unchecked(v)?.sqrt() <= tol)
    }

    /// Exact membership without projecting, when the variant allows it.
    fn contains_exact(&self, v: &[f64]) -> bool {
        match &self.kind {
            SetKind::Orthant { .. } => v.iter().all(|x| *x >= 0.0),
            SetKind::Box { lower, upper } => v
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(x, (l, u))| l <= x && x <= u),
            SetKind::WeightedSlab { normal, half_width } => dot(normal, v).abs() <= *half_width,
            SetKind::WeightedL1Ball { weights, radius } => {
                weights.iter().zip(v).map(|(w, x)| w * x.abs()).sum::<f64>() <= *radius
            }
            SetKind::Product { factors } => {
                let mut start = 0;
                factors.iter().all(|f| {
                    let ok = f.contains_exact(&v[start..start + f.dim]);
                    start += f.dim;
                    ok
                })
            }
            SetKind::Intersection { members } => members.iter().all(|m| m.contains_exact(v)),
        }
    }

    /// Coordinate-wise bounding box, when the set is bounded in every coordinate.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.kind {
            SetKind::Orthant { .. } | SetKind::WeightedSlab { .. } => None,
            SetKind::Box { lower, upper } => Some((lower.clone(), upper.clone())),
            SetKind::WeightedL1Ball { weights, radius } => {
                let hi: Vec<f64> = weights.iter().map(|w| radius / w).collect();
                Some((hi.iter().map(|h| -h).collect(), hi))
            }
            SetKind::Product { factors } => {
                let mut lo = Vec::with_capacity(self.dim);
                let mut hi = Vec::with_capacity(self.dim);
                for f in factors {
                    let (l, h) = f.bounding_box()?;
                    lo.extend(l);
                    hi.extend(h);
                }
                Some((lo, hi))
            }
            SetKind::Intersection { members } => {
                let mut lo = vec![f64::NEG_INFINITY; self.dim];
                let mut hi = vec![f64::INFINITY; self.dim];
                for (l, h) in members.iter().filter_map(|m| m.bounding_box()) {
                    for i in 0..self.dim {
                        lo[i] = lo[i].max(l[i]);
                        hi[i] = hi[i].min(h[i]);
                    }
                }
                lo.iter().chain(&hi).all(|x| x.is_finite()).then_some((lo, hi))
            }
        }
    }
}

fn project_slab(normal: &[f64], half_width: f64, v: &[f64]) -> Vec<f64> {
    let t = dot(normal, v);
    if t.abs() <= half_width {
        return v.to_vec();
    }
    let excess = (t - half_width * t.signum()) / norm2(normal);
    v.iter().zip(normal).map(|(x, w)| x - excess * w).collect()
}

/// Soft-threshold with per-coordinate threshold `lambda * w_i`; `lambda` is
/// found by scanning the sorted breakpoints `|v_i| / w_i`.
fn project_weighted_l1(weights: &[f64], radius: f64, v: &[f64]) -> Vec<f64> {
    let mass: f64 = weights.iter().zip(v).map(|(w, x)| w * x.abs()).sum();
    if mass <= radius {
        return v.to_vec();
    }
    if radius == 0.0 {
        return vec![0.0; v.len()];
    }
    let mut order: Vec<usize> = (0..v.len()).collect();
    let bp = |i: usize| v[i].abs() / weights[i];
    order.sort_by(|&i, &j| bp(j).total_cmp(&bp(i)));
    let (mut s1, mut s2) = (0.0, 0.0);
    let mut lambda = 0.0;
    for (k, &i) in order.iter().enumerate() {
        s1 += weights[i] * v[i].abs();
        s2 += weights[i] * weights[i];
        lambda = (s1 - radius) / s2;
        let next = order.get(k + 1).map_or(0.0, |&j| bp(j));
        if lambda >= next {
            break;
        }
    }
    v.iter()
        .zip(weights)
        .map(|(x, w)| x.signum() * (x.abs() - lambda * w).max(0.0))
        .collect()
}

fn project_intersection(members: &[TargetSet], v: &[f64]) -> Result<Vec<f64>> {
    if members.len() == 1 {
        return members[0].project_unchecked(v);
    }
    // A member's projection that already lies in all the others is the answer.
    for (i, m) in members.iter().enumerate() {
        let p = m.project_unchecked(v)?;
        let mut inside = true;
        for (j, other) in members.iter().enumerate() {
            if j != i && !other.contains_exact(&p) {
                inside = false;
                break;
            }
        }
        if inside {
            return Ok(p);
        }
    }

    let n = members.len();
    let mut x = v.to_vec();
    let mut incr = vec![vec![0.0; v.len()]; n];
    let mut z = vec![0.0; v.len()];
    let mut residual = f64::INFINITY;
    for sweep in 1..=DYKSTRA_MAX_SWEEPS {
        // The iterate can stall long before the correction terms settle, so
        // both movements enter the stopping rule, scaled by the observed
        // contraction to bound the distance still to travel.
        let previous = residual;
        let mut moved = 0.0;
        for (m, y) in members.iter().zip(incr.iter_mut()) {
            for k in 0..x.len() {
                z[k] = x[k] + y[k];
            }
            let p = m.project_unchecked(&z)?;
            for k in 0..x.len() {
                let next = z[k] - p[k];
                moved += (next - y[k]).powi(2) + (p[k] - x[k]).powi(2);
                y[k] = next;
            }
            x = p;
        }
        residual = moved.sqrt();
        let rate = if previous.is_finite() && previous > 0.0 { (residual / previous).min(1.0 - 1e-12) } else { 0.0 };
        let floor = 1e-14 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max));
        if residual < DYKSTRA_TOL * (1.0 - rate) || residual < floor {
            let gap = members
                .iter()
                .map(|m| m.distance2_unchecked(&x).map(f64::sqrt))
                .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))?;
            if gap <= MEMBERSHIP_TOL {
                stats::record_sweeps(sweep as u64);
                return Ok(x);
            }
            if gap > INFEASIBILITY_TOL {
                // A stalled iterate outside some member means the members do not meet.
                stats::record_sweeps(sweep as u64);
                return Err(Error::NonConvergence { sweeps: sweep, residual: gap });
            }
        }
    }
    stats::record_sweeps(DYKSTRA_MAX_SWEEPS as u64);
    Err(Error::NonConvergence {
        sweeps: DYKSTRA_MAX_SWEEPS,
        residual,
    })
}

/// Monte-Carlo lower estimate of `sup_{a in A} d(a, B)`.
///
/// Points are drawn uniformly from a box twice the size of `A`'s bounding box
/// (or of `bbox` when given) and projected onto `A`, so boundary points and
/// vertices receive positive mass.
pub fn hausdorff_onesided<R: Rng + ?Sized>(
    a: &TargetSet,
    b: &TargetSet,
    n_samples: usize,
    rng: &mut R,
    bbox: Option<(&[f64], &[f64])>,
) -> Result<f64> {
    check_dim(a.dim, b.dim)?;
    let (lo, hi) = match bbox {
        Some((l, h)) => {
            check_dim(a.dim, l.len())?;
            check_dim(a.dim, h.len())?;
            (l.to_vec(), h.to_vec())
        }
        None => a
            .bounding_box()
            .ok_or_else(|| Error::Unbounded("set is unbounded; supply a sampling box".into()))?,
    };
    let mut best: f64 = 0.0;
    let mut point = vec![0.0; a.dim];
    for _ in 0..n_samples {
        for k in 0..a.dim {
            let (c, w) = (0.5 * (lo[k] + hi[k]), hi[k] - lo[k]);
            point[k] = c + w * (rng.random::<f64>() * 2.0 - 1.0);
        }
        let p = a.project_unchecked(&point)?;
        best = best.max(b.distance2_unchecked(&p)?.sqrt());
    }
    Ok(best)
}
