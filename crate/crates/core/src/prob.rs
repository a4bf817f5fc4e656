//! Finite probability primitives: mixed actions, joint context tables,
//! marginals and conditionals, total variation and seeded sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Validation tolerance on a probability vector after renormalization.
pub const PROB_TOL: f64 = 1e-12;
/// Inputs whose mass is within this distance of 1 are silently renormalized.
pub const RENORM_TOL: f64 = 1e-9;

fn normalize(mut weights: Vec<f64>) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::InvalidDistribution("empty weight vector".into()));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidDistribution(format!("weight {w} is not a probability")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > RENORM_TOL {
        return Err(Error::InvalidDistribution(format!("weights sum to {sum}, not 1")));
    }
    if sum != 1.0 {
        weights.iter_mut().for_each(|w| *w /= sum);
    }
    Ok(weights)
}

/// Anything that is a probability vector with a (rows, cols) shape.
pub trait Distribution {
    fn shape(&self) -> (usize, usize);
    fn probs(&self) -> &[f64];
}

/// Total variation distance, half the l1 distance of two same-shaped laws.
pub fn tv_distance<D: Distribution + ?Sized>(p: &D, q: &D) -> Result<f64> {
    let (sp, sq) = (p.shape(), q.shape());
    if sp != sq {
        return Err(Error::Dimension {
            expected: sp.0 * sp.1,
            got: sq.0 * sq.1,
        });
    }
    Ok(half_l1(p.probs(), q.probs()))
}

pub(crate) fn half_l1(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Draw an index from a probability vector by inversion. Rounding slack in
/// the last bucket falls back to the last positive weight.
pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Probability vector over an indexed finite set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixedAction {
    weights: Vec<f64>,
}

impl TryFrom<Vec<f64>> for MixedAction {
    type Error = Error;
    fn try_from(w: Vec<f64>) -> Result<Self> {
        MixedAction::new(w)
    }
}

impl From<MixedAction> for Vec<f64> {
    fn from(p: MixedAction) -> Self {
        p.weights
    }
}

impl MixedAction {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Ok(Self { weights: normalize(weights)? })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n >= 1, "uniform over an empty set");
        Self { weights: vec![1.0 / n as f64; n] }
    }

    pub fn dirac(n: usize, i: usize) -> Self {
        assert!(i < n, "dirac index {i} out of range {n}");
        let mut weights = vec![0.0; n];
        weights[i] = 1.0;
        Self { weights }
    }

    /// `(1 - t) * self + t * other`.
    pub fn mix(&self, other: &MixedAction, t: f64) -> Result<Self> {
        check_dim(self.len(), other.len())?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!("mixing weight {t} outside [0,1]")));
        }
        Self::new(
            self.weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect(),
        )
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Expectation of a function given by its values.
    pub fn expect(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Index of the unique atom, if this is a point mass.
    pub fn as_dirac(&self) -> Option<usize> {
        let i = self.weights.iter().position(|&w| w == 1.0)?;
        Some(i)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.weights, rng)
    }
}

impl Distribution for MixedAction {
    fn shape(&self) -> (usize, usize) {
        (self.weights.len(), 1)
    }
    fn probs(&self) -> &[f64] {
        &self.weights
    }
}

/// Labelled non-sensitive contexts plus the number of sensitive groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ContextSpaceRepr", into = "ContextSpaceRepr")]
pub struct ContextSpace {
    x_labels: Vec<String>,
    n_sensitive: usize,
}

#[derive(Serialize, Deserialize)]
struct ContextSpaceRepr {
    x_labels: Vec<String>,
    n_sensitive: usize,
}

impl TryFrom<ContextSpaceRepr> for ContextSpace {
    type Error = Error;
    fn try_from(r: ContextSpaceRepr) -> Result<Self> {
        ContextSpace::new(r.x_labels, r.n_sensitive)
    }
}

impl From<ContextSpace> for ContextSpaceRepr {
    fn from(c: ContextSpace) -> Self {
        Self { x_labels: c.x_labels, n_sensitive: c.n_sensitive }
    }
}

impl ContextSpace {
    pub fn new(x_labels: Vec<String>, n_sensitive: usize) -> Result<Self> {
        if x_labels.is_empty() || n_sensitive == 0 {
            return Err(Error::InvalidParameter("context space needs |X| >= 1 and |S| >= 1".into()));
        }
        let mut sorted = x_labels.clone();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!("duplicate context label `{}`", w[0])));
        }
        Ok(Self { x_labels, n_sensitive })
    }

    /// Contexts labelled `x0, x1, ...`.
    pub fn indexed(n_x: usize, n_sensitive: usize) -> Result<Self> {
        Self::new((0..n_x).map(|i| format!("x{i}")).collect(), n_sensitive)
    }

    pub fn n_x(&self) -> usize {
        self.x_labels.len()
    }

    pub fn n_s(&self) -> usize {
        self.n_sensitive
    }

    pub fn labels(&self) -> &[String] {
        &self.x_labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.x_labels.iter().position(|l| l == label)
    }
}

/// Joint law of `(x, s)`, stored row-major as `q[x][s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    space: ContextSpace,
    table: Vec<f64>,
}

impl JointDistribution {
    pub fn new(space: ContextSpace, rows: Vec<Vec<f64>>) -> Result<Self> {
        check_dim(space.n_x(), rows.len())?;
        for r in &rows {
            check_dim(space.n_s(), r.len())?;
        }
        Self::from_flat(space, rows.into_iter().flatten().collect())
    }

    pub fn from_flat(space: ContextSpace, table: Vec<f64>) -> Result<Self> {
        check_dim(space.n_x() * space.n_s(), table.len())?;
        Ok(Self { table: normalize(table)?, space })
    }

    /// Independent product of an `x` marginal and a `s` marginal.
    pub fn product(space: ContextSpace, px: &[f64], ps: &[f64]) -> Result<Self> {
        check_dim(space.n_x(), px.len())?;
        check_dim(space.n_s(), ps.len())?;
        let table = px.iter().flat_map(|a| ps.iter().map(move |b| a * b)).collect();
        Self::from_flat(space, table)
    }

    /// Build from the group weights and per-group conditionals over `X`.
    pub fn from_conditionals(space: ContextSpace, gammas: &[f64], conditionals: &[Vec<f64>]) -> Result<Self> {
        check_dim(space.n_s(), gammas.len())?;
        check_dim(space.n_s(), conditionals.len())?;
        let n_x = space.n_x();
        let mut table = vec![0.0; n_x * space.n_s()];
        for (s, (g, c)) in gammas.iter().zip(conditionals).enumerate() {
            check_dim(n_x, c.len())?;
            for x in 0..n_x {
                table[x * space.n_s() + s] = g * c[x];
            }
        }
        Self::from_flat(space, table)
    }

    pub fn space(&self) -> &ContextSpace {
        &self.space
    }

    pub fn n_x(&self) -> usize {
        self.space.n_x()
    }

    pub fn n_s(&self) -> usize {
        self.space.n_s()
    }

    pub fn prob(&self, x: usize, s: usize) -> f64 {
        self.table[x * self.n_s() + s]
    }

    /// Row `q[x][.]`.
    pub fn row(&self, x: usize) -> &[f64] {
        let n_s = self.n_s();
        &self.table[x * n_s..(x + 1) * n_s]
    }

    pub fn marginal_gamma(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.n_s()];
        for x in 0..self.n_x() {
            for (s, gs) in g.iter_mut().enumerate() {
                *gs += self.prob(x, s);
            }
        }
        g
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        (0..self.n_x()).map(|x| self.row(x).iter().sum()).collect()
    }

    pub fn conditional_given_s(&self, s: usize) -> Result<MixedAction> {
        if s >= self.n_s() {
            return Err(Error::IndexOutOfRange { index: s, size: self.n_s() });
        }
        let gamma: f64 = (0..self.n_x()).map(|x| self.prob(x, s)).sum();
        if gamma <= 0.0 {
            return Err(Error::DegenerateGroup(s));
        }
        MixedAction::new((0..self.n_x()).map(|x| self.prob(x, s) / gamma).collect())
    }

    /// Total variation between the two group conditionals.
    pub fn group_tv(&self) -> Result<f64> {
        if self.n_s() != 2 {
            return Err(Error::UnsupportedCardinality(format!("group TV needs |S| = 2, got {}", self.n_s())));
        }
        tv_distance(&self.conditional_given_s(0)?, &self.conditional_given_s(1)?)
    }

    /// Draw `(x, s)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let i = sample_index(&self.table, rng);
        (i / self.n_s(), i % self.n_s())
    }

    pub fn to_triples(&self) -> Vec<(String, usize, f64)> {
        let mut out = Vec::new();
        for (x, label) in self.space.labels().iter().enumerate() {
            for s in 0..self.n_s() {
                out.push((label.clone(), s, self.prob(x, s)));
            }
        }
        out
    }

    /// Build from `(x_label, s, probability)` triples; absent cells are zero.
    pub fn from_triples(space: ContextSpace, triples: &[(String, usize, f64)]) -> Result<Self> {
        let mut table = vec![0.0; space.n_x() * space.n_s()];
        let mut seen = vec![false; table.len()];
        for (label, s, p) in triples {
            let x = space
                .index_of(label)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown context label `{label}`")))?;
            if *s >= space.n_s() {
                return Err(Error::IndexOutOfRange { index: *s, size: space.n_s() });
            }
            let i = x * space.n_s() + s;
            if seen[i] {
                return Err(Error::InvalidParameter(format!("duplicate cell ({label}, {s})")));
            }
            seen[i] = true;
            table[i] = *p;
        }
        Self::from_flat(space, table)
    }
}

impl Distribution for JointDistribution {
    fn shape(&self) -> (usize, usize) {
        (self.n_x(), self.n_s())
    }
    fn probs(&self) -> &[f64] {
        &self.table
    }
}

/// Config block for a joint distribution: labels plus decimal-string triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointConfig {
    pub x_labels: Vec<String>,
    pub n_sensitive: usize,
    pub cells: Vec<CellConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub x: String,
    pub s: usize,
    #[serde(with = "crate::decimal")]
    pub p: f64,
}

impl TryFrom<&JointConfig> for JointDistribution {
    type Error = Error;
    fn try_from(c: &JointConfig) -> Result<Self> {
        let space = ContextSpace::new(c.x_labels.clone(), c.n_sensitive)?;
        let triples: Vec<_> = c.cells.iter().map(|cell| (cell.x.clone(), cell.s, cell.p)).collect();
        JointDistribution::from_triples(space, &triples)
    }
}

impl From<&JointDistribution> for JointConfig {
    fn from(q: &JointDistribution) -> Self {
        Self {
            x_labels: q.space.labels().to_vec(),
            n_sensitive: q.n_s(),
            cells: q
                .to_triples()
                .into_iter()
                .map(|(x, s, p)| CellConfig { x, s, p })
                .collect(),
        }
    }
}

/// Split of `X` by which group conditional density dominates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityPartition {
    /// `g0(x) > g1(x)`.
    pub x0: Vec<usize>,
    /// `g1(x) > g0(x)`.
    pub x1: Vec<usize>,
    /// `g0(x) == g1(x)` within tolerance, including points outside both supports.
    pub x_eq: Vec<usize>,
}

impl DensityPartition {
    pub fn of(q: &JointDistribution) -> Result<Self> {
        let g0 = q.conditional_given_s(0)?;
        let g1 = q.conditional_given_s(1)?;
        let mut part = Self { x0: vec![], x1: vec![], x_eq: vec![] };
        for x in 0..q.n_x() {
            let (a, b) = (g0.get(x), g1.get(x));
            if (a - b).abs() <= PROB_TOL {
                part.x_eq.push(x);
            } else if a > b {
                part.x0.push(x);
            } else {
                part.x1.push(x);
            }
        }
        Ok(part)
    }

    pub fn in_x0(&self, x: usize) -> bool {
        self.x0.contains(&x)
    }
}
