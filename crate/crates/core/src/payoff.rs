//! Dense vector payoffs `m(a, b, x, s)`, scalar reward tensors and the
//! calibration forecast grid.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::prob::MixedAction;

/// Cardinalities of the Player actions, Nature actions, contexts and groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub n_a: usize,
    pub n_b: usize,
    pub n_x: usize,
    pub n_s: usize,
}

impl Shape {
    pub fn new(n_a: usize, n_b: usize, n_x: usize, n_s: usize) -> Result<Self> {
        if n_a == 0 || n_b == 0 || n_x == 0 || n_s == 0 {
            return Err(Error::InvalidParameter("every action and context set must be nonempty".into()));
        }
        Ok(Self { n_a, n_b, n_x, n_s })
    }

    pub fn cells(&self) -> usize {
        self.n_a * self.n_b * self.n_x * self.n_s
    }

    fn index(&self, a: usize, b: usize, x: usize, s: usize) -> usize {
        debug_assert!(a < self.n_a && b < self.n_b && x < self.n_x && s < self.n_s);
        ((a * self.n_b + b) * self.n_x + x) * self.n_s + s
    }
}

/// Vector payoff tensor with its cached bound `max ||m(a,b,x,s)||_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffTensor {
    shape: Shape,
    dim: usize,
    data: Vec<f64>,
    bound: f64,
}

impl PayoffTensor {
    pub fn from_fn<F>(shape: Shape, dim: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize, usize, usize, &mut [f64]),
    {
        if dim == 0 {
            return Err(Error::InvalidParameter("payoff dimension must be >= 1".into()));
        }
        let mut data = vec![0.0; shape.cells() * dim];
        for a in 0..shape.n_a {
            for b in 0..shape.n_b {
                for x in 0..shape.n_x {
                    for s in 0..shape.n_s {
                        let i = shape.index(a, b, x, s) * dim;
                        f(a, b, x, s, &mut data[i..i + dim]);
                    }
                }
            }
        }
        Self::from_data(shape, dim, data)
    }

    fn from_data(shape: Shape, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("payoff entries must be finite".into()));
        }
        let bound = data
            .chunks(dim)
            .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        Ok(Self { shape, dim, data, bound })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cached `max_{a,b,x,s} ||m(a,b,x,s)||_2`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn entry(&self, a: usize, b: usize, x: usize, s: usize) -> &[f64] {
        let i = self.shape.index(a, b, x, s) * self.dim;
        &self.data[i..i + self.dim]
    }

    /// `<d, m(a, b, x, s)>`.
    pub fn dot(&self, a: usize, b: usize, x: usize, s: usize, d: &[f64]) -> f64 {
        self.entry(a, b, x, s).iter().zip(d).map(|(m, v)| m * v).sum()
    }

    /// Bilinear extension `m(p, q, x, s)`.
    pub fn mixed(&self, p: &MixedAction, q: &MixedAction, x: usize, s: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (a, &pa) in p.weights().iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            for (b, &qb) in q.weights().iter().enumerate() {
                let w = pa * qb;
                if w != 0.0 {
                    for (o, m) in out.iter_mut().zip(self.entry(a, b, x, s)) {
                        *o += w * m;
                    }
                }
            }
        }
        out
    }

    /// Coordinate-wise concatenation of tensors over the same spaces.
    pub fn concat(parts: &[&PayoffTensor]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidParameter("nothing to concatenate".into()))?;
        let shape = first.shape;
        if parts.iter().any(|p| p.shape != shape) {
            return Err(Error::InvalidParameter("payoffs are defined over different action or context spaces".into()));
        }
        let dim: usize = parts.iter().map(|p| p.dim).sum();
        let mut data = Vec::with_capacity(shape.cells() * dim);
        for cell in 0..shape.cells() {
            for p in parts {
                data.extend_from_slice(&p.data[cell * p.dim..(cell + 1) * p.dim]);
            }
        }
        Self::from_data(shape, dim, data)
    }
}

/// Scalar reward `r(a, b, x, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardTensor {
    shape: Shape,
    data: Vec<f64>,
}

impl RewardTensor {
    pub fn from_fn<F>(shape: Shape, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize, usize, usize) -> f64,
    {
        let mut data = vec![0.0; shape.cells()];
        for a in 0..shape.n_a {
            for b in 0..shape.n_b {
                for x in 0..shape.n_x {
                    for s in 0..shape.n_s {
                        data[shape.index(a, b, x, s)] = f(a, b, x, s);
                    }
                }
            }
        }
        Self::from_flat(shape, data)
    }

    /// Row-major `[a][b][x][s]` values.
    pub fn from_flat(shape: Shape, data: Vec<f64>) -> Result<Self> {
        check_dim(shape.cells(), data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("rewards must be finite".into()));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn get(&self, a: usize, b: usize, x: usize, s: usize) -> f64 {
        self.data[self.shape.index(a, b, x, s)]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }
}

/// Forecast levels `(k + 1/2) / N` for `k = 0..N` (zero-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct CalibrationGrid {
    n: usize,
}

impl TryFrom<usize> for CalibrationGrid {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        CalibrationGrid::new(n)
    }
}

impl From<CalibrationGrid> for usize {
    fn from(g: CalibrationGrid) -> usize {
        g.n
    }
}

impl CalibrationGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("calibration grid needs N >= 2, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn level(&self, k: usize) -> f64 {
        (k as f64 + 0.5) / self.n as f64
    }

    pub fn levels(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.level(k)).collect()
    }

    /// Index of the nearest level; exact midpoints go to the smaller level.
    pub fn round(&self, p: f64) -> usize {
        let k = (p * self.n as f64).ceil() - 1.0;
        k.clamp(0.0, (self.n - 1) as f64) as usize
    }
}
