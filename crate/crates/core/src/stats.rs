//! Process-wide solver counters reported in run summaries, and compensated
//! running means.

use std::sync::atomic::{AtomicU64, Ordering};

static LP_CALLS: AtomicU64 = AtomicU64::new(0);
static DYKSTRA_SWEEPS: AtomicU64 = AtomicU64::new(0);

/// Snapshot of the solver counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SolverStats {
    pub lp_calls: u64,
    pub dykstra_sweeps: u64,
}

impl SolverStats {
    pub fn snapshot() -> Self {
        Self {
            lp_calls: LP_CALLS.load(Ordering::Relaxed),
            dykstra_sweeps: DYKSTRA_SWEEPS.load(Ordering::Relaxed),
        }
    }

    /// Counts accumulated since `earlier`.
    pub fn since(earlier: SolverStats) -> Self {
        let now = Self::snapshot();
        Self {
            lp_calls: now.lp_calls - earlier.lp_calls,
            dykstra_sweeps: now.dykstra_sweeps - earlier.dykstra_sweeps,
        }
    }
}

pub(crate) fn record_lp() {
    LP_CALLS.fetch_add(1, Ordering::Relaxed);
}

pub(crate) fn record_sweeps(n: u64) {
    DYKSTRA_SWEEPS.fetch_add(n, Ordering::Relaxed);
}

/// Neumaier-compensated vector sum with its count.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningMean {
    sum: Vec<f64>,
    comp: Vec<f64>,
    n: u64,
}

impl RunningMean {
    pub fn new(dim: usize) -> Self {
        Self { sum: vec![0.0; dim], comp: vec![0.0; dim], n: 0 }
    }

    pub fn push(&mut self, v: &[f64]) {
        debug_assert_eq!(v.len(), self.sum.len());
        for ((s, c), &x) in self.sum.iter_mut().zip(self.comp.iter_mut()).zip(v) {
            let t = *s + x;
            if s.abs() >= x.abs() {
                *c += (*s - t) + x;
            } else {
                *c += (x - t) + *s;
            }
            *s = t;
        }
        self.n += 1;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.sum.len()
    }

    pub fn total(&self) -> Vec<f64> {
        self.sum.iter().zip(&self.comp).map(|(s, c)| s + c).collect()
    }

    /// Average so far; zeros before the first push.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.n.max(1) as f64;
        self.total().into_iter().map(|v| v / n).collect()
    }
}

/// Mean, standard error, min and max of a sample of per-seed values.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    /// `None` on an empty sample. A single value has zero standard error.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self { mean, stderr, min, max })
    }
}
