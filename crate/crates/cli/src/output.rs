//! Atomic file output and run summaries.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use fairapp_core::engine::Trajectory;
use fairapp_core::metrics::MetricPoint;
use fairapp_core::objectives::KnowledgeMode;
use fairapp_core::stats::{SolverStats, Summary};

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().context("output path has no file name")?.to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))
}

/// Frozen summary layout of a seed sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub instance: String,
    pub mode: KnowledgeMode,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    /// Final value of each metric column across seeds; columns undefined on
    /// every seed are omitted.
    pub metrics: BTreeMap<String, Summary>,
    pub solver: SolverStats,
}

impl RunSummary {
    pub fn new(instance: &str, mode: KnowledgeMode, horizon: u64, trajectories: &[Trajectory], solver: SolverStats) -> Self {
        let mut metrics = BTreeMap::new();
        for col in MetricPoint::COLUMNS.iter().skip(1) {
            let vals: Vec<f64> = trajectories.iter().filter_map(|t| t.last().and_then(|p| p.get(col))).collect();
            if let Some(s) = Summary::of(&vals) {
                metrics.insert(col.to_string(), s);
            }
        }
        Self {
            instance: instance.to_string(),
            mode,
            horizon,
            seeds: trajectories.iter().map(|t| t.seed).collect(),
            metrics,
            solver,
        }
    }
}

/// Output directory: the flag wins, then the spec, then the environment
/// default (or `out`) joined with the instance name.
pub fn resolve_out_dir(flag: Option<&Path>, spec: Option<&Path>, env_default: Option<&Path>, instance: &str) -> PathBuf {
    flag.or(spec)
        .map(Path::to_path_buf)
        .unwrap_or_else(|| env_default.unwrap_or(Path::new("out")).join(instance))
}
