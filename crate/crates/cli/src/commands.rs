//! The four subcommands. Each returns the files it wrote.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use fairapp_core::condition::{check_condition_bruteforce, ConditionReport};
use fairapp_core::engine::Trajectory;
use fairapp_core::metrics::MetricPoint;
use fairapp_core::pareto::{frontier, frontier_csv, FrontierConfig, FrontierPoint};
use fairapp_core::stats::SolverStats;
use fairapp_core::strategy::PlayerSpec;

use crate::output::{resolve_out_dir, write_atomic, RunSummary};
use crate::spec::Experiment;
use crate::svg::{Band, Chart, Line};
use crate::Invalid;

/// Flags shared by the spec-driven commands.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub seed_override: Option<Vec<u64>>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    /// Default base directory, usually from the environment.
    pub default_out: Option<PathBuf>,
}

impl Options {
    fn out_dir(&self, exp: &Experiment) -> PathBuf {
        resolve_out_dir(
            self.out_dir.as_deref(),
            exp.spec.output_dir.as_deref(),
            self.default_out.as_deref(),
            &exp.spec.instance,
        )
    }

    fn seeds(&self, exp: &Experiment) -> Vec<u64> {
        self.seed_override.clone().unwrap_or_else(|| exp.spec.seeds.clone())
    }

    /// Runs `f` on a pool of the requested size, or the global pool.
    fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.workers {
            Some(0) => Err(Invalid("--workers must be at least 1".into()).into()),
            Some(n) => Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(f)),
            None => Ok(f()),
        }
    }
}

pub struct RunOutput {
    pub dir: PathBuf,
    pub summary: RunSummary,
    pub trajectories: Vec<Trajectory>,
}

/// Seed sweep: one CSV per seed plus `summary.json`.
pub fn cmd_run(spec_path: &Path, opts: &Options) -> Result<RunOutput> {
    let exp = Experiment::load(spec_path)?;
    run_experiment(&exp, opts)
}

pub fn run_experiment(exp: &Experiment, opts: &Options) -> Result<RunOutput> {
    let seeds = opts.seeds(exp);
    let dir = opts.out_dir(exp);
    let before = SolverStats::snapshot();
    let trajectories = opts.install(|| {
        seeds
            .par_iter()
            .map(|&s| exp.run_seed(s).with_context(|| format!("seed {s}")))
            .collect::<Result<Vec<_>>>()
    })??;
    let solver = SolverStats::since(before);
    for tr in &trajectories {
        write_atomic(&dir.join(format!("seed_{}.csv", tr.seed)), tr.to_csv().as_bytes())?;
    }
    let summary = RunSummary::new(&exp.spec.instance, exp.spec.mode, exp.spec.horizon, &trajectories, solver);
    write_atomic(&dir.join("summary.json"), format!("{}\n", serde_json::to_string_pretty(&summary)?).as_bytes())?;
    Ok(RunOutput { dir, summary, trajectories })
}

pub struct ParetoOutput {
    pub dir: PathBuf,
    pub points: Vec<FrontierPoint>,
}

/// Frontier sweep over the spec's tau grid: `frontier.csv` and `frontier.svg`.
pub fn cmd_pareto(spec_path: &Path, opts: &Options) -> Result<ParetoOutput> {
    let exp = Experiment::load(spec_path)?;
    let block = exp.spec.pareto.as_ref().ok_or_else(|| Invalid("pareto needs a `pareto` block with a tau grid".into()))?;
    if !matches!(exp.spec.player, PlayerSpec::ParetoOracleAware { .. } | PlayerSpec::ParetoOracleUnaware { .. }) {
        return Err(Invalid("pareto needs a pareto_oracle_aware or pareto_oracle_unaware player".into()).into());
    }
    let grid = exp.grid.ok_or_else(|| Invalid("pareto needs a calibration grid from the objectives".into()))?;
    let config = FrontierConfig {
        q: exp.q.clone(),
        grid,
        nature: exp.spec.nature.clone(),
        player: exp.spec.player.clone(),
        taus: block.taus.clone(),
        horizon: exp.spec.horizon,
        seeds: opts.seeds(&exp),
    };
    let points = opts.install(|| frontier(&config))??;
    let dir = opts.out_dir(&exp);
    write_atomic(&dir.join("frontier.csv"), frontier_csv(&points).as_bytes())?;
    write_atomic(&dir.join("frontier.svg"), frontier_chart(&exp.spec.instance, &points).render().as_bytes())?;
    Ok(ParetoOutput { dir, points })
}

fn frontier_chart(instance: &str, points: &[FrontierPoint]) -> Chart {
    let at = |f: fn(&FrontierPoint) -> f64| points.iter().map(|p| (p.delta, f(p))).collect::<Vec<_>>();
    Chart {
        title: format!("{instance}: group calibration vs parity budget"),
        x_label: "delta = tau TV".into(),
        y_label: "error".into(),
        log_x: false,
        lines: vec![
            Line { label: "GC measured".into(), points: at(|p| p.gc.mean), dashed: false },
            Line { label: "D measured".into(), points: at(|p| p.dp.mean), dashed: false },
            Line { label: "GC band low".into(), points: at(|p| p.band_lower), dashed: true },
            Line { label: "GC band high".into(), points: at(|p| p.band_upper), dashed: true },
        ],
        bands: vec![Band { label: "analytic band".into(), lower: at(|p| p.band_lower), upper: at(|p| p.band_upper) }],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutput {
    pub instance: String,
    pub reports: Vec<ConditionReport>,
}

impl CheckOutput {
    pub fn satisfied(&self) -> bool {
        self.reports.iter().all(|r| r.satisfied)
    }
}

/// Brute-force Blackwell-condition check at the spec's two resolutions.
pub fn cmd_check(spec_path: &Path, opts: &Options) -> Result<(PathBuf, CheckOutput)> {
    let exp = Experiment::load(spec_path)?;
    let block = exp.spec.check.as_ref().ok_or_else(|| Invalid("check needs a `check` block with two resolutions".into()))?;
    if block.resolutions.len() != 2 || block.resolutions.contains(&0) {
        return Err(Invalid("check.resolutions must list two positive resolutions".into()).into());
    }
    let reports = opts.install(|| {
        block
            .resolutions
            .iter()
            .map(|&r| {
                check_condition_bruteforce(&exp.pair.payoff, &exp.q, &exp.pair.target, exp.spec.monitoring, r)
                    .with_context(|| format!("resolution {r}"))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let out = CheckOutput { instance: exp.spec.instance.clone(), reports };
    let dir = opts.out_dir(&exp);
    write_atomic(&dir.join("check.json"), format!("{}\n", serde_json::to_string_pretty(&out)?).as_bytes())?;
    Ok((dir, out))
}

/// Parsed trajectory CSV: the `t` column and the metric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    pub t: Vec<u64>,
    pub columns: Vec<Vec<Option<f64>>>,
}

pub fn parse_metric_csv(text: &str, name: &str) -> Result<MetricTable> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Invalid(format!("{name}: empty CSV")))?;
    let expected = MetricPoint::COLUMNS.join(",");
    if header.trim() != expected {
        return Err(Invalid(format!("{name}: header `{header}` does not match `{expected}`")).into());
    }
    let mut table = MetricTable { t: Vec::new(), columns: vec![Vec::new(); MetricPoint::COLUMNS.len() - 1] };
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != MetricPoint::COLUMNS.len() {
            return Err(Invalid(format!("{name}: row {} has {} cells", i + 2, cells.len())).into());
        }
        let bad = |c: &str| Invalid(format!("{name}: row {}: `{c}` is not a number", i + 2));
        table.t.push(cells[0].trim().parse().map_err(|_| bad(cells[0]))?);
        for (col, c) in table.columns.iter_mut().zip(&cells[1..]) {
            let c = c.trim();
            col.push(if c.is_empty() { None } else { Some(c.parse().map_err(|_| bad(c))?) });
        }
    }
    if table.t.is_empty() {
        return Err(Invalid(format!("{name}: no data rows")).into());
    }
    Ok(table)
}

/// Log-x chart of the chosen columns. Several CSVs are aggregated into a
/// mean line with a min/max band; they must share their `t` grid.
pub fn cmd_plot(csvs: &[PathBuf], out: &Path, columns: &[String]) -> Result<()> {
    let svg = plot_svg(csvs, columns)?;
    write_atomic(out, svg.as_bytes())
}

pub fn plot_svg(csvs: &[PathBuf], columns: &[String]) -> Result<String> {
    if csvs.is_empty() {
        return Err(Invalid("plot needs at least one CSV".into()).into());
    }
    let tables = csvs
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_metric_csv(&text, &p.display().to_string())
        })
        .collect::<Result<Vec<_>>>()?;
    if tables.iter().any(|t| t.t != tables[0].t) {
        return Err(Invalid("CSVs to aggregate must share the same t column".into()).into());
    }
    let mut chart = Chart { title: "metrics".into(), x_label: "t".into(), y_label: "value".into(), log_x: true, ..Chart::default() };
    for name in columns {
        let idx = MetricPoint::COLUMNS[1..]
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Invalid(format!("unknown column `{name}`; expected one of {}", MetricPoint::COLUMNS[1..].join(", "))))?;
        let mut mean = Vec::new();
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for (row, &t) in tables[0].t.iter().enumerate() {
            let vals: Vec<f64> = tables.iter().filter_map(|tb| tb.columns[idx][row]).collect();
            if vals.is_empty() {
                continue;
            }
            let x = t as f64;
            mean.push((x, vals.iter().sum::<f64>() / vals.len() as f64));
            lo.push((x, vals.iter().copied().fold(f64::INFINITY, f64::min)));
            hi.push((x, vals.iter().copied().fold(f64::NEG_INFINITY, f64::max)));
        }
        if tables.len() > 1 {
            chart.bands.push(Band { label: format!("{name} min/max"), lower: lo, upper: hi });
            chart.lines.push(Line { label: format!("{name} mean"), points: mean, dashed: false });
        } else {
            chart.lines.push(Line { label: name.clone(), points: mean, dashed: false });
        }
    }
    Ok(chart.render())
}
