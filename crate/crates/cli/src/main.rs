use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use fairapp_cli::commands::{cmd_check, cmd_pareto, cmd_plot, cmd_run, Options};
use fairapp_cli::{exit, exit_code};

#[derive(Parser)]
#[command(name = "fairapp", version, about = "Fair online learning experiments via approachability")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment spec (JSON).
    spec: PathBuf,
    /// Replace the spec's seed list (comma separated).
    #[arg(long, value_delimiter = ',')]
    seed_override: Option<Vec<u64>>,
    /// Worker threads for seed and tau fan-out.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory, overriding the spec.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Base directory when neither the flag nor the spec sets one.
    #[arg(long, env = "FAIRAPP_OUT_DIR", hide = true)]
    default_out: Option<PathBuf>,
}

impl Common {
    fn options(&self) -> Options {
        Options {
            seed_override: self.seed_override.clone(),
            workers: self.workers,
            out_dir: self.out_dir.clone(),
            default_out: self.default_out.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Seed sweep: per-seed trajectory CSVs and a summary.
    Run(Common),
    /// Frontier sweep over the spec's tau grid.
    Pareto(Common),
    /// Brute-force check of the Blackwell condition at two resolutions.
    Check(Common),
    /// Log-x line chart of trajectory CSVs.
    Plot {
        #[arg(required = true)]
        csvs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Metric columns to draw.
        #[arg(long, value_delimiter = ',', default_value = "d_t")]
        columns: Vec<String>,
    },
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(c) => {
            let out = cmd_run(&c.spec, &c.options())?;
            for (name, s) in &out.summary.metrics {
                println!("{name}: mean {:.6} stderr {:.2e} min {:.6} max {:.6}", s.mean, s.stderr, s.min, s.max);
            }
            println!("wrote {}", out.dir.display());
        }
        Command::Pareto(c) => {
            let out = cmd_pareto(&c.spec, &c.options())?;
            for p in &out.points {
                println!(
                    "tau {:.3} delta {:.3}: GC {:.4} (band {:.4}..{:.4}), D {:.4}",
                    p.tau, p.delta, p.gc.mean, p.band_lower, p.band_upper, p.dp.mean
                );
            }
            println!("wrote {}", out.dir.display());
        }
        Command::Check(c) => {
            let (dir, out) = cmd_check(&c.spec, &c.options())?;
            for r in &out.reports {
                let verdict = if r.satisfied { "satisfied" } else { "violated" };
                println!("resolution {}: {verdict}, inner distance {:.6}, {} grid points", r.resolution, r.inner_distance, r.grid_points);
                if !r.satisfied {
                    let fam: Vec<String> = r.worst_family.iter().map(|q| format!("{:?}", q.weights())).collect();
                    println!("  worst Nature family: {}", fam.join(" "));
                }
            }
            println!("wrote {}", dir.display());
        }
        Command::Plot { csvs, out, columns } => {
            cmd_plot(&csvs, &out, &columns)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
