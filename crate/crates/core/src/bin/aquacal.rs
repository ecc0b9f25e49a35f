use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aquacal::config::RunConfig;
use aquacal::pipeline;

#[derive(Parser)]
#[command(name = "aquacal", version, about = "Groundwater screening and calibration")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory; defaults to `[output] dir` in the configuration.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Worker threads for model evaluations.
    #[arg(long, short)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve once at the `[values]` of the configuration.
    Simulate(Common),
    /// Weekly and period-average recharge per sub-basin.
    Recharge(Common),
    /// Morris elementary-effects screening.
    Morris {
        #[command(flatten)]
        common: Common,
        /// Overrides `[morris] seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Brute force, Nelder-Mead refinement and uncertainty ranges.
    Calibrate(Common),
    /// Bundled synthetic scenario.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
}

#[derive(Subcommand)]
enum ScenarioCmd {
    /// Write the synthetic scenario and its configuration into a directory.
    Init {
        dir: PathBuf,
        /// Noise seed for the observed heads.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: Cli) -> aquacal::Result<()> {
    let load = |c: &Common| RunConfig::load(&c.config);
    match cli.command {
        Cmd::Simulate(c) => {
            let cfg = load(&c)?;
            let s = pipeline::with_jobs(c.jobs, || pipeline::cmd_simulate(&cfg, c.out.as_deref()))??;
            if let Some(q) = s.qoi {
                println!(
                    "rmse_h {:.4} m, h_pas {:.3} %, river flux {:.4e} m2/s",
                    q.rmse_h, q.h_pas, q.gw_flux_per_m
                );
            }
        }
        Cmd::Recharge(c) => {
            let cfg = load(&c)?;
            let s = pipeline::with_jobs(c.jobs, || pipeline::cmd_recharge(&cfg, c.out.as_deref()))??;
            for b in &s.basins {
                println!("{} {:.4e} m/s", b.basin, b.flux);
            }
        }
        Cmd::Morris { common: c, seed } => {
            let cfg = load(&c)?;
            let (_, s) = pipeline::with_jobs(c.jobs, || pipeline::cmd_morris(&cfg, c.out.as_deref(), seed))??;
            for r in &s.runs {
                println!("r = {}: {} trajectories evaluated, {} failed", r.r, r.r_effective, r.r_failed);
            }
        }
        Cmd::Calibrate(c) => {
            let cfg = load(&c)?;
            let s = pipeline::with_jobs(c.jobs, || pipeline::cmd_calibrate(&cfg, c.out.as_deref()))??;
            println!("nll {:.4}, sigma_h {:.4} m", s.best.nll, s.best.sigma_h);
            for r in &s.ranges {
                println!("{} {:.4e} [{:.4e}, {:.4e}]", r.parameter, r.optimum, r.final_low, r.final_high);
            }
        }
        Cmd::Scenario(ScenarioCmd::Init { dir, seed }) => {
            let cfg = pipeline::scenario_init(&dir, seed)?;
            println!("{}", cfg.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
