mod config;
mod lab;
mod output;
mod suite;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use trajaccel::experiment::{build_operator, run_built};
use trajaccel::problems::gen_problem;
use trajaccel::Error;

use crate::config::{read_toml, ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "trajaccel", version, about = "Splitting solvers with trajectory diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver configuration and write its trace.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Trace CSV, overrides `output.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// SVG plot of log10 |v_k|, overrides `output.svg`.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Simulate a linear system and compare measured angles to the predictions.
    Lab {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a suite of solver configurations.
    Bench {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        outdir: PathBuf,
        /// Also write one SVG per run.
        #[arg(long)]
        plot: bool,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Divergence { .. }) => 3,
        Some(
            Error::InvalidConfig(_)
            | Error::InvalidProblem(_)
            | Error::InvalidInput(_)
            | Error::Parse { .. },
        ) => 2,
        _ => 1,
    }
}

fn cmd_run(config: PathBuf, out: Option<PathBuf>, plot: Option<PathBuf>) -> anyhow::Result<u8> {
    let cfg: RunConfig = read_toml(&config)?;
    let spec = cfg.problem.to_spec()?;
    let method = cfg.solver.method()?;
    let acc = cfg.acceleration.to_acceleration()?;
    let opts = cfg.run.options()?;
    let csv = out
        .or(cfg.output.csv.clone())
        .unwrap_or_else(|| PathBuf::from("trace.csv"));
    let svg = plot.or(cfg.output.svg.clone());

    let inst = gen_problem(&spec)?;
    let built = build_operator(method, &inst, &cfg.solver.params())?;
    let start = Instant::now();
    match run_built(&built, &acc, &opts) {
        Ok(res) => {
            let wall = start.elapsed().as_secs_f64();
            output::write_csv(&csv, &res.run.trace)?;
            if let Some(svg) = &svg {
                output::write_svg(svg, &[(res.accelerator.as_str(), &res.run.trace)])?;
            }
            println!(
                "method={} acceleration={} iterations={} converged={} final_residual={:.6e} wall_time={wall:.3}s",
                method.label(),
                res.accelerator,
                res.run.iterations,
                res.run.converged,
                res.run.final_residual()
            );
            Ok(0)
        }
        Err(Error::Divergence { k, norm, trace }) => {
            output::write_csv(&csv, &trace)?;
            if let Some(svg) = &svg {
                output::write_svg(svg, &[("diverged", &trace)])?;
            }
            eprintln!("error: iteration diverged at k = {k} (|z| = {norm:e}); partial trace written to {}", csv.display());
            Ok(3)
        }
        Err(e) => Err(e.into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, plot } => cmd_run(config, out, plot),
        Command::Lab { config, out } => lab::cmd_lab(&config, out),
        Command::Bench {
            suite,
            outdir,
            plot,
        } => suite::cmd_bench(&suite, &outdir, plot).context("bench failed"),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
