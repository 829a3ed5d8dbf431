use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use dasee::harness::{
    parse_strategies, run_convergence_trace, run_rate_sweep, run_rau_sweep, summarize, write_records, write_summary,
    write_trace, ExperimentConfig, Problem,
};

/// Energy-efficient transmit design for distributed antenna systems.
#[derive(Parser, Debug)]
#[command(name = "dasee", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte-Carlo sweep over rate floors at a fixed RAU count.
    RateSweep(SweepArgs),
    /// Monte-Carlo sweep over RAU counts.
    RauSweep(SweepArgs),
    /// Per-iteration convergence series with every RAU on.
    Trace(TraceArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Override the number of draws.
    #[arg(long)]
    draws: Option<usize>,
    /// Comma separated: distance,norm,exhaustive,all-on-ee,all-on-se,cas
    #[arg(long)]
    strategies: Option<String>,
    /// Also write per-strategy means to this CSV.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Append a wall_time_s column (output is then not reproducible).
    #[arg(long)]
    wall_time: bool,
}

#[derive(Args, Debug)]
struct TraceArgs {
    #[command(flatten)]
    common: Common,
    /// p1, p2 or p3.
    #[arg(long, default_value = "p1")]
    problem: String,
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::from_file(p).with_context(|| format!("reading config {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn sweep(args: &SweepArgs, rau: bool) -> Result<()> {
    let mut cfg = load(&args.common)?;
    if let Some(d) = args.draws {
        cfg.num_draws = d;
    }
    if let Some(s) = &args.strategies {
        cfg.strategies = parse_strategies(s)?;
    }
    let records = if rau {
        run_rau_sweep(&cfg)?
    } else {
        run_rate_sweep(&cfg)?
    };
    write_records(output(&args.common.out)?, &records, args.wall_time)?;
    if let Some(p) = &args.summary {
        let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
        write_summary(BufWriter::new(f), &summarize(&records))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::RateSweep(a) => sweep(&a, false),
        Command::RauSweep(a) => sweep(&a, true),
        Command::Trace(a) => {
            let cfg = load(&a.common)?;
            let problem: Problem = a.problem.parse()?;
            let points = run_convergence_trace(&cfg, problem)?;
            write_trace(output(&a.common.out)?, &points)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dasee: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
