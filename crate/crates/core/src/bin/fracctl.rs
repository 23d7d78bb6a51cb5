use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use fracctl::cli::{
    run_simulate, run_sweep, run_synthesize, run_verify_kernels, ExperimentConfig, RunOutcome,
    DEFAULT_CONFIG, OUT_DIR_ENV,
};
use fracctl::Registries;

#[derive(Parser)]
#[command(name = "fracctl", version, about = "Fractional delay evolution equations: simulation and regularized control synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Uncontrolled trajectory to trajectory.csv
    Simulate(Common),
    /// Closed-loop control for the smallest beta to control.csv
    Synthesize(Common),
    /// Terminal residual against beta to sweep.csv
    Sweep(Common),
    /// Kernel and special-function self-checks to verify_kernels.csv
    VerifyKernels(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file (the shipped heat example when omitted)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides FRACCTL_OUT_DIR and the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override solver.n_steps
    #[arg(long)]
    steps: Option<usize>,
    /// Override control.betas, comma separated
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let text = match &self.config {
            Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            None => DEFAULT_CONFIG.to_string(),
        };
        let mut cfg = ExperimentConfig::parse(&text).context("parsing configuration")?;
        if let Some(n) = self.steps {
            cfg.solver.n_steps = n;
        }
        if let Some(b) = &self.beta {
            cfg.control.betas = b.clone();
        }
        cfg.validate().context("validating configuration")?;
        let out = self
            .out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
        Ok((cfg, out))
    }
}

fn run(cli: Cli) -> Result<RunOutcome> {
    let reg = Registries::builtin();
    let outcome = match &cli.command {
        Command::Simulate(c) => {
            let (cfg, out) = c.load()?;
            run_simulate(&cfg, &reg, &out)?
        }
        Command::Synthesize(c) => {
            let (cfg, out) = c.load()?;
            run_synthesize(&cfg, &reg, &out)?
        }
        Command::Sweep(c) => {
            let (cfg, out) = c.load()?;
            run_sweep(&cfg, &reg, &out)?
        }
        Command::VerifyKernels(c) => {
            let (cfg, out) = c.load()?;
            run_verify_kernels(&cfg, &out)?
        }
    };
    Ok(outcome)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(o) => {
            println!("{} ({})", o.summary, o.file.display());
            if o.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
