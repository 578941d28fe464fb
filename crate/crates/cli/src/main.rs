use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thicknull::commands::{cmd_alpha_sweep, cmd_fit_prior, cmd_run, cmd_verify};
use thicknull::config::{Overrides, RunConfig};
use thicknull::verify::Widening;
use thicknull::CliError;

/// Simulation studies for thick (interval) null hypothesis tests.
#[derive(Parser)]
#[command(name = "thicknull", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `scenario.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `scenario.cases`.
    #[arg(long)]
    cases: Option<usize>,
    /// Overrides `output.dir`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads; does not change results.
    #[arg(long)]
    workers: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let overrides =
            Overrides { seed: self.seed, cases: self.cases, output: self.output.clone(), workers: self.workers };
        RunConfig::load(&self.config, &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and write the result tables.
    Run(RunArgs),
    /// Simulate once and re-threshold every method over a grid of alpha values.
    AlphaSweep(RunArgs),
    /// Fit truncated-normal and kernel-density priors to an effect-size file.
    FitPrior {
        #[arg(long)]
        effects: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lower: f64,
        #[arg(long, allow_hyphen_values = true)]
        upper: f64,
        /// Destination file; printed to stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Simulate and compare against reference cells; exits 1 on any mismatch.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        reference: PathBuf,
        /// Widen each tolerance to four binomial standard errors of its cell.
        #[arg(long)]
        binomial_tolerance: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Run(args) => {
            let cfg = args.load()?;
            let out = cmd_run(&cfg)?;
            for a in &out.artifacts {
                println!("{}", cfg.output_dir.join(&a.name).display());
            }
            Ok(0)
        }
        Command::AlphaSweep(args) => {
            let cfg = args.load()?;
            for a in cmd_alpha_sweep(&cfg)? {
                println!("{}", cfg.output_dir.join(&a.name).display());
            }
            Ok(0)
        }
        Command::FitPrior { effects, lower, upper, output } => {
            let fit = cmd_fit_prior(&effects, lower, upper, output.as_deref())?;
            match output {
                Some(path) => println!("{}", path.display()),
                None => print!("{}", fit.to_toml()),
            }
            Ok(0)
        }
        Command::Verify { run, reference, binomial_tolerance } => {
            let cfg = run.load()?;
            let widening = if binomial_tolerance { Widening::Binomial } else { Widening::None };
            let report = cmd_verify(&cfg, &reference, widening)?;
            print!("{}", report.render());
            Ok(if report.passed() { 0 } else { 1 })
        }
    }
}
