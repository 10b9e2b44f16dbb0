//! `debate`: run debates, acceptance experiments and exhaustive checks.
//!
//! Exit status is 0 on success, 1 when a check fails or a counterexample is
//! found, and 2 on a usage or config error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use debate_core::error::Error;
use debate_core::harness::{self, ExperimentConfig, Overrides, Report};
use debate_core::protocol::Mode;

const DEFAULT_OUT: &str = "debate-out";

#[derive(Parser, Debug)]
#[command(name = "debate", version, about = "Simulator and verification harness for debate protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Play one debate and print its record.
    RunDebate(Common),
    /// Estimate the acceptance probability of one strategy pair.
    Experiment(Common),
    /// Estimate acceptance for each member of an adversary family.
    Sweep(Common),
    /// Payoff matrix of A strategies against B strategies.
    Matrix(Common),
    /// Estimate the Lipschitz constant of a step program.
    Lipschitz(Common),
    /// Check the deterministic protocols on every small machine and oracle.
    CheckExhaustive(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Number of trials; overrides the config.
    #[arg(long, value_name = "N")]
    trials: Option<usize>,
    /// Protocol constants: paper or scaled.
    #[arg(long, value_name = "MODE", value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Output directory for CSV and JSON reports.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Print full message logs.
    #[arg(long)]
    trace: bool,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "paper" => Ok(Mode::PaperFaithful),
        "scaled" => Ok(Mode::Scaled),
        _ => Err(format!("expected paper or scaled, got `{s}`")),
    }
}

impl Common {
    fn load(&self) -> debate_core::Result<ExperimentConfig> {
        let overrides = Overrides { seed: self.seed, trials: self.trials, mode: self.mode, out: self.out.clone(), trace: self.trace };
        match &self.config {
            Some(path) => ExperimentConfig::load(path, &overrides),
            None => ExperimentConfig::parse("", std::path::Path::new("."), &overrides),
        }
    }
}

fn run(cli: Cli) -> debate_core::Result<Report> {
    let (common, command): (&Common, fn(&ExperimentConfig) -> debate_core::Result<Report>) = match &cli.command {
        Command::RunDebate(c) => (c, harness::run_debate_command),
        Command::Experiment(c) => (c, harness::experiment_command),
        Command::Sweep(c) => (c, harness::sweep_command),
        Command::Matrix(c) => (c, harness::matrix_command),
        Command::Lipschitz(c) => (c, harness::lipschitz_command),
        Command::CheckExhaustive(c) => (c, harness::check_exhaustive_command),
    };
    let cfg = common.load()?;
    let report = command(&cfg)?;
    print!("{}", report.summary);
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    report.write_to(&out)?;
    Ok(report)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(report) if report.failed => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e @ Error::CounterexampleFound { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
