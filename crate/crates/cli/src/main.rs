use std::path::PathBuf;
use std::process::ExitCode;

use cgolab::harness::{self, ExperimentConfig, RunManifest};
use cgolab::LabError;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cgolab", version, about = "CGO solutions, estimate checks and coefficient recovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the estimate registry (all checks unless filtered with --check).
    VerifyEstimates {
        #[command(flatten)]
        common: Common,
        /// Check name; repeat to run several.
        #[arg(long = "check")]
        checks: Vec<String>,
    },
    /// Decay of the CGO remainder along the h-sweep, fixed and selected angles.
    CgoDecay(Common),
    /// Averaged-norm slope and good-angle selection per frame.
    AveragingSlope(Common),
    /// Single-frequency recovery of the scalar coefficient difference.
    Recover(Common),
    /// Band-limited field reconstruction over a frequency box.
    Reconstruct(Common),
    /// Print the default configuration.
    DefaultConfig,
    /// List the registered estimate checks.
    ListChecks,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, LabError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(j) = self.jobs {
            cfg.jobs = Some(j);
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Errors caused by the invocation rather than by the experiment.
fn is_usage(e: &LabError) -> bool {
    matches!(
        e,
        LabError::Config(_)
            | LabError::UnknownCheck(_)
            | LabError::Underdetermined { .. }
            | LabError::InvalidGrid(_)
            | LabError::InvalidCutoff(_)
            | LabError::Coefficient { .. }
            | LabError::WindowViolation(_)
            | LabError::Json(_)
    )
}

fn run(common: &Common, checks: Option<Vec<String>>, f: fn(&ExperimentConfig) -> cgolab::Result<RunManifest>) -> ExitCode {
    let mut cfg = match common.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(c) = checks {
        if !c.is_empty() {
            cfg.checks = c;
        }
    }
    if let Some(j) = cfg.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("warning: thread pool: {e}");
        }
    }
    match f(&cfg) {
        Ok(m) => {
            for a in &m.artifacts {
                println!("{}  {}", a.sha256, cfg.out.join(&a.path).display());
            }
            for fail in &m.failures {
                eprintln!("FAIL {fail}");
            }
            println!("{}: {}", m.command, if m.pass { "pass" } else { "FAIL" });
            ExitCode::from(if m.pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_usage(&e) { 2 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::VerifyEstimates { common, checks } => run(&common, Some(checks), harness::cmd_verify_estimates),
        Command::CgoDecay(c) => run(&c, None, harness::cmd_cgo_decay),
        Command::AveragingSlope(c) => run(&c, None, harness::cmd_averaging_slope),
        Command::Recover(c) => run(&c, None, harness::cmd_recover),
        Command::Reconstruct(c) => run(&c, None, harness::cmd_reconstruct),
        Command::DefaultConfig => {
            println!("{}", ExperimentConfig::default().to_json());
            ExitCode::SUCCESS
        }
        Command::ListChecks => {
            for (name, anchor) in cgolab::estimates::list_checks() {
                println!("{name:12} {anchor}");
            }
            ExitCode::SUCCESS
        }
    }
}
