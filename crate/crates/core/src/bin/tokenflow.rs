use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tokenflow::harness::{self, exit_code, HarnessError, Overrides, RunOptions, PRESETS};
use tokenflow::{verify, Beta};

#[derive(Parser)]
#[command(name = "tokenflow", version, about = "Self-attention token dynamics on the sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named figure preset.
    RunPreset {
        name: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run an experiment described by a TOML config file.
    RunConfig {
        path: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// List the available presets.
    ListPresets,
    /// Run the fast invariant suite.
    Verify {
        #[arg(long)]
        quiet: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Run seed; only the initial tokens depend on it.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent runs.
    #[arg(long)]
    workers: Option<usize>,
    /// Euler step size.
    #[arg(long)]
    dt: Option<f64>,
    /// Inverse temperature; repeat for a sweep, "inf" for the zero-temperature flow.
    #[arg(long = "beta")]
    betas: Vec<Beta>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            workers: self.workers,
            dt: self.dt,
            betas: (!self.betas.is_empty()).then(|| self.betas.clone()),
        }
    }
}

fn report(result: Result<harness::RunSummary, HarnessError>, quiet: bool) -> ExitCode {
    match result {
        Ok(summary) => {
            if !quiet {
                eprintln!(
                    "wrote {} runs to {} in {:.1}s",
                    summary.runs.len(),
                    summary.output_dir.display(),
                    summary.wall_clock_seconds
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(exit_code::VALIDATION as u8) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::RunPreset { name, run } => {
            let opts = RunOptions { quiet: run.quiet };
            report(harness::run_preset(&name, &run.overrides(), &run.out, opts), run.quiet)
        }
        Command::RunConfig { path, run } => {
            let opts = RunOptions { quiet: run.quiet };
            report(harness::run_config(&path, &run.overrides(), &run.out, opts), run.quiet)
        }
        Command::ListPresets => {
            for p in PRESETS {
                println!("{:<18} {}", p.name, p.summary);
            }
            ExitCode::SUCCESS
        }
        Command::Verify { quiet } => {
            let checks = verify::run_all();
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                if !quiet || !c.passed {
                    let status = if c.passed { "PASS" } else { "FAIL" };
                    println!("{status}  {}  {}", c.name, c.detail);
                }
            }
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                eprintln!("{failed} of {} checks failed", checks.len());
                ExitCode::from(exit_code::RUNTIME as u8)
            }
        }
    }
}
