//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid configuration or arguments, 2 failure
//! while running.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aerosplit::config::{ConfigIssue, RunConfig};
use aerosplit::pipeline::{run, run_base_flow, split_file};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aerosplit", version, about = "Base flows, perturbation runs and acoustic/vortical splitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline described by a config file.
    Run {
        config: PathBuf,
        /// Write into this directory instead of the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config file without running it.
    Validate { config: PathBuf },
    /// Helmholtz-split a stored vector field into `<stem>.ua` and `<stem>.uv`.
    Split {
        field: PathBuf,
        /// Output directory; defaults to the field's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute and store only the base flow of a config.
    Baseflow {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const VALIDATION_FAILURE: u8 = 1;
const RUNTIME_FAILURE: u8 = 2;

fn load(path: &PathBuf, out: Option<PathBuf>) -> Result<RunConfig, ExitCode> {
    match RunConfig::load(path) {
        Ok(mut cfg) => {
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            Ok(cfg)
        }
        Err(issues) => {
            report_issues(path, &issues);
            Err(ExitCode::from(VALIDATION_FAILURE))
        }
    }
}

fn report_issues(path: &Path, issues: &[ConfigIssue]) {
    eprintln!("{}: {} problem(s)", path.display(), issues.len());
    for i in issues {
        eprintln!("  {i}");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { VALIDATION_FAILURE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Validate { config } => match load(&config, None) {
            Ok(_) => {
                println!("ok: {}", config.display());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run { config, out } => {
            let cfg = match load(&config, out) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match run(&cfg) {
                Ok(summary) => {
                    println!("{}", summary.dir.display());
                    println!("steps = {}", summary.steps);
                    println!("energy_drift_max = {:e}", summary.energy.max_abs_drift());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(RUNTIME_FAILURE)
                }
            }
        }
        Command::Baseflow { config, out } => {
            let cfg = match load(&config, out) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match run_base_flow(&cfg) {
                Ok(dir) => {
                    println!("{}", dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(RUNTIME_FAILURE)
                }
            }
        }
        Command::Split { field, out } => match split_file(&field, out.as_deref()) {
            Ok((stem, cert)) => {
                println!("{}.ua", stem.display());
                println!("{}.uv", stem.display());
                println!("curl_ua_rel = {:e}", cert.curl_relative());
                println!("div_uv_rel = {:e}", cert.div_relative());
                println!("recombination = {:e}", cert.recombination);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(RUNTIME_FAILURE)
            }
        },
    }
}
