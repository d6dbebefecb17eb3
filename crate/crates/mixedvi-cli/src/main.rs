//! Command-line front end: declarative TOML runs of the contact-problem
//! solver, its verification checks, data-convergence studies and parameter
//! optimization.
//!
//! Exit codes: 0 success, 1 configuration problem, 2 solver non-convergence
//! or numerical failure, 3 failed verification assertion.

mod config;
mod tasks;

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "mixedvi",
    version,
    about = "Finite-element solver and verification harness for a frictional contact problem"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, default_value = "run.toml")]
    config: PathBuf,
    /// Artifact directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Seed override for randomized verification utilities.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// One forward solve; writes the solution fields and diagnostics.
    Solve,
    /// Energy-minimization oracle solve of the same instance.
    Oracle,
    /// Forward solve plus bound, feasibility, complementarity and
    /// inequality checks.
    Verify,
    /// Data-perturbation convergence study.
    Converge,
    /// Parameter optimization over the configured admissible set.
    Optimize,
    /// Check the configuration and list every violated constraint.
    Validate,
}

impl Command {
    fn task_kind(&self) -> Option<&'static str> {
        match self {
            Command::Solve => Some("solve"),
            Command::Oracle => Some("oracle"),
            Command::Verify => Some("verify"),
            Command::Converge => Some("converge"),
            Command::Optimize => Some("optimize"),
            Command::Validate => None,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(real_main(&cli));
}

fn real_main(cli: &Cli) -> i32 {
    if let Err(msg) = init_threads() {
        eprintln!("{msg}");
        return 1;
    }

    let cfg = match config::parse_file(&cli.config) {
        Ok(c) => c,
        Err(problems) => {
            for p in &problems {
                // The validate command reports on stdout; everything else
                // treats an unparseable config as an error.
                if matches!(cli.command, Command::Validate) {
                    println!("{p}");
                } else {
                    eprintln!("{p}");
                }
            }
            return 1;
        }
    };

    let Some(kind) = cli.command.task_kind() else {
        let problems = config::violations(&cfg);
        if problems.is_empty() {
            if !cli.quiet {
                println!("configuration valid");
            }
            return 0;
        }
        for p in &problems {
            println!("{p}");
        }
        return 1;
    };

    if cfg.task.kind != kind {
        eprintln!(
            "task.kind = {:?} does not match the requested command {kind:?}",
            cfg.task.kind
        );
        return 1;
    }

    let run = match config::realize(&cfg, cli.seed, cli.out.as_deref()) {
        Ok(r) => r,
        Err(problems) => {
            for p in &problems {
                eprintln!("{p}");
            }
            return 1;
        }
    };

    match tasks::execute(&run) {
        Err(e) => {
            for line in e.lines() {
                eprintln!("{line}");
            }
            e.code()
        }
        Ok(out) => {
            if let Err(e) = write_artifacts(&run.out_dir, &out.artifacts, cli.quiet) {
                eprintln!("cannot write artifacts under {}: {e}", run.out_dir);
                return 1;
            }
            if !cli.quiet {
                for line in &out.summary {
                    println!("{line}");
                }
            }
            match out.failure {
                None => 0,
                Some(f) => {
                    for line in f.lines() {
                        eprintln!("{line}");
                    }
                    f.code()
                }
            }
        }
    }
}

/// Applies the `MIXEDVI_THREADS` cap on parallel forward solves.
fn init_threads() -> Result<(), String> {
    let raw = match std::env::var("MIXEDVI_THREADS") {
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(format!("MIXEDVI_THREADS is not readable: {e}")),
        Ok(s) => s,
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("MIXEDVI_THREADS = {raw:?} invalid: expected a positive integer"))?;
    if n == 0 {
        return Err("MIXEDVI_THREADS = 0 invalid: at least one thread is needed".to_string());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("thread pool setup failed: {e}"))
}

fn write_artifacts(
    dir: &str,
    artifacts: &[(String, String)],
    quiet: bool,
) -> std::io::Result<()> {
    if artifacts.is_empty() {
        return Ok(());
    }
    std::fs::create_dir_all(dir)?;
    for (name, contents) in artifacts {
        let path = Path::new(dir).join(name);
        std::fs::write(&path, contents)?;
        if !quiet {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
