//! Command-line front end shared by the `smrls` binary and its tests.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::compare::compare;
use crate::config::{parse_config, ConfigError};
use crate::experiment::{run_experiment, RunError};
use crate::output::write_run;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;
pub const EXIT_IO: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "smrls",
    version,
    about = "Online RBF network training experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment and write its CSV files.
    Run {
        /// `key = value` config file, or a `config_resolved.csv` from an earlier run.
        config: PathBuf,
        /// Output directory (overrides the `output` key).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Random seed (overrides the `seed` key).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Tabulate the summary.csv of several runs.
    Compare {
        #[arg(required = true, num_args = 1..)]
        dirs: Vec<PathBuf>,
        /// Write the table here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Executes a parsed command. Returns the exit code; diagnostics go to `err`.
pub fn execute(cli: Cli, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> u8 {
    match cli.command {
        Command::Run {
            config,
            out: dir,
            seed,
        } => {
            let mut cfg = match parse_config(&config) {
                Ok(c) => c,
                Err(e @ ConfigError::Unreadable { .. }) => {
                    let _ = writeln!(err, "error: {e}");
                    return EXIT_IO;
                }
                Err(e) => {
                    let _ = writeln!(err, "config error: {e}");
                    return EXIT_CONFIG;
                }
            };
            if let Some(d) = dir {
                cfg.output = d;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let record = match run_experiment(&cfg) {
                Ok(r) => r,
                Err(RunError::Config(e)) => {
                    let _ = writeln!(err, "config error: {e}");
                    return EXIT_CONFIG;
                }
                Err(e) => {
                    let _ = writeln!(err, "run failed: {e}");
                    return EXIT_RUNTIME;
                }
            };
            match write_run(&record, &cfg.output) {
                Ok(paths) => {
                    for p in paths {
                        let _ = writeln!(out, "wrote {}", p.display());
                    }
                    EXIT_OK
                }
                Err(e) => {
                    let _ = writeln!(err, "I/O error: {e}");
                    EXIT_IO
                }
            }
        }
        Command::Compare { dirs, out: file } => {
            let table = match compare(&dirs) {
                Ok(t) => t,
                Err(e) => {
                    let _ = writeln!(err, "compare failed: {e}");
                    return EXIT_IO;
                }
            };
            let csv = table.to_csv();
            match file {
                Some(path) => match std::fs::write(&path, csv) {
                    Ok(()) => {
                        let _ = writeln!(out, "wrote {}", path.display());
                        EXIT_OK
                    }
                    Err(e) => {
                        let _ = writeln!(err, "I/O error: {}: {e}", path.display());
                        EXIT_IO
                    }
                },
                None => {
                    let _ = out.write_all(csv.as_bytes());
                    EXIT_OK
                }
            }
        }
    }
}
