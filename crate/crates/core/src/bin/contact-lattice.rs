use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use contact_lattice::harness::{default_oracle_table, oracle_table_csv, run_experiment, ExperimentSpec};
use contact_lattice::Error;

const OK: u8 = 0;
const INVALID_SPEC: u8 = 1;
const RUNTIME_FAILURE: u8 = 2;
const CHECK_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "contact-lattice", version, about = "Three-state contact process experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON spec.
    Run {
        spec: PathBuf,
        /// Replace the spec's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Replace the spec's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a spec without running it.
    Validate { spec: PathBuf },
    /// Print the exact-oracle pass/fail table.
    OracleCheck,
}

fn fail(status: &str, code: u8, message: String) -> ExitCode {
    eprintln!("{}", json!({ "status": status, "error": message }));
    ExitCode::from(code)
}

fn load(path: &PathBuf) -> Result<ExperimentSpec, ExitCode> {
    ExperimentSpec::from_path(path).map_err(|e| fail("invalid_spec", INVALID_SPEC, e.to_string()))
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { spec, seed, out } => {
            let mut s = match load(&spec) {
                Ok(s) => s,
                Err(code) => return code,
            };
            if let Some(seed) = seed {
                s = s.with_seed(seed);
            }
            if let Some(out) = out {
                s = s.with_output_dir(out);
            }
            match run_experiment(&s) {
                Ok(report) => {
                    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                    if report.passed == Some(false) {
                        ExitCode::from(CHECK_FAILED)
                    } else {
                        ExitCode::from(OK)
                    }
                }
                Err(e @ Error::InvalidSpec(_)) => fail("invalid_spec", INVALID_SPEC, e.to_string()),
                Err(e) => fail("runtime_failure", RUNTIME_FAILURE, e.to_string()),
            }
        }
        Command::Validate { spec } => {
            let s = match load(&spec) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let report = s.validate();
            let valid = report.is_valid();
            let out = json!({
                "status": if valid { "valid" } else { "invalid_spec" },
                "errors": report.errors,
                "warnings": report.warnings,
                "spec_sha256": s.hash(),
            });
            if valid {
                println!("{out}");
                ExitCode::from(OK)
            } else {
                eprintln!("{out}");
                ExitCode::from(INVALID_SPEC)
            }
        }
        Command::OracleCheck => match default_oracle_table().and_then(|rows| Ok((oracle_table_csv(&rows)?, rows))) {
            Ok((table, rows)) => {
                print!("{table}");
                if rows.iter().all(|r| r.pass) {
                    ExitCode::from(OK)
                } else {
                    ExitCode::from(CHECK_FAILED)
                }
            }
            Err(e) => fail("runtime_failure", RUNTIME_FAILURE, e.to_string()),
        },
    }
}
