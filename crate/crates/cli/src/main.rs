// Copyright 2026 The butterfly Developers
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except
// in compliance with the License. You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under
// the License.


use std::path::PathBuf;
use std::process::ExitCode;

use butterfly_cli::compare::{compare_files, CompareOptions};
use butterfly_cli::error::EXIT_CONFIG;
use butterfly_cli::{run_file, validate_file, RunOptions, THREADS_ENV};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "butterfly", version, about = "Run and check scrambling-metrology experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSV tables plus manifest.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = all cores).
        #[arg(long, env = THREADS_ENV)]
        threads: Option<usize>,
        /// Replace the config's master_seed.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare two curves and print a JSON report.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// x column of A (default: first column).
        #[arg(long)]
        x_a: Option<String>,
        /// y column of A (default: `mean`, else the second column).
        #[arg(long)]
        y_a: Option<String>,
        #[arg(long)]
        x_b: Option<String>,
        #[arg(long)]
        y_b: Option<String>,
        /// Fit a step-to-time factor in [LO, HI], with A as the step curve.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        calibrate: Option<Vec<f64>>,
        /// Fail (exit 1) when the relative RMS deviation exceeds this.
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            threads,
            seed_override,
        } => {
            let opts = RunOptions {
                out,
                threads,
                seed_override,
            };
            match run_file(&config, &opts) {
                Ok(m) => {
                    for w in &m.warnings {
                        eprintln!("warning: {w}");
                    }
                    eprintln!("wrote {} files in {:.2}s", m.files.len() + 1, m.wall_clock_seconds);
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Validate { config } => match validate_file(&config) {
            Ok(d) => {
                for e in &d.errors {
                    println!("error: {e}");
                }
                for w in &d.warnings {
                    println!("warning: {w}");
                }
                if d.errors.is_empty() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_CONFIG as u8)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::Compare {
            a,
            b,
            x_a,
            y_a,
            x_b,
            y_b,
            calibrate,
            tolerance,
        } => {
            let opts = CompareOptions {
                x_a,
                y_a,
                x_b,
                y_b,
                calibrate: calibrate.map(|v| [v[0], v[1]]),
                tolerance,
            };
            match compare_files(&a, &b, &opts) {
                Ok(r) => {
                    println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
                    if r.within_tolerance == Some(false) {
                        ExitCode::FAILURE
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
