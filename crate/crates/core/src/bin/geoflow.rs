use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use geoflow::experiments::{self, Scenario, ScenarioConfig};
use geoflow::GeoflowError;

#[derive(Parser)]
#[command(name = "geoflow", version, about = "Run gradient-flow regularisation scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run { config: PathBuf },
    /// List the available scenarios.
    ListScenarios,
    /// Parse and validate a config file without running it.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::ListScenarios => {
            for s in Scenario::ALL {
                println!("{:<18} {}", s.name(), s.describe());
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match ScenarioConfig::from_file(&config) {
            Ok(cfg) => {
                println!("ok: {} -> {}", cfg.scenario.name(), cfg.output_dir.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run { config } => {
            let cfg = match ScenarioConfig::from_file(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            match experiments::run(&cfg) {
                Ok(m) => {
                    for g in &m.gates {
                        println!("{} {}: {}", if g.passed { "PASS" } else { "FAIL" }, g.name, g.detail);
                    }
                    println!(
                        "manifest: {}",
                        m.output_dir.join(experiments::output::MANIFEST_NAME).display()
                    );
                    if m.passed() {
                        ExitCode::SUCCESS
                    } else {
                        for f in m.failures() {
                            eprintln!("failure: {f}");
                        }
                        ExitCode::FAILURE
                    }
                }
                Err(e @ GeoflowError::Config(_)) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
