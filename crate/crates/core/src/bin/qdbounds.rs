use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qdbounds::cli;

#[derive(Parser)]
#[command(
    name = "qdbounds",
    version,
    about = "Quantum dynamical bounds lab for long-range quasiperiodic operators"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment of a scenario file or bundled scenario.
    Run {
        scenario: String,
        /// Override a key, e.g. `--set experiment.0.delta=0.4`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory (default: the scenario's `output_dir`, else `runs/<name>`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for grid points.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Parse and check a scenario without computing anything.
    Validate {
        scenario: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// List the bundled scenarios.
    List,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> qdbounds::Result<ExitCode> {
    match Args::parse().command {
        Command::List => {
            for (name, desc) in cli::list_scenarios() {
                println!("{name:<26} {desc}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { scenario, set } => {
            let text = cli::read_scenario_text(&scenario)?;
            cli::validate(&text, &set)?;
            println!("ok");
            Ok(ExitCode::SUCCESS)
        }
        Command::Run {
            scenario,
            set,
            out,
            threads,
        } => {
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build_global()
                    .map_err(|e| qdbounds::Error::Config(format!("--threads: {e}")))?;
            }
            let text = cli::read_scenario_text(&scenario)?;
            let s = cli::load(&text, &set)?;
            let manifest = cli::run(&s, out.as_deref())?;
            for e in &manifest.experiments {
                let status = serde_json::to_value(e.status).unwrap_or_default();
                println!(
                    "{:02} {:<20} {}",
                    e.index,
                    e.kind,
                    status.as_str().unwrap_or("?")
                );
                if let Some(err) = &e.error {
                    println!("   {err}");
                }
            }
            Ok(if manifest.success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}
