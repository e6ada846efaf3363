use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shadowlab::{compare_reports, emit, load_scenario, preset, run, LabError, Report, RunOptions, PRESET_NAMES};

#[derive(Parser)]
#[command(name = "lab", version, about = "Shadowing experiments on attracting basins")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a preset.
    Run {
        /// Path to a TOML scenario, or a preset name.
        scenario: String,
        /// Output directory (default: out/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Let heuristic parabolic membership support a verdict.
        #[arg(long)]
        accept_heuristic_parabolic: bool,
    },
    /// List presets, or write them as TOML files into a directory.
    Presets {
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Report drift between two runs of the same scenario.
    Compare {
        /// First report (file or run directory).
        first: PathBuf,
        /// Second report (file or run directory).
        second: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse().command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<u8, LabError> {
    match command {
        Command::Run { scenario, out, seed, accept_heuristic_parabolic } => {
            let s = load_scenario(&scenario)?;
            let dir = out.unwrap_or_else(|| PathBuf::from("out").join(&s.name));
            log::info!("running {} into {}", s.name, dir.display());
            let output = run(&s, &RunOptions { seed, accept_heuristic_parabolic })?;
            let written = emit(&output.report, &output.artifacts, &dir)?;
            let r = &output.report;
            println!("{}: {} ({})", r.scenario.name, r.verdict.as_str(), r.regime);
            println!("  {}", r.verdict_reason);
            for c in r.checks.iter().filter(|c| !c.passed) {
                println!("  check {} did not pass: {}", c.name, c.detail);
            }
            println!("  wrote {} files to {}", written.len(), dir.display());
            Ok(0)
        }
        Command::Presets { dump } => {
            for name in PRESET_NAMES {
                let s = preset(name).expect("listed preset");
                println!("{name:<24} {}", s.description);
                if let Some(dir) = &dump {
                    std::fs::create_dir_all(dir)?;
                    std::fs::write(dir.join(format!("{name}.toml")), s.to_toml())?;
                }
            }
            Ok(0)
        }
        Command::Compare { first, second } => {
            let (a, b) = (Report::load(&first)?, Report::load(&second)?);
            let drift = compare_reports(&a, &b)?;
            println!("{}", serde_json::to_string_pretty(&drift).expect("drift serializes"));
            Ok(if drift.within_limit() { 0 } else { 4 })
        }
    }
}
