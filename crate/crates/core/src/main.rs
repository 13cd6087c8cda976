use clap::Parser;
use flowposterior::experiments::{run_scenario, ExperimentConfig, Scenario};
use std::path::PathBuf;
use std::process::ExitCode;

/// Run one experiment scenario and write its CSV outputs and manifest.
#[derive(Debug, Parser)]
#[command(name = "flowposterior", version)]
struct Cli {
    #[arg(value_enum)]
    scenario: Scenario,
    /// Base seed; multi-seed scenarios use seed, seed + 1, ...
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// TOML configuration; every key is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Print progress messages to stderr.
    #[arg(short, long)]
    verbose: bool,
}

struct StderrLogger;

impl log::Log for StderrLogger {
    fn enabled(&self, _: &log::Metadata) -> bool {
        true
    }

    fn log(&self, r: &log::Record) {
        eprintln!("[{}] {}", r.level(), r.args());
    }

    fn flush(&self) {}
}

static LOGGER: StderrLogger = StderrLogger;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if log::set_logger(&LOGGER).is_ok() {
        log::set_max_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn });
    }
    let result = ExperimentConfig::load(cli.config.as_deref())
        .and_then(|cfg| run_scenario(cli.scenario, &cfg, cli.seed, &cli.out));
    match result {
        Ok(report) => {
            for f in &report.outputs {
                println!("{}", cli.out.join(f).display());
            }
            if report.failed_checks.is_empty() {
                ExitCode::SUCCESS
            } else {
                eprintln!("failed checks: {}", report.failed_checks.join(", "));
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
