use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kinetra::config::{parse_config, ScenarioConfig};
use kinetra::scenario::{resolve_out_dir, run_scenario};

#[derive(Parser)]
#[command(name = "kinetra", version, about = "Kinetic traffic-flow scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its CSVs, manifest and summary.
    Run {
        config: PathBuf,
        /// Output directory (default: $KINETRA_OUT/<config stem>, or ./out/<config stem>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Maximum number of worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Parse and validate a configuration without running it.
    Validate { config: PathBuf },
}

const CONFIG_ERROR: u8 = 1;
const RUNTIME_ERROR: u8 = 2;

fn load(path: &Path) -> Result<ScenarioConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                print!("{}", cfg.echo());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(CONFIG_ERROR)
            }
        },
        Command::Run { config, out, jobs } => {
            let cfg = match load(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(CONFIG_ERROR);
                }
            };
            let env = std::env::var("KINETRA_OUT").ok();
            let dir = resolve_out_dir(out.as_deref(), &cfg, &config, env.as_deref());
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build() {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("cannot start worker pool: {e}");
                    return ExitCode::from(RUNTIME_ERROR);
                }
            };
            match pool.install(|| run_scenario(&cfg, &dir)) {
                Ok(report) => {
                    for (k, v) in &report.summary {
                        println!("{k} = {v}");
                    }
                    log::info!("wrote {} data files to {}", report.files.len(), dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("run aborted: {e} (details in {})", dir.join("failure.txt").display());
                    ExitCode::from(RUNTIME_ERROR)
                }
            }
        }
    }
}
