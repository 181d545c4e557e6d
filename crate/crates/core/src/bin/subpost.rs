use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use subpost::data::ExampleId;
use subpost::experiment::{run_experiment, write_outputs, CellStatus, ExperimentConfig};

#[derive(Parser)]
#[command(name = "subpost", version, about = "Parallel MCMC by averaging recentred subposteriors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Overrides the config's worker count.
        #[arg(short, long)]
        workers: Option<usize>,
    },
    /// List the built-in examples.
    ListExamples,
    /// Parse and check a config without running it.
    ValidateConfig { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::ListExamples => {
            for e in ExampleId::ALL {
                println!("{}  {:<15} {}", e.number(), e.name(), e.description());
            }
            ExitCode::SUCCESS
        }
        Command::ValidateConfig { config } => match ExperimentConfig::load(&config) {
            Ok(c) => {
                println!("{}: ok ({} shard counts x {} combiners)", config.display(), c.k.len(), c.combiners.len());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run { config, output, workers } => {
            let mut cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            if let Some(o) = output {
                cfg.output_dir = o;
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            let run = match run_experiment(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            match write_outputs(&run, &cfg.output_dir) {
                Ok(files) => eprintln!("wrote {} files to {}", files.len(), cfg.output_dir.display()),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            }
            println!("{:>6}  {:<6}  {:>12}  {:>12}  {:>8}", "K", "method", "L2", "L2 raw", "seconds");
            for r in &run.table.rows {
                match r.status {
                    CellStatus::Ok => println!(
                        "{:>6}  {:<6}  {:>12.4e}  {:>12.4e}  {:>8.2}",
                        r.k,
                        r.method.label(),
                        r.total_l2.unwrap_or(f64::NAN),
                        r.total_l2_raw.unwrap_or(f64::NAN),
                        r.wall_seconds
                    ),
                    CellStatus::Failed => println!(
                        "{:>6}  {:<6}  FAILED: {}",
                        r.k,
                        r.method.label(),
                        r.error.as_deref().unwrap_or("")
                    ),
                }
            }
            if run.table.all_ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
