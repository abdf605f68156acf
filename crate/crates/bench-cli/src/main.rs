use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sirm_bench::{run_experiment, ExperimentConfig, Overrides, RunOptions};

#[derive(Parser)]
#[command(name = "sirm-bench", version, about = "Run subspace-iteration benchmark experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every point of an experiment configuration.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Execute run points one after another.
        #[arg(long)]
        single_thread: bool,
        /// Use the full-size grids and time spans instead of the quick defaults.
        #[arg(long)]
        paper_scale: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let Command::Run { config, out_dir, single_thread, paper_scale, seed } = Cli::parse().command;
    let result = ExperimentConfig::load(&config).map_err(Into::into).and_then(|cfg| {
        let opts = RunOptions { out_dir, single_thread, overrides: Overrides { paper_scale, seed } };
        run_experiment(&cfg, &opts)
    });
    match result {
        Ok(summary) => {
            let failed = summary.rows.iter().filter(|r| !r.is_ok()).count();
            println!(
                "{} runs ({} failed), results in {}",
                summary.rows.len(),
                failed,
                summary.out_dir.join("results.csv").display()
            );
            for fit in &summary.scaling {
                match &fit.exponent {
                    Ok(e) => println!("{}: wall time ~ dim^{e:.2}", fit.method),
                    Err(err) => println!("{}: {err}", fit.method),
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
