use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rough_volterra::harness::{error_exit_code, run_file, RunOptions, OUT_ENV};

#[derive(Parser)]
#[command(name = "rough-volterra", version, about = "Config-driven rough Volterra experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one JSON experiment config and write CSVs plus manifest.json.
    Run {
        config: PathBuf,
        /// Output directory (overrides ROUGH_VOLTERRA_OUT and the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for seed and resolution fan-out.
        #[arg(long)]
        jobs: Option<usize>,
        /// Restrict the run to the named checks; may be repeated.
        #[arg(long = "check", value_name = "NAME")]
        checks: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let Command::Run { config, out, jobs, checks } = cli.command;
    let options = RunOptions { out, env_out: std::env::var_os(OUT_ENV).map(PathBuf::from), checks };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(j);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(3);
        }
    };

    match pool.install(|| run_file(&config, &options)) {
        Ok(outcome) => {
            for c in &outcome.manifest.checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                println!("{status} {} measured={:e} threshold={:e} {}", c.name, c.measured, c.threshold, c.detail);
            }
            println!("wrote {}", outcome.out_dir.join("manifest.json").display());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
