use std::process::ExitCode;

use clap::Parser;
use maxdg_cli::{configure_threads, run, Overrides, RunConfig, Subcommand};

/// DG leapfrog experiments for TE Maxwell with a surface current.
#[derive(Parser)]
#[command(name = "maxdg", version)]
struct Cli {
    #[arg(value_enum)]
    command: Subcommand,
    #[command(flatten)]
    flags: Overrides,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = match configure_threads().and_then(|_| RunConfig::from_flags(cli.command, &cli.flags)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(out) => {
            print!("{}", out.summary);
            println!("outputs written to {}", cfg.out.display());
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
