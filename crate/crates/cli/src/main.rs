//! `pathway-sim`: validate scenarios, run them, and apply single interventions.

mod commands;
mod error;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pathway_core::Method;

use error::{exit, CliError};

#[derive(Debug, Parser)]
#[command(name = "pathway-sim", version, about = "Protocol-owned liquidity peg simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a scenario config against every type and range rule.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Move a pool to a peg with one burn-and-swap intervention.
    Intervene {
        /// Reserves as `<amount>u,<amount>g`, e.g. `20u,10g`.
        #[arg(long)]
        pool: String,
        #[arg(long, value_parser = commands::parse_peg)]
        peg: f64,
        #[arg(long, default_value = "exact", value_parser = parse_method)]
        method: Method,
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u32).range(0..=10_000))]
        fee_bps: u32,
    },
    /// Run a scenario and write events.csv, series.csv, summary.txt and manifest.txt.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `run.seed`; replicates use consecutive seeds.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a linear peg model over factor data, printing `t,peg` for t in [from, to).
    Peg {
        /// CSV with header `t,factor_id,value`.
        #[arg(long)]
        factors: PathBuf,
        /// Linear model parameters as JSON.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        from: i64,
        #[arg(long)]
        to: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Replay the 20 U / 10 G to peg 3 worked example with both methods.
    Demo,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

fn dispatch(cli: Cli, out: &mut impl Write) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { config } => commands::validate(&config, out),
        Command::Intervene {
            pool,
            peg,
            method,
            fee_bps,
        } => commands::intervene(&pool, peg, method, fee_bps, out),
        Command::Run { config, seed, out: dir } => commands::run(&config, seed, &dir, out),
        Command::Peg {
            factors,
            config,
            from,
            to,
            seed,
        } => commands::peg(&factors, &config, from, to, seed, out),
        Command::Demo => commands::demo(out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK } as u8);
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match dispatch(cli, &mut out) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            let _ = out.flush();
            eprintln!("pathway-sim: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
