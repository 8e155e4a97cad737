mod commands;
mod config;
mod error;
mod inputs;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::{resolve, Resolved};
use crate::error::{CliError, CliResult};
use crate::output::Output;

/// Welfare analysis of discrete-choice interventions.
#[derive(Parser)]
#[command(name = "dcwelfare", version)]
struct Cli {
    /// More log output (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// File of `key=value` lines layered over the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key; repeatable, applied after `--config`.
    #[arg(short, long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate agents' welfare under a model, or an estimation dataset.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<String>,
    },
    /// Fit the constrained spline-probit demand model to a dataset.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<String>,
    },
    /// Welfare distribution at a budget point, or subsidy scenarios with --binary.
    Welfare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        binary: bool,
    },
    /// Bounds on the welfare CDF from observed outside shares.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        ordered: bool,
    },
    /// Optimal income-dependent subsidy schedule.
    Target {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        draws: Option<String>,
    },
    /// Welfare, compensating variation and cost curves over subsidies.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<String>,
    },
}

fn overrides(common: &Common, named: &[(&str, Option<String>)]) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for s in &common.set {
        let (k, v) = s.split_once('=').ok_or_else(|| CliError::usage(format!("--set expects KEY=VALUE, got {s:?}")))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    if let Some(seed) = common.seed {
        out.push(("seed".into(), seed.to_string()));
    }
    for (k, v) in named {
        if let Some(v) = v {
            // quoted so that values such as file names stay strings
            out.push((k.to_string(), serde_json::Value::String(v.clone()).to_string()));
        }
    }
    Ok(out)
}

fn flag(on: bool) -> Option<String> {
    on.then(|| "true".to_string())
}

fn execute<C>(
    common: &Common,
    named: Vec<(&str, Option<String>)>,
    flags: Vec<(&str, bool)>,
    run: fn(&Resolved<C>, &Path) -> CliResult<Output>,
) -> CliResult<Output>
where
    C: Serialize + DeserializeOwned + Default,
{
    let mut pairs = overrides(common, &named)?;
    pairs.extend(flags.into_iter().filter_map(|(k, on)| flag(on).map(|v| (k.to_string(), v))));
    let resolved = resolve::<C>(common.config.as_deref(), &pairs)?;
    log::info!("config sha256 {}", resolved.sha256);
    run(&resolved, &common.out)
}

fn dispatch(command: Command) -> CliResult<Output> {
    use commands::*;
    match command {
        Command::Simulate { common, model } => execute(&common, vec![("model", model)], vec![], simulate::run),
        Command::Estimate { common, data } => execute(&common, vec![("data", data)], vec![], estimate::run),
        Command::Welfare { common, model, binary } => {
            execute(&common, vec![("model", model)], vec![("binary", binary)], welfare::run)
        }
        Command::Bounds { common, model, ordered } => {
            execute(&common, vec![("model", model)], vec![("ordered", ordered)], bounds::run)
        }
        Command::Target { common, model, draws } => {
            execute(&common, vec![("model", model), ("draws", draws)], vec![], target::run)
        }
        Command::Report { common, model } => execute(&common, vec![("model", model)], vec![], report::run),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(out) => {
            for p in out.written() {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
