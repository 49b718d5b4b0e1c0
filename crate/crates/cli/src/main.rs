mod commands;
mod dataset;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::TrainArgs;
use error::CliResult;

/// Train self-organising maps and model-check the preferential logic they
/// induce.
#[derive(Debug, Parser)]
#[command(name = "som-cwm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a map on a labelled CSV; writes map.json and qe.csv.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Build the semantic model of a trained map and extract its knowledge
    /// base; writes model.json, kb.txt, reports.jsonl and specificity.json.
    Extract {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Extra unlabelled points to include in the domain (CSV with header).
        #[arg(long)]
        probes: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check one inclusion such as `T(A) <= B` or `A & B <= C`.
    /// Exits 0 if it holds and 4 if it does not.
    Check {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        query: String,
    },
    /// Verify the order properties and KLM postulates of a model.
    /// Exits 3 when a violation is found.
    Verify {
        #[arg(long)]
        model: PathBuf,
        /// Also write the report to <OUT>/verify.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay training one presentation at a time and record how the
    /// satisfied inclusions change; writes trace.jsonl and map.json.
    Trace {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
    },
}

const NOT_HOLDS: u8 = 4;
const VIOLATION: u8 = 3;

fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Train { data, out, train } => commands::train(&data, &out, &train).map(|_| 0),
        Command::Extract {
            map,
            data,
            probes,
            out,
        } => commands::extract(&map, &data, probes.as_deref(), &out).map(|_| 0),
        Command::Check { model, query } => {
            commands::check(&model, &query).map(|holds| if holds { 0 } else { NOT_HOLDS })
        }
        Command::Verify { model, out } => {
            commands::verify(&model, out.as_deref()).map(|ok| if ok { 0 } else { VIOLATION })
        }
        Command::Trace { data, out, train } => commands::trace(&data, &out, &train).map(|_| 0),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
