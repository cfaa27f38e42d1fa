//! `vulnrank`: ingest a vulnerability catalog, search for Pareto-optimal
//! priority ranks, and pick one by weights or thresholds, from the command
//! line or through a small JSON API.

pub mod commands;
pub mod error;
pub mod manifest;
pub mod output;
pub mod server;

use clap::{Parser, Subcommand};

pub use error::{CliError, CliResult};
pub use manifest::{CatalogSource, InputFormat, ObjectiveDef, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "vulnrank", version, about = "Multi-objective vulnerability prioritization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for Pareto-optimal priority ranks and write the front as JSON.
    Optimize(commands::OptimizeArgs),
    /// Combine several ranks with a Borda statistic and check for majority cycles.
    Aggregate(commands::AggregateArgs),
    /// Distance or correlation between two ranks.
    Distance(commands::DistanceArgs),
    /// Pick one member of a stored front by weights or thresholds.
    Select(commands::SelectArgs),
    /// Serve a front over HTTP for interactive selection.
    Serve(commands::ServeArgs),
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Optimize(a) => commands::optimize(a),
        Command::Aggregate(a) => commands::aggregate(a),
        Command::Distance(a) => commands::distance(a),
        Command::Select(a) => commands::select(a),
        Command::Serve(a) => commands::serve(a),
    }
}
