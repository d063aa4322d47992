//! `mapf-tracker`: validate plans, compute bounds, ingest batches, export
//! results, run solvers, generate scenarios and serve the JSON API.
//!
//! Exit status is 0 on success, 1 on a domain failure such as an invalid plan
//! or an unreachable goal, and 2 on usage or i/o errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod output;

use output::Format;

#[derive(Parser)]
#[command(name = "mapf-tracker", version, about = "Best-known bounds tracker for MAPF benchmarks")]
struct Cli {
    #[arg(long, global = true, value_enum, default_value = "table")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Instance {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    scen: PathBuf,
    /// Number of agents: the first N scenario entries.
    #[arg(long)]
    agents: usize,
}

#[derive(Args, Clone)]
pub struct Tracked {
    /// Directory with `maps/`, `scens/` and an optional `domains.txt`.
    #[arg(long, env = "MAPF_BENCH_ROOT")]
    bench_root: PathBuf,
    /// Store directory; defaults to `<bench-root>/store`.
    #[arg(long, env = "MAPF_TRACKER_STORE")]
    store: Option<PathBuf>,
}

#[derive(Args, Clone)]
pub struct ScopeArgs {
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    map: Option<String>,
    /// Scenario label such as `even-1`; requires `--map`.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    agents_min: Option<u32>,
    #[arg(long)]
    agents_max: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a plan set against an instance.
    Validate {
        #[command(flatten)]
        instance: Instance,
        /// One plan per line, or a single `;`-joined line.
        #[arg(long)]
        plan: PathBuf,
        /// Claimed sum of costs.
        #[arg(long)]
        cost: Option<u64>,
    },
    /// Sum of individual shortest-path distances.
    Lb {
        #[command(flatten)]
        instance: Instance,
    },
    /// Ingest a submission batch into the store.
    Ingest {
        #[command(flatten)]
        tracked: Tracked,
        #[arg(long)]
        descriptor: PathBuf,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Results of a scope at one aggregation level.
    Export {
        #[command(flatten)]
        tracked: Tracked,
        #[command(flatten)]
        scope: ScopeArgs,
        #[arg(long, default_value = "instance")]
        level: String,
    },
    /// Progress summary of a scope.
    Progress {
        #[command(flatten)]
        tracked: Tracked,
        #[command(flatten)]
        scope: ScopeArgs,
        /// `domain`, `map` or `scenario`.
        #[arg(long)]
        group_by: Option<String>,
    },
    /// Serve the JSON API until interrupted.
    Serve {
        #[command(flatten)]
        tracked: Tracked,
        #[arg(long, env = "MAPF_TRACKER_BIND", default_value = "127.0.0.1:8080")]
        bind: String,
        /// Largest accepted upload in bytes.
        #[arg(long, env = "MAPF_TRACKER_UPLOAD_CAP", default_value_t = 64 << 20)]
        upload_cap: usize,
        /// Batches with more rows are ingested as background jobs.
        #[arg(long, env = "MAPF_TRACKER_ASYNC_ROWS", default_value_t = 5_000)]
        async_rows: usize,
    },
    /// Run a solver over one scenario with increasing agent counts.
    Run {
        /// Solver adapter (TOML).
        #[arg(long)]
        adapter: PathBuf,
        #[arg(long)]
        map: PathBuf,
        /// Scenario file named `<map>-<kind>-<index>.scen`.
        #[arg(long)]
        scen: PathBuf,
        /// Base budget per run in seconds.
        #[arg(long, default_value_t = 60.0)]
        budget: f64,
        #[arg(long)]
        lb_extension: bool,
        #[arg(long, default_value_t = 2)]
        failure_stop: u32,
        #[arg(long, default_value_t = 1)]
        agent_step: u32,
        /// Seconds between the polite and the forced kill.
        #[arg(long, default_value_t = 2.0)]
        grace: f64,
        /// Directory to write `batch.csv` and `descriptor.toml` into.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Generate an even or random scenario for a map.
    Genscen {
        #[arg(long)]
        map: PathBuf,
        /// `even` or `random`.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        seed: u64,
        /// Entries of a random scenario.
        #[arg(long, default_value_t = 1000)]
        agents: usize,
        #[arg(long, default_value_t = 1)]
        index: u32,
        /// Write the scenario here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Why a command did not succeed.
pub enum Failure {
    /// A domain result such as an invalid plan; the rendering is still printed.
    Domain { reason: String, rendered: Option<output::Rendered> },
    /// Bad input files, flags or i/o.
    Usage(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    let result = match cli.command {
        Command::Validate { instance, plan, cost } => commands::validate(&instance, &plan, cost),
        Command::Lb { instance } => commands::lb(&instance),
        Command::Ingest { tracked, descriptor, csv } => commands::ingest(&tracked, &descriptor, &csv),
        Command::Export { tracked, scope, level } => commands::export(&tracked, &scope, &level),
        Command::Progress { tracked, scope, group_by } => commands::progress(&tracked, &scope, group_by.as_deref()),
        Command::Serve { tracked, bind, upload_cap, async_rows } => {
            commands::serve(&tracked, &bind, upload_cap, async_rows)
        }
        Command::Run { adapter, map, scen, budget, lb_extension, failure_stop, agent_step, grace, out_dir } => {
            let policy = commands::policy(budget, lb_extension, failure_stop, agent_step, grace);
            policy.and_then(|p| commands::run(&adapter, &map, &scen, &p, out_dir.as_deref()))
        }
        Command::Genscen { map, kind, seed, agents, index, out } => {
            commands::genscen(&map, &kind, seed, agents, index, out.as_deref(), format)
        }
    };
    match result {
        Ok(Some(r)) => {
            print!("{}", r.render(format));
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(Failure::Domain { reason, rendered }) => {
            if let Some(r) = rendered {
                print!("{}", r.render(format));
            }
            eprintln!("error: {reason}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
