//! `roadspoof` command-line front end.

mod commands;
mod config;
mod error;
mod geojson;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Context, EvalSettings, SpoofedInput};
use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(
    name = "roadspoof",
    version,
    about = "Spoofed-route and escape-path analysis over OpenStreetMap road graphs"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Graph cache file; overrides `cache_path`.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Random seed; overrides `coverage.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an OSM file and write the graph cache.
    BuildGraph {
        #[arg(long)]
        osm: PathBuf,
    },
    /// Rank spoofed routes between two points.
    Spoof {
        /// LAT,LON
        #[arg(long, allow_hyphen_values = true)]
        source: String,
        /// LAT,LON
        #[arg(long, allow_hyphen_values = true)]
        dest: String,
    },
    /// Find routes indistinguishable from a spoofed route.
    Escape {
        /// GeoJSON written by `spoof`; defaults to `<out>/spoofed.geojson`.
        #[arg(long, conflicts_with = "path")]
        spoofed: Option<PathBuf>,
        /// 1-based rank within the spoofed file.
        #[arg(long, default_value_t = 1)]
        rank: usize,
        /// JSON array of vertex ids to use instead of a ranked file.
        #[arg(long)]
        path: Option<PathBuf>,
    },
    /// Random trials of displacement and coverage.
    Eval {
        #[arg(long)]
        trials: Option<usize>,
        /// Meters.
        #[arg(long)]
        min_distance: Option<f64>,
        /// Meters.
        #[arg(long)]
        max_distance: Option<f64>,
    },
    /// Pick the route with the rarest signature and audit it.
    SecurePath {
        #[arg(long, allow_hyphen_values = true)]
        source: String,
        #[arg(long, allow_hyphen_values = true)]
        dest: String,
    },
}

fn context(cli: &Cli) -> Result<Context, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::InvalidArgument("--config is required for this command".into()))?;
    let mut config = RunConfig::load(path)?;
    if let Some(cache) = &cli.cache {
        config.cache_path = Some(cache.clone());
    }
    if let Some(seed) = cli.seed {
        config.coverage.seed = seed;
    }
    let out = cli.out.clone().unwrap_or_else(|| config.output_dir.clone());
    Ok(Context { config, out })
}

fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::BuildGraph { osm } => {
            let cache = match (&cli.cache, &cli.config) {
                (Some(c), _) => c.clone(),
                (None, Some(_)) => context(cli)?
                    .config
                    .cache_path
                    .ok_or_else(|| CliError::InvalidArgument("no cache path given".into()))?,
                (None, None) => return Err(CliError::InvalidArgument("--cache is required".into())),
            };
            commands::build_graph_cmd(osm, &cache)
        }
        Command::Spoof { source, dest } => {
            let ctx = context(cli)?;
            commands::spoof_cmd(&ctx, commands::parse_point(source)?, commands::parse_point(dest)?)
        }
        Command::Escape { spoofed, rank, path } => {
            let ctx = context(cli)?;
            let input = match path {
                Some(p) => SpoofedInput::Vertices(p.clone()),
                None => SpoofedInput::Ranked(
                    spoofed.clone().unwrap_or_else(|| ctx.out.join("spoofed.geojson")),
                    *rank,
                ),
            };
            commands::escape_cmd(&ctx, &input)
        }
        Command::Eval {
            trials,
            min_distance,
            max_distance,
        } => {
            let ctx = context(cli)?;
            let ev = &ctx.config.eval;
            let settings = EvalSettings {
                trials: trials.unwrap_or(ev.trials),
                min_distance: min_distance.unwrap_or(ev.min_distance),
                max_distance: max_distance.unwrap_or(ev.max_distance),
            };
            commands::eval_cmd(&ctx, &settings)
        }
        Command::SecurePath { source, dest } => {
            let ctx = context(cli)?;
            commands::secure_path_cmd(&ctx, commands::parse_point(source)?, commands::parse_point(dest)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.name());
            ExitCode::FAILURE
        }
    }
}
