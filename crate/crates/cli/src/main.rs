mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use tokennet_core::temporal::Resolution;

use commands::{Analysis, GraphFormat, Unconverged};
use config::{RunConfig, UsageError};

#[derive(Debug, Parser)]
#[command(name = "tokennet", version, about = "Multi-token transfer network analysis")]
struct Cli {
    /// Flat TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Merge addresses sharing a name-tag prefix into one entity.
    #[arg(long, global = true, value_enum)]
    group_entities: Option<Switch>,
    /// Louvain seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    transfers: Option<PathBuf>,
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
    #[arg(long, global = true)]
    ego_tags: Option<PathBuf>,
    #[arg(long, global = true)]
    allowlist: Option<PathBuf>,
    #[arg(long, global = true)]
    damping: Option<f64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Disparity-filter significance level in (0, 1].
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Exit 0 even when PageRank hits the iteration cap.
    #[arg(long, global = true)]
    allow_unconverged: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the network and write node/edge dumps and stats.json.
    Build,
    /// Run analyses on the built network.
    Analyze {
        /// Subset of analyses (comma separated); all by default.
        #[arg(long, value_enum, value_delimiter = ',')]
        only: Vec<Analysis>,
        #[arg(long)]
        louvain_resolution: Option<f64>,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Per-window series for one entity group.
    Temporal {
        /// Entity-name prefix, e.g. "Alameda Research".
        #[arg(long)]
        group: Option<String>,
        #[arg(long)]
        resolution: Option<Resolution>,
        /// Tokens for per-token balance series (comma separated).
        #[arg(long, value_delimiter = ',')]
        tokens: Vec<String>,
    },
    /// Write the network (or its backbone) as GEXF or DOT.
    Export {
        #[arg(long, value_enum, default_value = "gexf")]
        format: GraphFormat,
        #[arg(long)]
        backbone: bool,
    },
    /// Generate a synthetic dataset with a matching config.
    Synth {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long = "data-seed", default_value_t = 1)]
        data_seed: u64,
    },
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = &cli.$field {
                cfg.$field = v.clone().into();
            }
        )*};
    }
    set!(transfers, labels, ego_tags, allowlist, out_dir, seed, damping, tol, max_iter, alpha);
    if let Some(s) = cli.group_entities {
        cfg.group_entities = matches!(s, Switch::On);
    }
    match &cli.command {
        Command::Analyze {
            louvain_resolution,
            top_k,
            ..
        } => {
            cfg.louvain_resolution = louvain_resolution.unwrap_or(cfg.louvain_resolution);
            cfg.top_k = top_k.unwrap_or(cfg.top_k);
        }
        Command::Temporal {
            group,
            resolution,
            tokens,
        } => {
            if group.is_some() {
                cfg.group = group.clone();
            }
            cfg.resolution = resolution.unwrap_or(cfg.resolution);
            if !tokens.is_empty() {
                cfg.tokens = tokens.clone();
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    if let Command::Synth { dir, count, data_seed } = &cli.command {
        return commands::synth(dir, *count, *data_seed);
    }
    let cfg = resolve_config(&cli)?;
    match &cli.command {
        Command::Build => commands::build(&cfg),
        Command::Analyze { only, .. } => commands::analyze(&cfg, only, cli.allow_unconverged),
        Command::Temporal { .. } => commands::temporal(&cfg, cli.allow_unconverged),
        Command::Export { format, backbone } => commands::export_graph(&cfg, *format, *backbone),
        Command::Synth { .. } => unreachable!("handled above"),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use tokennet_core::Error as E;
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    if err.downcast_ref::<Unconverged>().is_some() {
        return 3;
    }
    match err.downcast_ref::<E>() {
        Some(E::InvalidParameter { .. } | E::InvalidWindow { .. } | E::UnknownGroup { .. }) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
