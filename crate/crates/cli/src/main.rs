//! `tdcomm`: ingest posts, build the temporal network, detect communities
//! and emit figure data.

mod commands;
mod config;
mod output;
mod store;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use tdcomm::ingest::InputFormat;
use tdcomm::tdnet::EdgeMode;

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "tdcomm",
    version,
    about = "Community detection on time-dependent hashtag networks"
)]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, filter and bin posts into a record store.
    Ingest(IngestArgs),
    /// Build the network and write it with its statistics.
    Build(BuildArgs),
    /// Detect communities.
    Detect(DetectArgs),
    /// Per-community timelines.
    Analyze(AnalyzeArgs),
    /// Figure data, plots and a summary.
    Report(ReportArgs),
    /// Generate a planted-community post stream.
    Synth(SynthArgs),
    /// Print the effective configuration.
    Config,
}

#[derive(Args)]
struct IngestArgs {
    /// JSONL or CSV post file.
    input: PathBuf,
    #[arg(long)]
    format: Option<InputFormat>,
    #[arg(long)]
    start: Option<NaiveDate>,
    #[arg(long)]
    end: Option<NaiveDate>,
    /// Calendar offset that defines days, e.g. +02:00.
    #[arg(long, allow_hyphen_values = true)]
    utc_offset: Option<String>,
    /// Generic hashtag list replacing the built-in one.
    #[arg(long)]
    stoplist: Option<PathBuf>,
    #[arg(long)]
    keep_query_keywords: bool,
    #[arg(long)]
    strip_secondary_keyword: bool,
}

#[derive(Args)]
struct GraphArgs {
    /// Record store; defaults to records.jsonl in the output directory.
    #[arg(long)]
    records: Option<PathBuf>,
    #[arg(long)]
    edge_mode: Option<EdgeMode>,
    #[arg(long)]
    clique_cap: Option<usize>,
    #[arg(long)]
    size_floor: Option<usize>,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    clustering_sample: Option<usize>,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Ground-truth `user day community_id` file to score against.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Partition; defaults to partition.tsv in the output directory.
    #[arg(long)]
    partition: Option<PathBuf>,
    /// JSON object mapping topics to hashtag lists.
    #[arg(long)]
    topic_map: Option<PathBuf>,
    #[arg(long)]
    top_hashtags: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    analyze: AnalyzeArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Frame lengths in days, comma separated.
    #[arg(long, value_delimiter = ',')]
    frames: Option<Vec<usize>>,
    /// Communities in the evolution figure; default covers `--coverage` of users.
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    coverage: Option<f64>,
    #[arg(long)]
    clustering_sample: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    communities: Option<usize>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    days: Option<u32>,
    #[arg(long)]
    pool: Option<usize>,
    #[arg(long)]
    activity: Option<f64>,
    #[arg(long)]
    posts_per_day: Option<usize>,
    #[arg(long)]
    cross_talk: Option<f64>,
    #[arg(long)]
    lifespan: Option<u32>,
    #[arg(long)]
    stagger: Option<u32>,
    #[arg(long)]
    start: Option<NaiveDate>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl GraphArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.edge_mode, self.edge_mode);
        if self.clique_cap.is_some() {
            cfg.clique_cap = self.clique_cap;
        }
        set(&mut cfg.size_floor, self.size_floor);
    }

    fn records(&self, cfg: &RunConfig) -> PathBuf {
        self.records
            .clone()
            .unwrap_or_else(|| cfg.out_dir.join(commands::RECORDS))
    }
}

impl SearchArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.detection.n_trials, self.trials);
        set(&mut cfg.detection.tolerance, self.tolerance);
        set(&mut cfg.detection.max_sweeps, self.max_sweeps);
    }
}

impl AnalyzeArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        self.graph.apply(cfg);
        if self.topic_map.is_some() {
            cfg.topic_map = self.topic_map.clone();
        }
        set(&mut cfg.top_hashtags, self.top_hashtags);
    }

    fn partition(&self, cfg: &RunConfig) -> PathBuf {
        self.partition
            .clone()
            .unwrap_or_else(|| cfg.out_dir.join(commands::PARTITION))
    }
}

/// A failure and the exit code it maps to.
enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

fn resolve(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.detection.seed = s;
        cfg.synth.seed = s;
    }
    set(&mut cfg.out_dir, cli.out.clone());
    match &cli.command {
        Command::Ingest(a) => {
            if a.start.is_some() {
                cfg.window.start = a.start;
            }
            if a.end.is_some() {
                cfg.window.end = a.end;
            }
            set(&mut cfg.utc_offset, a.utc_offset.clone());
            if a.stoplist.is_some() {
                cfg.stoplist.path = a.stoplist.clone();
            }
            cfg.stoplist.keep_query_keywords |= a.keep_query_keywords;
            cfg.stoplist.strip_secondary_keyword |= a.strip_secondary_keyword;
        }
        Command::Build(a) => {
            a.graph.apply(&mut cfg);
            if a.clustering_sample.is_some() {
                cfg.clustering_sample = a.clustering_sample;
            }
        }
        Command::Detect(a) => {
            a.graph.apply(&mut cfg);
            a.search.apply(&mut cfg);
        }
        Command::Analyze(a) => a.apply(&mut cfg),
        Command::Report(a) => {
            a.analyze.apply(&mut cfg);
            a.search.apply(&mut cfg);
            set(&mut cfg.frames, a.frames.clone());
            if a.top_k.is_some() {
                cfg.top_k = a.top_k;
            }
            set(&mut cfg.coverage, a.coverage);
            if a.clustering_sample.is_some() {
                cfg.clustering_sample = a.clustering_sample;
            }
        }
        Command::Synth(a) => {
            let s = &mut cfg.synth;
            set(&mut s.n_communities, a.communities);
            set(&mut s.users_per_community, a.users);
            set(&mut s.n_days, a.days);
            set(&mut s.pool_size, a.pool);
            set(&mut s.activity, a.activity);
            set(&mut s.posts_per_day, a.posts_per_day);
            set(&mut s.cross_talk, a.cross_talk);
            if a.lifespan.is_some() {
                s.lifespan = a.lifespan;
            }
            set(&mut s.stagger, a.stagger);
            set(&mut s.start, a.start);
        }
        Command::Config => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage(anyhow::anyhow!(
                "--threads must be at least 1"
            )));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.into()))?;
    }
    let cfg = resolve(&cli).map_err(Failure::Usage)?;
    let result = match &cli.command {
        Command::Ingest(a) => commands::ingest(&cfg, &a.input, a.format),
        Command::Build(a) => commands::build(&cfg, &a.graph.records(&cfg)),
        Command::Detect(a) => commands::detect(&cfg, &a.graph.records(&cfg), a.truth.as_deref()),
        Command::Analyze(a) => commands::analyze(&cfg, &a.graph.records(&cfg), &a.partition(&cfg)),
        Command::Report(a) => {
            let an = &a.analyze;
            commands::report(&cfg, &an.graph.records(&cfg), &an.partition(&cfg))
        }
        Command::Synth(_) => commands::synth(&cfg),
        Command::Config => {
            println!(
                "{}",
                serde_json::to_string_pretty(&cfg).expect("config serializes")
            );
            Ok(())
        }
    };
    result.map_err(Failure::Data)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
