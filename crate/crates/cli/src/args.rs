use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use morag_core::index::Part;

#[derive(Debug, Parser)]
#[command(name = "morag", version, about = "Part-specific motion retrieval and composition")]
pub struct Cli {
    /// Config file (`key = value` lines)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for sampled metrics and the toy trainer
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Log progress to stderr
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a part database from a JSONL manifest and an f32 vector table
    BuildDb(BuildDb),
    /// Ask the completion endpoint (or the cache) for part descriptions
    Describe(Describe),
    /// Retrieve the top-k motions for every part
    Retrieve(Retrieve),
    /// Retrieve and fuse rank by rank into full-body motions
    Compose(Compose),
    /// Compute the evaluation metrics over feature files
    Eval(Eval),
    /// Train the toy linear projections on a pairs file
    TrainToy(TrainToy),
}

#[derive(Debug, Args)]
pub struct BuildDb {
    /// JSONL manifest, one `{id, part, frames, text, motion_path}` per line
    #[arg(long)]
    pub manifest: PathBuf,
    /// Headerless little-endian f32 table, one row per manifest line
    #[arg(long)]
    pub vectors: PathBuf,
    /// torso, hands or legs
    #[arg(long)]
    pub part: Part,
    /// Embedding width of the vector table
    #[arg(long, default_value_t = 256)]
    pub dim: usize,
    /// Database file to write
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Describe {
    /// Action description
    pub text: String,
}

#[derive(Debug, Args)]
pub struct Query {
    /// Action description
    pub text: String,
    /// Results per part; overrides `compose.k`
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: Option<u64>,
    /// Use these part descriptions (JSON, as printed by `describe`) instead
    /// of asking the endpoint
    #[arg(long)]
    pub descriptions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Retrieve {
    #[command(flatten)]
    pub query: Query,
    /// Write the results JSON here
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the results JSON instead of tables
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct Compose {
    #[command(flatten)]
    pub query: Query,
    /// Directory for rank_N.mo, rank_N.json and retrieval.json
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also write pooled 263-wide features of each output (f32 rows)
    #[arg(long)]
    pub features: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Eval {
    /// Text features paired row by row with --generated
    #[arg(long)]
    pub text: PathBuf,
    /// Generated motion features
    #[arg(long)]
    pub generated: PathBuf,
    /// Reference motion features for FID
    #[arg(long)]
    pub real: PathBuf,
    /// One label per generated row; enables multimodality
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Feature width; overrides `metrics.feature_dim`
    #[arg(long)]
    pub dim: Option<usize>,
    /// Repeat with seeds seed, seed+1, ...; one JSON line per run
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub repeat: u64,
}

#[derive(Debug, Args)]
pub struct TrainToy {
    /// JSON `{"text": [[..]], "motion": [[..]], "text_sims": [[..]]?}`
    pub pairs: PathBuf,
    /// N x N little-endian f32 text-similarity matrix; replaces `text_sims`
    #[arg(long)]
    pub text_sims: Option<PathBuf>,
    /// Write the per-epoch loss trace (JSON array) here
    #[arg(long)]
    pub trace: Option<PathBuf>,
}
