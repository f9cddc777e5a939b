//! `rankguard` command line: ingest, scoring, evasion, confusion detection
//! and evaluation over snapshot files.

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rankguard_core::ingest::{NoNetwork, Transport};
use rankguard_core::model::{parse_timestamp, truncate_timestamp, Timestamp};

mod commands;
mod output;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Well-formed arguments that do not make sense together.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(name = "rankguard", version, about = "Package trust scoring and evasion analysis")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Never touch the network; serve requests from --fixtures and --cache.
    #[arg(long, global = true)]
    pub offline: bool,
    /// Evaluation time (RFC 3339). Defaults to the current time.
    #[arg(long, global = true, value_parser = parse_now)]
    pub now: Option<Timestamp>,
    /// Output file, or directory for multi-report subcommands.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Response cache directory.
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    /// Recorded responses laid out like the cache.
    #[arg(long, global = true)]
    pub fixtures: Option<PathBuf>,
    /// Requests per second per client.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub rate_limit: f64,
    /// Retries for transient failures.
    #[arg(long, global = true, default_value_t = 3)]
    pub max_retries: u32,
    /// Concurrent fetches.
    #[arg(long, global = true, default_value_t = 4)]
    pub parallelism: usize,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

fn parse_now(s: &str) -> Result<Timestamp, String> {
    parse_timestamp(s).map_err(|e| format!("expected an RFC 3339 timestamp: {e}"))
}

impl Common {
    pub fn now(&self) -> Timestamp {
        self.now.unwrap_or_else(|| truncate_timestamp(chrono::Utc::now()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeedArg {
    NewPackages,
    NewReleases,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-metric score breakdown for one package.
    Score {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        package: String,
        /// Snapshot file whose latest releases resolve dependency constraints.
        #[arg(long)]
        index: Option<PathBuf>,
    },
    /// Score distribution and summary statistics per label.
    Eval {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        index: Option<PathBuf>,
    },
    /// Precision, recall and F1 for every integer threshold.
    Sweep {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long, default_value_t = *rankguard_core::eval::DEFAULT_SWEEP_RANGE.start(), allow_hyphen_values = true)]
        min: i64,
        #[arg(long, default_value_t = *rankguard_core::eval::DEFAULT_SWEEP_RANGE.end(), allow_hyphen_values = true)]
        max: i64,
    },
    /// Marks every malicious package removed, then evaluates again.
    Counterfactual {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        index: Option<PathBuf>,
    },
    /// Applies evasion techniques to one package and reports the score path.
    Evade {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        package: String,
        /// Apply every technique in order.
        #[arg(long, requires = "victim", conflicts_with = "plan")]
        full_stack: bool,
        /// Repository to claim; must be present in the snapshot file.
        #[arg(long)]
        victim: Option<String>,
        /// JSON array of techniques.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        index: Option<PathBuf>,
    },
    /// Repository-claim verdicts and victim prevalence.
    Confusion {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        registry: PathBuf,
    },
    /// Recent entries of an index feed.
    FetchFeed {
        #[arg(long, value_enum, default_value_t = FeedArg::NewPackages)]
        kind: FeedArg,
        /// Keep entries newer than this many days before --now.
        #[arg(long, default_value_t = 30)]
        since_days: i64,
    },
    /// Package metadata snapshots.
    FetchPackage {
        names: Vec<String>,
        /// Feed CSV as written by fetch-feed.
        #[arg(long)]
        from_feed: Option<PathBuf>,
        /// One package name per line.
        #[arg(long)]
        names_file: Option<PathBuf>,
        /// Also fetch the claimed source repository.
        #[arg(long)]
        with_repo: bool,
        /// Fill in dependents and status from the reference provider.
        #[arg(long)]
        enrich: bool,
        /// Skip unknown packages instead of failing.
        #[arg(long)]
        skip_missing: bool,
    },
    /// Repository metadata snapshot.
    FetchRepo { url: String },
    /// Reference provider record, optionally compared with a recomputation.
    FetchReference {
        name: String,
        /// Snapshot file to recompute the score from.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Malicious-package labels from an advisory directory.
    LabelsOsv {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value = "PyPI")]
        ecosystem: String,
    },
    /// Joins snapshots with labels into a corpus.
    Label {
        #[arg(long)]
        snapshots: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Treat unlabeled packages as benign instead of dropping them.
        #[arg(long)]
        assume_benign: bool,
    },
}

fn init_logging(verbose: u8) {
    use std::io::IsTerminal;
    use tracing_subscriber::filter::LevelFilter;
    let level = std::env::var("RUST_LOG")
        .ok()
        .and_then(|v| v.parse::<LevelFilter>().ok())
        .unwrap_or(match verbose {
            0 => LevelFilter::WARN,
            1 => LevelFilter::INFO,
            _ => LevelFilter::DEBUG,
        });
    // Repeated runs in one process keep the first subscriber.
    let _ = tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .without_time()
        .try_init();
}

#[cfg(feature = "live")]
fn default_network() -> Arc<dyn Transport> {
    Arc::new(rankguard_core::ingest::HttpTransport::default())
}

#[cfg(not(feature = "live"))]
fn default_network() -> Arc<dyn Transport> {
    Arc::new(NoNetwork)
}

/// Runs the command line and returns the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let offline = argv.iter().any(|a| a == "--offline");
    let network = if offline { Arc::new(NoNetwork) as Arc<dyn Transport> } else { default_network() };
    run_with_transport(argv, network)
}

/// As [`run`], with every network request going through `network`.
pub fn run_with_transport<I, S>(argv: I, network: Arc<dyn Transport>) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.common.verbose);
    match commands::dispatch(&cli, network) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                EXIT_USAGE
            } else {
                EXIT_DOMAIN
            }
        }
    }
}
