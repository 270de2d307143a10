//! Command-line entry point. Exit codes: 0 success, 1 runtime failure,
//! 2 usage or configuration error.

mod config;
mod ingest;
mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};

pub use config::{Concurrency, Config};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn runtime(e: impl std::fmt::Display) -> CliError {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cctld-amass",
    version,
    about = "Amass registered domains from CT logs and Common Crawl and measure zone coverage"
)]
pub struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true, env = "CCTLD_AMASS_CONFIG")]
    pub config: Option<PathBuf>,
    /// Reject names without a matching suffix rule and unknown TLDs.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest names from CT logs or a Common Crawl URL index.
    Ingest {
        #[command(subcommand)]
        source: IngestSource,
    },
    /// Merge all store segments into one.
    Compact,
    /// Write a report as CSV (and JSON with --json).
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
pub enum IngestSource {
    /// Fetch every configured log, or only those named with --log.
    Ct {
        #[arg(long = "log")]
        logs: Vec<String>,
    },
    /// Stream URL-index files of one crawl snapshot.
    Cc {
        /// Snapshot id such as CC-MAIN-2023-23.
        #[arg(long)]
        snapshot: String,
        files: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportKind {
    Coverage,
    Web,
    Lag,
    Buckets,
}

#[derive(Debug, clap::Args)]
pub struct ReportArgs {
    pub kind: ReportKind,
    /// Cut-off date; evidence must start before 00:00 UTC on this day.
    #[arg(long)]
    pub cutoff: Option<NaiveDate>,
    /// TLDs to report on; overrides the config list.
    #[arg(long = "tld")]
    pub tlds: Vec<String>,
    /// Zone file, as TLD=PATH or PATH when only one TLD is selected.
    #[arg(long = "zone")]
    pub zones: Vec<String>,
    /// Lag: directory of daily zone files named YYYY-MM-DD.
    /// Buckets: directory of per-TLD zone files named TLD[.ext].
    #[arg(long)]
    pub zone_dir: Option<PathBuf>,
    /// CSV of domain,ipv4 rows.
    #[arg(long)]
    pub a_records: Option<PathBuf>,
    /// CSV of ipv4,port rows.
    #[arg(long)]
    pub ports: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Also write a JSON mirror of every CSV.
    #[arg(long)]
    pub json: bool,
    /// Skip one header line in every input file.
    #[arg(long)]
    pub header: bool,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let path = cli.config.ok_or_else(|| {
        CliError::Usage("no config: pass --config or set CCTLD_AMASS_CONFIG".into())
    })?;
    let mut config = Config::load(&path)?;
    config.strict_mode |= cli.strict;
    match cli.command {
        Command::Ingest {
            source: IngestSource::Ct { logs },
        } => ingest::ingest_ct(&config, &logs),
        Command::Ingest {
            source: IngestSource::Cc { snapshot, files },
        } => ingest::ingest_cc(&config, &snapshot, &files),
        Command::Compact => ingest::compact(&config),
        Command::Report(args) => report::report(&config, &args),
    }
}
