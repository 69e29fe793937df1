//! `genxss` — pipeline driver: generate obfuscated XSS payloads, validate
//! them, test them against a WAF, cluster the bypasses and refine WAF
//! rules with measured metrics.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Stable exit codes: 0 success, 1 runtime failure, 2 usage error,
/// 3 configuration error.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn runtime(message: String) -> Self {
        CliError { code: 1, message }
    }

    pub fn usage(message: String) -> Self {
        CliError { code: 2, message }
    }

    pub fn config(message: String) -> Self {
        CliError { code: 3, message }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<genxss_core::Error> for CliError {
    fn from(err: genxss_core::Error) -> Self {
        use genxss_core::Error;
        let code = match &err {
            Error::Config(_) | Error::MissingApiKey { .. } => 3,
            _ => 1,
        };
        CliError {
            code,
            message: err.to_string(),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(err: anyhow::Error) -> Self {
        CliError::runtime(format!("{err:#}"))
    }
}

#[derive(Parser)]
#[command(
    name = "genxss",
    version,
    about = "Offline XSS payload generation, WAF testing and rule refinement pipeline"
)]
struct Cli {
    /// Pipeline config file; relative paths inside it resolve against its
    /// directory.
    #[arg(long, global = true, default_value = "genxss.toml")]
    pub(crate) config: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate payloads via the configured provider and append them to a
    /// corpus.
    Generate(GenerateArgs),
    /// Statically validate every payload in a corpus.
    Validate(ValidateArgs),
    /// Run the deliberately vulnerable echo application.
    ServeApp(ServeAppArgs),
    /// Test validated payloads against a WAF target.
    Test(TestArgs),
    /// Cluster bypassing payloads.
    Cluster(ClusterArgs),
    /// One-shot WAF rule generation from cluster summaries.
    Rules(RulesArgs),
    /// Iterative rule refinement against bypass and benign corpora.
    Refine(RefineArgs),
    /// Confusion matrix and derived metrics from tested corpora.
    Metrics(MetricsArgs),
    /// Aggregated pipeline report (text + JSON).
    Report(ReportArgs),
    /// Run every stage in order, skipping stages whose outputs exist.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    /// How many payloads to request.
    #[arg(long)]
    pub(crate) count: Option<usize>,
    /// Attack type: reflected or dom_based.
    #[arg(long)]
    pub(crate) attack_type: Option<String>,
    /// Seed examples corpus (JSONL, validated payloads).
    #[arg(long)]
    pub(crate) examples: Option<PathBuf>,
    /// Corpus file to append to.
    #[arg(long)]
    pub(crate) out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ValidateArgs {
    /// Corpus to validate in place.
    #[arg(long)]
    pub(crate) corpus: Option<PathBuf>,
    /// Force one injection context instead of deriving it per attack type.
    #[arg(long)]
    pub(crate) context: Option<String>,
    /// Write the validated corpus here instead of in place.
    #[arg(long)]
    pub(crate) out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ServeAppArgs {
    /// Bind address, e.g. 127.0.0.1:8282.
    #[arg(long)]
    pub(crate) bind: Option<String>,
    /// Route config file (param -> context table).
    #[arg(long)]
    pub(crate) routes: Option<PathBuf>,
}

#[derive(Args)]
pub struct TestArgs {
    /// Target kind: embedded or remote.
    #[arg(long)]
    pub(crate) target: Option<String>,
    /// Ruleset for the embedded target.
    #[arg(long)]
    pub(crate) ruleset: Option<PathBuf>,
    /// Base URL for the remote target.
    #[arg(long)]
    pub(crate) url: Option<String>,
    /// Bounded in-flight requests for remote targets.
    #[arg(long)]
    pub(crate) concurrency: Option<usize>,
    /// Corpus of validated payloads.
    #[arg(long)]
    pub(crate) corpus: Option<PathBuf>,
    /// Write the tested corpus here instead of in place.
    #[arg(long)]
    pub(crate) out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ClusterArgs {
    /// Corpus to cluster (bypassed payloads are selected).
    #[arg(long)]
    pub(crate) corpus: Option<PathBuf>,
    /// Method: tfidf_hac or seq_dbscan.
    #[arg(long)]
    pub(crate) method: Option<String>,
    /// Ward distance threshold (tfidf_hac).
    #[arg(long)]
    pub(crate) threshold: Option<f64>,
    /// DBSCAN eps (seq_dbscan).
    #[arg(long)]
    pub(crate) eps: Option<f64>,
    /// DBSCAN min_samples (seq_dbscan).
    #[arg(long)]
    pub(crate) min_samples: Option<usize>,
    /// Cluster every payload instead of only bypassing ones.
    #[arg(long)]
    pub(crate) all: bool,
    /// Output JSON path.
    #[arg(long)]
    pub(crate) out: Option<PathBuf>,
}

#[derive(Args)]
pub struct RulesArgs {
    /// Cluster output JSON.
    #[arg(long)]
    pub(crate) clusters: Option<PathBuf>,
    /// Corpus the clusters were built from.
    #[arg(long)]
    pub(crate) corpus: Option<PathBuf>,
    /// Output ruleset path.
    #[arg(long)]
    pub(crate) out: Option<PathBuf>,
}

#[derive(Args)]
pub struct RefineArgs {
    /// Corpus of bypassing payloads.
    #[arg(long)]
    pub(crate) corpus: Option<PathBuf>,
    /// Benign samples (JSONL).
    #[arg(long)]
    pub(crate) benign: Option<PathBuf>,
    /// Cluster output JSON.
    #[arg(long)]
    pub(crate) clusters: Option<PathBuf>,
    /// Checkpoint directory.
    #[arg(long)]
    pub(crate) out_dir: Option<PathBuf>,
    /// Operator annotations JSON file.
    #[arg(long)]
    pub(crate) annotations: Option<PathBuf>,
}

#[derive(Args)]
pub struct MetricsArgs {
    /// Tested attack corpus (JSONL).
    #[arg(long)]
    pub(crate) attacks: PathBuf,
    /// Tested benign samples (JSONL).
    #[arg(long)]
    pub(crate) benign: PathBuf,
    /// Also write the JSON here.
    #[arg(long)]
    pub(crate) out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Tested corpus (JSONL).
    #[arg(long)]
    pub(crate) corpus: Option<PathBuf>,
    /// Cluster output JSON.
    #[arg(long)]
    pub(crate) clusters: Option<PathBuf>,
    /// Refinement state JSON.
    #[arg(long)]
    pub(crate) refine_state: Option<PathBuf>,
    /// Output prefix; writes <prefix>.json and <prefix>.txt.
    #[arg(long)]
    pub(crate) out: Option<PathBuf>,
}

#[derive(Args)]
pub struct PipelineArgs {
    /// Re-run every stage even when its outputs exist.
    #[arg(long)]
    pub(crate) force: bool,
    /// Work directory override.
    #[arg(long)]
    pub(crate) out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| -> Result<(), CliError> {
        let config = config::ResolvedConfig::load(&cli.config)?;
        match cli.command {
            Command::Generate(args) => commands::generate::run(&config, &args),
            Command::Validate(args) => commands::validate::run(&config, &args),
            Command::ServeApp(args) => commands::serve::run(&config, &args),
            Command::Test(args) => commands::test::run(&config, &args),
            Command::Cluster(args) => commands::cluster::run(&config, &args),
            Command::Rules(args) => commands::rules::run(&config, &args),
            Command::Refine(args) => commands::refine::run(&config, &args),
            Command::Metrics(args) => commands::metrics::run(&config, &args),
            Command::Report(args) => commands::report::run(&config, &args),
            Command::Pipeline(args) => commands::pipeline::run(&config, &args),
        }
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code)
        }
    }
}
