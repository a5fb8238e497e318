//! `corpaudit`: sample corpora, serve annotation projects, compute audit
//! statistics, lint language codes and evaluate LangID filtering.
//!
//! Every subcommand writes files or stdout only. On failure a JSON object
//! `{"error": ..., "causes": [...]}` goes to stderr and the exit code is
//! nonzero (2 for usage errors, 1 otherwise).

mod audit;
mod codes;
mod langid;

use std::net::IpAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use corpaudit_core::CorpusKind;

#[derive(Debug, Parser)]
#[command(
    name = "corpaudit",
    version,
    about = "Audit the quality of web-mined multilingual corpora"
)]
pub struct Cli {
    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a reproducible audit sample from a corpus file
    Sample(SampleArgs),
    /// Run the local annotation service
    Serve(ServeArgs),
    /// Compute per-language statistics and aggregates
    Stats(StatsArgs),
    /// Rater agreement (Acc-n) between two annotation exports
    Agreement(AgreementArgs),
    /// Lint a dataset's language codes
    Codes(CodesArgs),
    /// Train, apply and evaluate the n-gram language identifier
    Langid {
        #[command(subcommand)]
        command: LangidCommand,
    },
    /// Full report: statistics plus language-code lint
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Corpus file: one sentence per line, or src<TAB>tgt for parallel (.gz accepted)
    #[arg(long)]
    pub corpus: PathBuf,
    /// Dataset name recorded in the sample
    #[arg(long)]
    pub dataset: String,
    /// Corpus kind: mono or parallel
    #[arg(long, default_value = "mono")]
    pub kind: CorpusKind,
    /// Declared language tag; give it twice (src, tgt) for parallel corpora
    #[arg(long = "lang", required = true, num_args = 1..=2)]
    pub langs: Vec<String>,
    /// Number of items to draw
    #[arg(short = 'n', long = "size", default_value_t = corpaudit_core::sampling::DEFAULT_SAMPLE_SIZE)]
    pub n: u64,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output JSONL file (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Directory holding the projects
    #[arg(long, env = "CORPAUDIT_ROOT")]
    pub root: PathBuf,
    /// Address to bind
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    /// Port to listen on
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
}

#[derive(Debug, Args)]
pub struct StatsInput {
    /// Directory of annotation export files (*.jsonl)
    #[arg(long, conflicts_with = "tables", required_unless_present = "tables")]
    pub annotations: Option<PathBuf>,
    /// Per-language statistics table (CSV); repeatable
    #[arg(long = "table", id = "tables")]
    pub tables: Vec<PathBuf>,
    /// Sentence counts as a dataset,lang,sentences CSV
    #[arg(long)]
    pub sizes: Option<PathBuf>,
    /// Dataset name (default: the export's corpus field, or the table's file stem)
    #[arg(long)]
    pub dataset: Option<String>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub input: StatsInput,
    /// Output directory for the report files
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub input: StatsInput,
    /// Code list to lint, as DATASET=FILE; repeatable
    #[arg(long = "codes", value_parser = parse_assignment)]
    pub codes: Vec<(String, PathBuf)>,
    /// Rules file replacing the built-in rules
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Output directory for the report files
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    /// Reference annotation export (JSONL)
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Second annotation export (JSONL) over the same items
    #[arg(long)]
    pub other: PathBuf,
    /// Granularity: 2, 4 or 6 classes (default: all three)
    #[arg(short = 'n', long = "classes", value_parser = clap::value_parser!(u8).range(2..=6))]
    pub classes: Option<u8>,
    /// Use only this rater's lines from the reference file
    #[arg(long)]
    pub ref_rater: Option<String>,
    /// Use only this rater's lines from the other file
    #[arg(long)]
    pub other_rater: Option<String>,
}

#[derive(Debug, Args)]
pub struct CodesArgs {
    /// Dataset whose rules apply
    #[arg(long)]
    pub dataset: String,
    /// File with one language code per line
    #[arg(long)]
    pub list: PathBuf,
    /// Rules file replacing the built-in rules
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Also write the findings as CSV to this file
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format printed to stdout: md or csv
    #[arg(long, default_value = "md", value_parser = ["md", "csv"])]
    pub format: String,
}

#[derive(Debug, Subcommand)]
pub enum LangidCommand {
    /// Train a model from one text file per language
    Train(TrainArgs),
    /// Predict the language of each input line
    Predict(PredictArgs),
    /// Decide which sentence pairs of a bitext to keep
    Filter(FilterArgs),
    /// Score filter decisions against human annotations
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of LANG.txt training files
    #[arg(long, required_unless_present = "inputs")]
    pub data: Option<PathBuf>,
    /// Training file as LANG=FILE; repeatable
    #[arg(long = "input", id = "inputs", value_parser = parse_assignment)]
    pub inputs: Vec<(String, PathBuf)>,
    /// Output model file (JSON)
    #[arg(long)]
    pub out: PathBuf,
    /// Add-alpha smoothing constant
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Highest character n-gram order
    #[arg(long, default_value_t = 4)]
    pub max_order: usize,
    /// Texts shorter than this many characters are low-confidence
    #[arg(long, default_value_t = 20)]
    pub min_length: usize,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file
    #[arg(long)]
    pub model: PathBuf,
    /// Text to classify
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    pub text: Option<String>,
    /// File with one text per line
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Model file
    #[arg(long)]
    pub model: PathBuf,
    /// Parallel corpus (src<TAB>tgt per line)
    #[arg(long)]
    pub corpus: PathBuf,
    /// Declared source language
    #[arg(long)]
    pub src: String,
    /// Declared target language
    #[arg(long)]
    pub tgt: String,
    /// Dataset whose code rules correct the declared tags
    #[arg(long)]
    pub dataset: Option<String>,
    /// Rules file replacing the built-in rules
    #[arg(long, requires = "dataset")]
    pub rules: Option<PathBuf>,
    /// Decisions output (JSONL, default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the kept pairs as TSV to this file
    #[arg(long)]
    pub kept: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Filter decisions (JSONL from `langid filter`)
    #[arg(long)]
    pub decisions: PathBuf,
    /// Annotation export (JSONL) covering the decided pairs
    #[arg(long)]
    pub annotations: PathBuf,
    /// Metrics CSV output (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_assignment(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.is_empty() && !v.is_empty() => Ok((k.to_string(), PathBuf::from(v))),
        _ => Err(format!("expected NAME=FILE, got {s:?}")),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Sample(args) => audit::sample(&args),
        Command::Serve(args) => audit::serve(&args),
        Command::Stats(args) => audit::stats(&args),
        Command::Agreement(args) => audit::agreement(&args),
        Command::Codes(args) => codes::codes(&args),
        Command::Langid { command } => langid::run(&command),
        Command::Report(args) => audit::report(&args),
    }
}

fn fail(error: &str, causes: Vec<String>, code: u8) -> ExitCode {
    let body = serde_json::json!({ "error": error, "causes": causes });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
            let first = lines.next().unwrap_or("usage error");
            let first = first.strip_prefix("error: ").unwrap_or(first).to_string();
            return fail(&first, lines.map(String::from).collect(), 2);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let causes = e.chain().skip(1).map(|c| c.to_string()).collect();
            fail(&e.to_string(), causes, 1)
        }
    }
}
