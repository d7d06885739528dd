mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ldrp_core::{DistanceKind, SamplingMode};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "ldrp",
    version,
    about = "LDRP face descriptor extraction and retrieval evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Describe every image under a corpus root and write a feature store.
    Extract(ExtractArgs),
    /// ARP, ARR, F-score and ANMRR versus the number of retrieved images.
    Evaluate(EvaluateArgs),
    /// CMC and ROC curves, or rank-1 accuracy for gallery/probe lists.
    Recognize(RecognizeArgs),
    /// Retrieval metrics of LDRP and LBP side by side over one corpus.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DescriptorKind {
    Ldrp,
    Lbp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Descriptor parameters; unset values take the defaults shown, or the values
/// recorded in a feature store.
#[derive(Debug, Args)]
pub struct DescriptorArgs {
    /// Descriptor family [default: ldrp].
    #[arg(long, value_enum)]
    pub descriptor: Option<DescriptorKind>,
    /// Number of directions N [default: 8].
    #[arg(long)]
    pub directions: Option<u32>,
    /// Smallest scale M1 [default: 3].
    #[arg(long)]
    pub m1: Option<u32>,
    /// Largest scale M2 [default: 6].
    #[arg(long)]
    pub m2: Option<u32>,
    /// LBP neighbor count P [default: 8].
    #[arg(long)]
    pub neighbors: Option<u32>,
    /// LBP radius R [default: 1].
    #[arg(long)]
    pub radius: Option<u32>,
    /// Neighbor sampling, round or bilinear [default: round].
    #[arg(long, value_parser = parse_sampling)]
    pub sampling: Option<SamplingMode>,
    /// Resize every image to WxH before describing it, or `none`.
    #[arg(long, value_parser = parse_resize, default_value = "64x64")]
    pub resize: Resize,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resize(pub Option<(usize, usize)>);

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub root: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// `csv` writes a plain table instead of a binary feature store.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    pub descriptor: DescriptorArgs,
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Feature store written by `extract`.
    #[arg(long, conflicts_with = "root", required_unless_present = "root")]
    pub store: Option<PathBuf>,
    /// Corpus root, described on the fly.
    #[arg(long)]
    pub root: Option<PathBuf>,
    #[command(flatten)]
    pub descriptor: DescriptorArgs,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_parser = parse_distance, default_value = "chisq")]
    pub distance: DistanceKind,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Numbers of retrieved images, e.g. `1,2,5` or `1-10`.
    #[arg(long, value_parser = parse_n_list, default_value = "5")]
    pub n: NList,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RecognizeArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Highest CMC rank.
    #[arg(long, default_value_t = 10)]
    pub max_rank: usize,
    /// Gallery image paths, one per line, as recorded in the store.
    #[arg(long, requires = "probe_list")]
    pub gallery_list: Option<PathBuf>,
    /// Probe image paths, one per line, as recorded in the store.
    #[arg(long, requires = "gallery_list")]
    pub probe_list: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub root: PathBuf,
    #[arg(long, value_parser = parse_n_list, default_value = "5")]
    pub n: NList,
    #[command(flatten)]
    pub descriptor: DescriptorArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NList(pub Vec<usize>);

fn parse_sampling(s: &str) -> Result<SamplingMode, String> {
    s.parse()
}

fn parse_distance(s: &str) -> Result<DistanceKind, String> {
    s.parse()
}

fn parse_resize(s: &str) -> Result<Resize, String> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(Resize(None));
    }
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH or `none`, got `{s}`"))?;
    let dim = |v: &str| match v.trim().parse::<usize>() {
        Ok(d) if d > 0 => Ok(d),
        _ => Err(format!("invalid size `{s}`")),
    };
    Ok(Resize(Some((dim(w)?, dim(h)?))))
}

fn parse_n_list(s: &str) -> Result<NList, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |v: &str| match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!("`{v}` is not a positive integer")),
        };
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty range `{part}`"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err("at least one value is required".into());
    }
    Ok(NList(out))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Extract(args) => commands::extract(&args),
        Command::Evaluate(args) => commands::evaluate(&args),
        Command::Recognize(args) => commands::recognize(&args),
        Command::Compare(args) => commands::compare(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
