mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::List;

/// Synthetic series generation, image-space encoding, optimal-scale solving
/// and rescaled forecast evaluation.
#[derive(Debug, Parser)]
#[command(name = "imgts", version, about)]
pub struct Cli {
    /// Base seed for every randomized step; chosen from the clock and
    /// recorded in the snapshot when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Directory for outputs and the resolved-config snapshot [default: out]
    #[arg(long, global = true, env = "IMGTS_OUT_DIR")]
    pub out_dir: Option<String>,

    /// Worker threads; 0 uses all cores, 1 runs sequentially [default: 0]
    #[arg(long, global = true, env = "IMGTS_THREADS")]
    pub threads: Option<usize>,

    /// Settings file with `key = value` lines under `[run]` and
    /// `[<command>]` sections. Flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic series CSVs and a manifest.
    Generate(GenerateArgs),
    /// Encode a CSV series into P5 graymaps plus a sidecar.
    Encode(EncodeArgs),
    /// Decode graymaps back into a CSV series.
    Decode(DecodeArgs),
    /// Solve the optimal maximum scale over an (h, k) grid.
    SolveMs(SolveMsArgs),
    /// Score a registered model on a CSV dataset with rescaled metrics.
    Evaluate(EvaluateArgs),
    /// Apply one robustness perturbation to a CSV series.
    Perturb(PerturbArgs),
    /// Print the registered forecasters.
    ListModels(SpaceArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Encode(_) => "encode",
            Command::Decode(_) => "decode",
            Command::SolveMs(_) => "solve-ms",
            Command::Evaluate(_) => "evaluate",
            Command::Perturb(_) => "perturb",
            Command::ListModels(_) => "list-models",
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Number of series [default: 10]
    #[arg(short, long)]
    pub n: Option<usize>,
    /// Series length [default: 1024]
    #[arg(long)]
    pub length: Option<usize>,
    /// Probability of the periodic hypothesis [default: 0.5]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Stream index of the first series [default: 0]
    #[arg(long)]
    pub first_index: Option<u64>,
    /// Allowed behaviours: `all` or a list of ifftb, pwb, rwb, lgb, twdb [default: all]
    #[arg(long)]
    pub behaviors: Option<String>,
    /// Observation noise: `rel:<factor>` of the clean signal std or `abs:<sigma>` [default: rel:0.05]
    #[arg(long)]
    pub noise: Option<config::Noise>,
    /// Maximum number of waves per series [default: 8]
    #[arg(long)]
    pub pwb_k_max: Option<usize>,
    /// Random-walk increment std [default: 1]
    #[arg(long)]
    pub rwb_sigma: Option<f64>,
    /// Apply the data augmentations [default: true]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub augment: Option<bool>,
}

#[derive(Debug, Args, Clone)]
pub struct SpaceArgs {
    /// Image height (rows) [default: 128]
    #[arg(long)]
    pub h: Option<usize>,
    /// Maximum scale [default: 3.5]
    #[arg(long)]
    pub ms: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Input CSV series.
    #[arg(long)]
    pub input: Option<String>,
    /// Output stem name inside the output directory [default: input file stem]
    #[arg(long)]
    pub name: Option<String>,
    #[command(flatten)]
    pub space: SpaceArgs,
    /// Z-score each channel before encoding; statistics go in the sidecar [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub normalize: Option<bool>,
    /// Double the temporal resolution by linear interpolation [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub interpolate: Option<bool>,
    /// Gaussian-blur the image, producing a soft graymap [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub blur: Option<bool>,
    /// Odd blur kernel extent in rows and columns [default: 31]
    #[arg(long)]
    pub blur_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Image stem (`<stem>.meta`, `<stem>.ch0.pgm`, ...); the `.meta` or a
    /// channel file path is accepted too.
    #[arg(long)]
    pub input: Option<String>,
    /// Output CSV name inside the output directory [default: <stem>.decoded.csv]
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct SolveMsArgs {
    /// Image heights [default: 32,64,128,256,512]
    #[arg(long)]
    pub h: Option<List<usize>>,
    /// Variance scales [default: 1,1.5,2]
    #[arg(long)]
    pub k: Option<List<f64>>,
    /// Where the variance scale enters the stationarity condition:
    /// `consistent` or `mixed` [default: consistent]
    #[arg(long)]
    pub scaling: Option<config::ScalingArg>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Dataset CSV.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Registered model id (see list-models) [default: persistence]
    #[arg(long)]
    pub model: Option<String>,
    /// Lookback length [default: 512]
    #[arg(long)]
    pub lookback: Option<usize>,
    /// Forecast horizons [default: 96,192,336,720]
    #[arg(long)]
    pub horizons: Option<List<usize>>,
    /// Rescale factors [default: 0.5,0.66,1,1.5,2]
    #[arg(long)]
    pub rescale: Option<List<f64>>,
    /// Window stride; 0 uses the horizon [default: 0]
    #[arg(long)]
    pub stride: Option<usize>,
    /// Scenarios: none, gn:<std>, harmonic[:<amp>[:<freq>]], dm:<p> [default: none]
    #[arg(long)]
    pub perturb: Option<List<config::Spec>>,
    /// Z-score each channel of the dataset first [default: true]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub standardize: Option<bool>,
    #[command(flatten)]
    pub space: SpaceArgs,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    /// Input CSV series.
    #[arg(long)]
    pub input: Option<String>,
    /// Scenario: none, gn:<std>, harmonic[:<amp>[:<freq>]], dm:<p>
    #[arg(long)]
    pub spec: Option<config::Spec>,
    /// Output CSV name inside the output directory [default: <stem>.<spec>.csv]
    #[arg(long)]
    pub name: Option<String>,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
