use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;

use docbin::cli::{
    cmd_binarize, cmd_evaluate, cmd_pipeline, cmd_preprocess, BatchOutcome, EnhancerChoice, PipelineLayout,
    RunConfig, WORKERS_ENV,
};
use docbin::metrics::PseudoWeighting;
use docbin::wavelet::NormParams;

#[derive(Parser)]
#[command(name = "docbin", version, about = "Document image binarization and DIBCO-style evaluation")]
struct Cli {
    /// Worker threads for per-image parallelism (default: all cores).
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tile images and write the per-channel wavelet-preprocessed patches plus manifests.
    Preprocess {
        /// Directory with originals (and optional `<id>_gt` files).
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the full pipeline and write one mask per image.
    Binarize {
        input: PathBuf,
        /// Directory for the `<id>.png` masks.
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Score a directory of masks against ground truth and write a JSON report.
    Evaluate {
        /// Directory of predicted masks named `<id>.png`.
        #[arg(long)]
        pred: PathBuf,
        /// Directory holding `<id>_gt.*` (or plain `<id>.*`) ground truth.
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Preprocess, binarize and evaluate a dataset in one go.
    Pipeline {
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Report path (default: `<out>/report.json`).
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Enhancer {
    Identity,
    Baseline,
    External,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weighting {
    ContourDistance,
    Uniform,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 224)]
    patch_size: usize,
    #[arg(long, default_value_t = 512)]
    global_size: usize,
    /// Weight of each color channel output against the gray output.
    #[arg(long, default_value_t = 0.5)]
    omega: f64,
    /// Weight of the local prediction against the global one.
    #[arg(long, default_value_t = 0.5)]
    local_global_weight: f64,
    /// Threshold (unit scale) for per-channel ground truth.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, value_enum, default_value = "identity")]
    stage2: Enhancer,
    /// Directory of `<id>.manifest.json` for `--stage2 external`.
    #[arg(long)]
    stage2_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "identity")]
    local: Enhancer,
    #[arg(long)]
    local_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "identity")]
    global: Enhancer,
    #[arg(long)]
    global_dir: Option<PathBuf>,
    /// Fixed sigmoid width instead of the per-plane standard deviation.
    #[arg(long, requires = "norm_beta")]
    norm_alpha: Option<f64>,
    /// Fixed sigmoid center instead of the per-plane mean.
    #[arg(long, requires = "norm_alpha")]
    norm_beta: Option<f64>,
    /// Write intermediate images per input under this directory.
    #[arg(long)]
    debug_dump: Option<PathBuf>,
    /// GT file-name suffix; repeat for several (default: _gt, _GT).
    #[arg(long = "gt-suffix")]
    gt_suffixes: Vec<String>,
    #[arg(long, value_enum, default_value = "contour-distance")]
    pfm_weighting: Weighting,
}

fn choice(kind: Enhancer, dir: &Option<PathBuf>, flag: &str) -> Result<EnhancerChoice, String> {
    match (kind, dir) {
        (Enhancer::Identity, _) => Ok(EnhancerChoice::Identity),
        (Enhancer::Baseline, _) => Ok(EnhancerChoice::Baseline),
        (Enhancer::External, Some(d)) => Ok(EnhancerChoice::External { dir: d.clone() }),
        (Enhancer::External, None) => Err(format!("--{flag} external needs --{flag}-dir")),
    }
}

impl RunArgs {
    fn to_config(&self) -> Result<RunConfig, String> {
        let norm = match (self.norm_alpha, self.norm_beta) {
            (Some(alpha), Some(beta)) => {
                Some(NormParams::new(alpha, beta, 0.0, 255.0).map_err(|e| e.to_string())?)
            }
            _ => None,
        };
        let defaults = RunConfig::default();
        Ok(RunConfig {
            patch_size: self.patch_size,
            global_size: self.global_size,
            omega: self.omega,
            local_global_weight: self.local_global_weight,
            threshold: self.threshold,
            stage2: choice(self.stage2, &self.stage2_dir, "stage2")?,
            local: choice(self.local, &self.local_dir, "local")?,
            global: choice(self.global, &self.global_dir, "global")?,
            norm,
            debug_dump: self.debug_dump.clone(),
            gt_suffixes: if self.gt_suffixes.is_empty() {
                defaults.gt_suffixes
            } else {
                self.gt_suffixes.clone()
            },
            pseudo_weighting: match self.pfm_weighting {
                Weighting::ContourDistance => PseudoWeighting::ContourDistance,
                Weighting::Uniform => PseudoWeighting::Uniform,
            },
        })
    }
}

fn run(cli: Cli) -> Result<BatchOutcome, String> {
    match cli.command {
        Command::Preprocess { input, out, run } => {
            cmd_preprocess(&input, &out, &run.to_config()?).map_err(|e| e.to_string())
        }
        Command::Binarize { input, out, run } => {
            cmd_binarize(&input, &out, &run.to_config()?).map_err(|e| e.to_string())
        }
        Command::Evaluate { pred, gt, report, run } => {
            let (rep, outcome) = cmd_evaluate(&pred, &gt, &run.to_config()?).map_err(|e| e.to_string())?;
            rep.write(&report).map_err(|e| e.to_string())?;
            Ok(outcome)
        }
        Command::Pipeline { input, out, report, run } => {
            let layout = PipelineLayout::under(&out, report.as_deref());
            let (_, outcome) = cmd_pipeline(&input, &layout, &run.to_config()?).map_err(|e| e.to_string())?;
            Ok(outcome)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            error!("worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            error!("{e}");
            ExitCode::from(1)
        }
    }
}
