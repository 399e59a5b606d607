//! `strokepipe` — command-line front end for the two-tier stroke prediction
//! toolkit: synthetic corpus generation, feature extraction, SVM training and
//! prediction, leave-one-out evaluation, and the tier-1/tier-2 protocols.

mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "strokepipe", version, about = "Two-tier stroke prediction toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-class corpus (images, masks, manifest, risk table)
    Synth(SynthArgs),
    /// Extract feature vectors from a manifest into a CSV
    Extract(ExtractArgs),
    /// Train a kernel SVM on extracted features
    Train(TrainArgs),
    /// Predict labels and scores for extracted features with a saved model
    Predict(PredictArgs),
    /// Leave-one-out cross-validation over an image manifest
    Loocv(LoocvArgs),
    /// Tier-1 protocol: leave-one-out network evaluation on a risk table
    Tier1(Tier1Args),
    /// Tier-2 protocol: train on unmasked images, test on lesion-masked ones
    Tier2(Tier2Args),
}

#[derive(Args, Serialize)]
struct SynthArgs {
    /// Output directory for the corpus
    #[arg(long)]
    out_dir: std::path::PathBuf,
    /// What to generate
    #[arg(long, value_enum, default_value_t = SynthWhat::Both)]
    what: SynthWhat,
    #[arg(long, default_value_t = 15)]
    n_per_class: usize,
    /// Image size as WxH
    #[arg(long, default_value = "64x64")]
    size: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SynthWhat {
    Images,
    Risk,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FeatureArg {
    Haralick28,
    Nmf14,
}

#[derive(Args, Serialize)]
struct ExtractArgs {
    #[arg(long)]
    manifest: std::path::PathBuf,
    #[arg(long)]
    out: std::path::PathBuf,
    #[arg(long, value_enum)]
    feature: FeatureArg,
    /// Use the lesion-masked image variant where a mask exists
    #[arg(long, default_value_t = false)]
    masked: bool,
    #[command(flatten)]
    pre: PreprocessArgs,
    #[command(flatten)]
    nmf: NmfArgs,
    /// Project onto an existing basis instead of fitting one
    #[arg(long)]
    basis: Option<std::path::PathBuf>,
    /// Save the fitted basis here
    #[arg(long)]
    save_basis: Option<std::path::PathBuf>,
}

#[derive(Args, Serialize)]
struct PreprocessArgs {
    /// Texture-path bit depth
    #[arg(long, default_value_t = 4)]
    bpp: u8,
    /// Working resolution as WxH
    #[arg(long, default_value = "64x64")]
    resize: String,
    /// Brightest fraction that defines the intensity scale
    #[arg(long, default_value_t = 0.001)]
    top_fraction: f64,
}

#[derive(Args, Serialize)]
struct NmfArgs {
    #[arg(long, default_value_t = 14)]
    nmf_k: usize,
    #[arg(long, default_value_t = 500)]
    nmf_iters: usize,
    #[arg(long, default_value_t = 1e-5)]
    nmf_tol: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum KernelArg {
    Linear,
    Rbf,
    Mlp,
}

#[derive(Args, Serialize)]
struct KernelFlags {
    /// Kernel for the (primary) model
    #[arg(long, value_enum, default_value_t = KernelArg::Linear)]
    kernel: KernelArg,
    #[arg(long, default_value_t = 60.0)]
    rbf_sigma: f64,
    /// Sigmoid kernel parameters as "scale,offset"
    #[arg(long, default_value = "10000,-100", allow_hyphen_values = true)]
    mlp_params: String,
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Disable per-dimension min-max feature scaling
    #[arg(long, default_value_t = false)]
    no_scale: bool,
}

#[derive(Args, Serialize)]
struct TrainArgs {
    /// Feature CSV produced by `extract`
    #[arg(long)]
    features: std::path::PathBuf,
    /// Manifest supplying the labels (joined on sample id)
    #[arg(long)]
    manifest: std::path::PathBuf,
    #[arg(long)]
    out: std::path::PathBuf,
    #[command(flatten)]
    kernel: KernelFlags,
}

#[derive(Args, Serialize)]
struct PredictArgs {
    #[arg(long)]
    model: std::path::PathBuf,
    #[arg(long)]
    features: std::path::PathBuf,
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PipelineArg {
    Haralick,
    Nmf,
    Concat,
    Multilevel,
    Tier2,
}

#[derive(Args, Serialize)]
struct LoocvArgs {
    #[arg(long)]
    manifest: std::path::PathBuf,
    #[arg(long)]
    out: std::path::PathBuf,
    #[arg(long, value_enum)]
    pipeline: PipelineArg,
    #[command(flatten)]
    kernel: KernelFlags,
    /// Kernel for the NMF-feature model in the multilevel pipeline
    #[arg(long, value_enum, default_value_t = KernelArg::Linear)]
    kernel_b: KernelArg,
    #[arg(long, default_value_t = 40.0)]
    rbf_sigma_b: f64,
    #[arg(long, default_value = "10,-100", allow_hyphen_values = true)]
    mlp_params_b: String,
    #[command(flatten)]
    pre: PreprocessArgs,
    #[command(flatten)]
    nmf: NmfArgs,
}

#[derive(Args, Serialize)]
struct Tier1Args {
    #[arg(long)]
    risk_csv: std::path::PathBuf,
    /// Evaluation report path
    #[arg(long)]
    out: std::path::PathBuf,
    /// Also save a model trained on the full table
    #[arg(long)]
    out_model: Option<std::path::PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    mu0: f64,
    #[arg(long, default_value_t = 0.5)]
    mu_dec: f64,
    #[arg(long, default_value_t = 10.0)]
    mu_inc: f64,
    #[arg(long, default_value_t = 200)]
    max_epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    goal_mse: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct Tier2Args {
    #[arg(long)]
    manifest: std::path::PathBuf,
    #[arg(long)]
    out: std::path::PathBuf,
    #[command(flatten)]
    kernel: KernelFlags,
    #[command(flatten)]
    pre: PreprocessArgs,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("STROKEPIPE_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() {
    init_thread_pool();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Extract(a) => commands::extract(&a),
        Command::Train(a) => commands::train(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Loocv(a) => commands::loocv(&a),
        Command::Tier1(a) => commands::tier1(&a),
        Command::Tier2(a) => commands::tier2(&a),
    };
    if let Err(err) = result {
        let kind = err
            .downcast_ref::<strokepipe_core::Error>()
            .map_or("other", strokepipe_core::Error::kind);
        let payload = serde_json::json!({
            "error": { "kind": kind, "message": format!("{err:#}") }
        });
        eprintln!("{payload}");
        std::process::exit(1);
    }
}
