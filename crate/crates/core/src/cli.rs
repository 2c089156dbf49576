//! Command-line interface. Exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::apply::{denoise, dump_features, texture_separate, upsample, GuidanceMode, LayerSelector};
use crate::baseline::{bicubic_resize, guided_filter, joint_bilateral_upsample, GfParams, JbuParams};
use crate::error::{Error, Result};
use crate::eval::{benchmark_runtime, eval_dataset, model_filter, Baseline, EvalInput};
use crate::io::{read_image, read_manifest, write_image_with_maxval};
use crate::net::{deserialize, param_count, payload_offset, Model, NetworkConfig, SubNetwork};
use crate::tensor::Tensor;
use crate::train::{save_loss_csv, train, TaskSpec, TrainConfig};

#[derive(Parser, Debug)]
#[command(name = "djf", version, about = "Deep joint image filtering", arg_required_else_help = true)]
struct Cli {
    /// Worker threads (0 = all cores; 1 = deterministic single-thread mode)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a network on a manifest and write a checkpoint
    Train(TrainArgs),
    /// Filter an image pair with a trained model
    Apply(ApplyArgs),
    /// Iterative self-guided structure/texture separation
    Separate(SeparateArgs),
    /// Write the feature maps of one layer as PGM images
    Features(FeaturesArgs),
    /// Score a model or baseline on a manifest
    Eval(EvalArgs),
    /// Time a model or baseline on a synthetic image
    Bench(BenchArgs),
    /// Run a classical filter
    Baseline(BaselineArgs),
    /// Print the configuration and size of a checkpoint
    InspectCheckpoint(InspectArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum TaskKind {
    Upsample,
    Denoise,
}

#[derive(Args, Debug)]
struct TaskArgs {
    #[arg(long, value_enum, default_value_t = TaskKind::Upsample)]
    task: TaskKind,
    /// Upsampling factor
    #[arg(long, default_value_t = 8)]
    scale: usize,
    /// Noise variance on the [0, 1] scale
    #[arg(long = "noise-var", default_value_t = 1e-3)]
    noise_var: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl TaskArgs {
    fn spec(&self) -> TaskSpec {
        let spec = match self.task {
            TaskKind::Upsample => TaskSpec::upsample(self.scale),
            TaskKind::Denoise => TaskSpec::denoise(self.noise_var),
        };
        spec.with_seed(self.seed)
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    task: TaskArgs,
    /// NetworkConfig overrides: inline JSON or a JSON file
    #[arg(long)]
    config: Option<String>,
    /// TrainConfig overrides: inline JSON or a JSON file
    #[arg(long = "train-config")]
    train_config: Option<String>,
    /// Stop after this many SGD steps
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Loss curve CSV (default: <out>.loss.csv)
    #[arg(long = "loss-csv")]
    loss_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ApplyArgs {
    #[arg(value_enum)]
    kind: TaskKind,
    #[arg(long)]
    model: PathBuf,
    /// Low-resolution (upsample) or noisy (denoise) target image
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    guidance: PathBuf,
    #[arg(long, default_value_t = 8)]
    scale: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Fixed,
    Rolling,
}

#[derive(Args, Debug)]
struct SeparateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 3)]
    iterations: usize,
    #[arg(long = "guidance-mode", value_enum, default_value_t = ModeArg::Fixed)]
    guidance_mode: ModeArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BranchArg {
    Target,
    Guidance,
    Fusion,
}

#[derive(Args, Debug)]
struct FeaturesArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    guidance: PathBuf,
    #[arg(long, value_enum, default_value_t = BranchArg::Target)]
    subnetwork: BranchArg,
    /// Layer number, starting at 1
    #[arg(long, default_value_t = 1)]
    layer: usize,
    /// Output directory for feature_NNN.pgm
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BaselineKind {
    Bicubic,
    Nearest,
    Jbu,
    Gf,
}

#[derive(Args, Debug)]
struct FilterChoice {
    #[arg(long, conflicts_with = "baseline", required_unless_present = "baseline")]
    model: Option<PathBuf>,
    #[arg(long, value_enum)]
    baseline: Option<BaselineKind>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    task: TaskArgs,
    #[command(flatten)]
    filter: FilterChoice,
    /// JSON report path; a CSV with the same stem is written next to it
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    filter: FilterChoice,
    #[arg(long, default_value_t = 480)]
    height: usize,
    #[arg(long, default_value_t = 640)]
    width: usize,
    #[arg(long, default_value_t = 3)]
    repetitions: usize,
}

#[derive(Args, Debug)]
struct BaselineArgs {
    #[arg(value_enum)]
    kind: BaselineKind,
    /// Low-resolution target image
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    guidance: PathBuf,
    #[arg(long, default_value_t = 8)]
    scale: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[arg(long)]
    model: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match crate::parallel::with_threads(cli.threads, || execute(cli.command, cli.threads)) {
        Ok(Ok(())) => 0,
        Ok(Err(e)) | Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn json_arg<T: serde::de::DeserializeOwned>(arg: &str) -> Result<T> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Error::io(arg, e))?
    };
    serde_json::from_str(&text).map_err(|e| Error::config(format!("{arg}: {e}")))
}

fn load_model(path: &Path) -> Result<Model<f32>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    deserialize(&bytes)
}

/// 16-bit for single-channel maps, 8-bit for colour.
fn save(path: &Path, image: &Tensor<f32>) -> Result<()> {
    let maxval = if image.channels() == 1 { 65535 } else { 255 };
    write_image_with_maxval(path, image, maxval)
}

fn baseline_for(kind: BaselineKind, scale: usize) -> Baseline {
    match kind {
        BaselineKind::Bicubic => Baseline::Bicubic,
        BaselineKind::Nearest => Baseline::Nearest,
        BaselineKind::Jbu => Baseline::Jbu(JbuParams::for_scale(scale)),
        BaselineKind::Gf => Baseline::GuidedFilter(GfParams::for_scale(scale)),
    }
}

fn execute(command: Command, threads: usize) -> Result<()> {
    match command {
        Command::Train(a) => {
            let manifest = read_manifest(&a.manifest)?;
            let mut net: NetworkConfig = match &a.config {
                Some(c) => json_arg(c)?,
                None => NetworkConfig::default(),
            };
            let mut cfg: TrainConfig = match &a.train_config {
                Some(c) => json_arg(c)?,
                None => TrainConfig::default(),
            };
            net.seed = a.task.seed;
            cfg.seed = a.task.seed;
            cfg.threads = threads;
            if a.steps.is_some() {
                cfg.max_steps = a.steps;
            }
            let (bytes, losses) = train(&manifest, &a.task.spec(), &net, &cfg)?;
            std::fs::write(&a.out, &bytes).map_err(|e| Error::io(&a.out, e))?;
            let csv = a.loss_csv.unwrap_or_else(|| {
                let mut p = a.out.clone().into_os_string();
                p.push(".loss.csv");
                p.into()
            });
            save_loss_csv(&losses, &csv)?;
            if let (Some(first), Some(last)) = (losses.first(), losses.last()) {
                println!(
                    "{} steps, loss {:.6} -> {:.6}, wrote {}",
                    losses.len(),
                    first.loss,
                    last.loss,
                    a.out.display()
                );
            }
            Ok(())
        }
        Command::Apply(a) => {
            let model = load_model(&a.model)?;
            let target = read_image(&a.target)?;
            let guidance = read_image(&a.guidance)?;
            let out = match a.kind {
                TaskKind::Upsample => upsample(&model, &target, &guidance, a.scale)?,
                TaskKind::Denoise => denoise(&model, &target, &guidance)?,
            };
            save(&a.out, &out)
        }
        Command::Separate(a) => {
            let model = load_model(&a.model)?;
            let image = read_image(&a.input)?;
            let mode = match a.guidance_mode {
                ModeArg::Fixed => GuidanceMode::Fixed,
                ModeArg::Rolling => GuidanceMode::Rolling,
            };
            save(&a.out, &texture_separate(&model, &image, a.iterations, mode)?)
        }
        Command::Features(a) => {
            let model = load_model(&a.model)?;
            if a.layer == 0 {
                return Err(Error::InvalidArgument("layers are numbered from 1".into()));
            }
            let subnetwork = match a.subnetwork {
                BranchArg::Target => SubNetwork::Target,
                BranchArg::Guidance => SubNetwork::Guidance,
                BranchArg::Fusion => SubNetwork::Fusion,
            };
            let which = LayerSelector {
                subnetwork,
                layer: a.layer - 1,
            };
            let maps = dump_features(&model, &read_image(&a.target)?, &read_image(&a.guidance)?, which)?;
            std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
            for (i, m) in maps.iter().enumerate() {
                save(&a.out.join(format!("feature_{:03}.pgm", i + 1)), m)?;
            }
            println!("wrote {} maps to {}", maps.len(), a.out.display());
            Ok(())
        }
        Command::Eval(a) => {
            let manifest = read_manifest(&a.manifest)?;
            if manifest.is_empty() {
                return Err(Error::InvalidArgument("manifest has no entries".into()));
            }
            let spec = a.task.spec();
            let report = match (&a.filter.model, a.filter.baseline) {
                (Some(path), _) => {
                    let model = load_model(path)?;
                    eval_dataset(model_filter(&model), &manifest, &spec, &manifest.convention)?
                }
                (None, Some(kind)) => {
                    let b = baseline_for(kind, a.task.scale);
                    eval_dataset(|i: &EvalInput| b.run(i), &manifest, &spec, &manifest.convention)?
                }
                (None, None) => unreachable!("clap requires a filter"),
            };
            for s in &report.skipped {
                eprintln!("skipped {s}");
            }
            println!(
                "{} images: RMSE {:.4} ± {:.4} ({} skipped)",
                report.images.len(),
                report.mean,
                report.std,
                report.skipped.len()
            );
            if let Some(out) = a.out {
                std::fs::write(&out, report.to_json()).map_err(|e| Error::io(&out, e))?;
                let csv = out.with_extension("csv");
                std::fs::write(&csv, report.to_csv()).map_err(|e| Error::io(&csv, e))?;
            }
            Ok(())
        }
        Command::Bench(a) => {
            let result = match (&a.filter.model, a.filter.baseline) {
                (Some(path), _) => {
                    let model = load_model(path)?;
                    benchmark_runtime(model_filter(&model), a.height, a.width, threads, a.repetitions)?
                }
                (None, Some(kind)) => {
                    let b = baseline_for(kind, 8);
                    benchmark_runtime(move |i: &EvalInput| b.run(i), a.height, a.width, threads, a.repetitions)?
                }
                (None, None) => unreachable!("clap requires a filter"),
            };
            println!(
                "{}x{} on {} threads: median {:.4} s over {} runs",
                result.height,
                result.width,
                result.threads,
                result.median_seconds,
                result.samples.len()
            );
            Ok(())
        }
        Command::Baseline(a) => {
            let low = read_image(&a.target)?;
            let guidance = read_image(&a.guidance)?;
            if low.height() * a.scale != guidance.height() || low.width() * a.scale != guidance.width() {
                return Err(Error::shape(format!(
                    "target {}x{} times {} does not match guidance {}x{}",
                    low.height(),
                    low.width(),
                    a.scale,
                    guidance.height(),
                    guidance.width()
                )));
            }
            let out = match a.kind {
                BaselineKind::Bicubic => bicubic_resize(&low, guidance.height(), guidance.width())?,
                BaselineKind::Nearest => crate::baseline::nearest_upsample(&low, a.scale)?,
                BaselineKind::Jbu => joint_bilateral_upsample(&low, &guidance, &JbuParams::for_scale(a.scale))?,
                BaselineKind::Gf => {
                    let up = bicubic_resize(&low, guidance.height(), guidance.width())?;
                    let g = crate::apply::luminance(&guidance)?;
                    let chans = (0..up.channels())
                        .map(|c| guided_filter(&up.channel_tensor(c), &g, &GfParams::for_scale(a.scale)))
                        .collect::<Result<Vec<_>>>()?;
                    Tensor::concat_channels(&chans.iter().collect::<Vec<_>>())?
                }
            };
            save(&a.out, &out)
        }
        Command::InspectCheckpoint(a) => {
            let bytes = std::fs::read(&a.model).map_err(|e| Error::io(&a.model, e))?;
            let model: Model<f32> = deserialize(&bytes)?;
            let payload = bytes.len() - payload_offset(&bytes).expect("checkpoint parsed");
            let summary = serde_json::json!({
                "config": model.config(),
                "param_count": param_count(model.config()),
                "payload_bytes": payload,
                "file_bytes": bytes.len(),
            });
            println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
            Ok(())
        }
    }
}
