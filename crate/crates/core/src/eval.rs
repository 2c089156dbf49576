//! RMSE scoring, dataset evaluation and run-time benchmarking.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::apply::{joint_filter, luminance};
use crate::baseline::{
    bicubic_resize, guided_filter, joint_bilateral_upsample, nearest_downsample, nearest_upsample, GfParams,
    JbuParams,
};
use crate::error::{Error, Result};
use crate::io::{read_image, Manifest, SamplePair};
use crate::net::Model;
use crate::parallel::with_threads;
use crate::synth::{scene, SceneParams};
use crate::tensor::Tensor;
use crate::train::{synthesize_target, Task, TaskSpec};

/// How errors are reported.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConvention {
    /// Multiplier from normalized intensities to reported units.
    pub unit_scale: f64,
    /// Ignore pixels whose ground truth equals the pair's missing value.
    pub mask_missing: bool,
}

impl Default for EvalConvention {
    fn default() -> Self {
        EvalConvention {
            unit_scale: 1.0,
            mask_missing: false,
        }
    }
}

/// `sqrt(mean((unit_scale · (pred − gt))²))` over pixels where `mask` is non-zero.
pub fn rmse(pred: &Tensor<f32>, gt: &Tensor<f32>, mask: Option<&Tensor<f32>>, conv: &EvalConvention) -> Result<f64> {
    pred.expect_same_shape(gt, "rmse")?;
    if let Some(m) = mask {
        m.expect_same_shape(gt, "rmse mask")?;
    }
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for (i, (&p, &g)) in pred.data().iter().zip(gt.data()).enumerate() {
        if mask.is_some_and(|m| m.data()[i] == 0.0) {
            continue;
        }
        let d = conv.unit_scale * (p as f64 - g as f64);
        sum += d * d;
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidArgument("no valid pixels to score".into()));
    }
    Ok((sum / count as f64).sqrt())
}

/// Everything a filter under evaluation may look at.
#[derive(Clone, Debug)]
pub struct EvalInput {
    /// Degraded target at full resolution (bicubic-upsampled or noisy).
    pub target: Tensor<f32>,
    /// Low-resolution target; equal to `target` when `scale` is 1.
    pub low: Tensor<f32>,
    pub guidance: Tensor<f32>,
    pub scale: usize,
}

impl EvalInput {
    /// Degrades `gt` per `task`. Upsampling crops both images to a multiple
    /// of the scale first.
    pub fn synthesize(gt: &Tensor<f32>, guidance: &Tensor<f32>, task: &TaskSpec) -> Result<(EvalInput, Tensor<f32>)> {
        match task.task {
            Task::Upsample { scale } => {
                if scale == 0 {
                    return Err(Error::InvalidArgument("scale must be >= 1".into()));
                }
                let (h, w) = (gt.height() / scale * scale, gt.width() / scale * scale);
                if h == 0 || w == 0 {
                    return Err(Error::shape(format!(
                        "{}x{} image is smaller than scale {scale}",
                        gt.height(),
                        gt.width()
                    )));
                }
                let gt = gt.crop(0, 0, h, w)?;
                let guidance = guidance.crop(0, 0, h, w)?;
                let low = nearest_downsample(&gt, scale)?;
                let target = bicubic_resize(&low, h, w)?;
                Ok((
                    EvalInput {
                        target,
                        low,
                        guidance,
                        scale,
                    },
                    gt,
                ))
            }
            Task::Denoise { .. } => {
                let target = synthesize_target(gt, guidance, task)?;
                Ok((
                    EvalInput {
                        low: target.clone(),
                        target,
                        guidance: guidance.clone(),
                        scale: 1,
                    },
                    gt.clone(),
                ))
            }
        }
    }
}

/// Reference filters scored alongside the network.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Baseline {
    /// The degraded target itself: bicubic for upsampling, the noisy image
    /// for denoising.
    Bicubic,
    Nearest,
    Jbu(JbuParams),
    GuidedFilter(GfParams),
}

impl Baseline {
    pub fn name(&self) -> &'static str {
        match self {
            Baseline::Bicubic => "bicubic",
            Baseline::Nearest => "nearest",
            Baseline::Jbu(_) => "jbu",
            Baseline::GuidedFilter(_) => "gf",
        }
    }

    pub fn run(&self, input: &EvalInput) -> Result<Tensor<f32>> {
        match self {
            Baseline::Bicubic => Ok(input.target.clone()),
            Baseline::Nearest => nearest_upsample(&input.low, input.scale),
            Baseline::Jbu(p) => joint_bilateral_upsample(&input.low, &input.guidance, p),
            Baseline::GuidedFilter(p) => {
                let g = luminance(&input.guidance)?;
                let outs = (0..input.target.channels())
                    .map(|c| guided_filter(&input.target.channel_tensor(c), &g, p))
                    .collect::<Result<Vec<_>>>()?;
                Tensor::concat_channels(&outs.iter().collect::<Vec<_>>())
            }
        }
    }
}

/// The network as an evaluation filter.
pub fn model_filter(model: &Model<f32>) -> impl Fn(&EvalInput) -> Result<Tensor<f32>> + Sync + '_ {
    move |input| joint_filter(model, &input.target, &input.guidance)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageScore {
    pub name: String,
    pub rmse: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub images: Vec<ImageScore>,
    pub mean: f64,
    /// Population standard deviation of the per-image RMSEs.
    pub std: f64,
    /// Entries that could not be read or scored, with the reason.
    pub skipped: Vec<String>,
}

impl EvalReport {
    pub fn from_scores(dataset: impl Into<String>, images: Vec<ImageScore>, skipped: Vec<String>) -> Self {
        let n = images.len().max(1) as f64;
        let mean = images.iter().map(|s| s.rmse).sum::<f64>() / n;
        let var = images.iter().map(|s| (s.rmse - mean).powi(2)).sum::<f64>() / n;
        EvalReport {
            dataset: dataset.into(),
            images,
            mean,
            std: var.sqrt(),
            skipped,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("image,rmse,seconds\n");
        for s in &self.images {
            out.push_str(&format!("{},{},{:.6}\n", s.name.replace(',', "_"), s.rmse, s.seconds));
        }
        out
    }
}

fn score_pair(
    pair: &SamplePair,
    index: usize,
    filter: &(impl Fn(&EvalInput) -> Result<Tensor<f32>> + ?Sized),
    task: &TaskSpec,
    conv: &EvalConvention,
) -> Result<ImageScore> {
    let guidance = read_image(&pair.guidance_path)?;
    let gt = read_image(pair.ground_truth_path())?;
    let (input, gt) = EvalInput::synthesize(&gt, &guidance, &task.for_image(index))?;
    let start = Instant::now();
    let pred = filter(&input)?;
    let seconds = start.elapsed().as_secs_f64();
    let mask = conv.mask_missing.then(|| {
        let missing = pair.missing_value as f32;
        gt.map(|v| if v == missing { 0.0 } else { 1.0 })
    });
    let conv = EvalConvention {
        unit_scale: conv.unit_scale * pair.depth_scale,
        ..*conv
    };
    Ok(ImageScore {
        name: pair.ground_truth_path().display().to_string(),
        rmse: rmse(&pred, &gt, mask.as_ref(), &conv)?,
        seconds,
    })
}

/// Degrades every ground truth in the manifest per `task`, runs `filter`
/// and scores the result. Entries that fail are skipped and listed.
pub fn eval_dataset(
    filter: impl Fn(&EvalInput) -> Result<Tensor<f32>>,
    manifest: &Manifest,
    task: &TaskSpec,
    conv: &EvalConvention,
) -> Result<EvalReport> {
    task.validate()?;
    let mut images = Vec::new();
    let mut skipped = Vec::new();
    for (i, pair) in manifest.pairs.iter().enumerate() {
        match score_pair(pair, i, &filter, task, conv) {
            Ok(s) => images.push(s),
            Err(e) => skipped.push(format!("{}: {e}", pair.ground_truth_path().display())),
        }
    }
    if images.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no entries could be evaluated ({} skipped)",
            skipped.len()
        )));
    }
    Ok(EvalReport::from_scores(manifest.dataset.clone(), images, skipped))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub height: usize,
    pub width: usize,
    pub threads: usize,
    pub median_seconds: f64,
    pub samples: Vec<f64>,
}

/// Median wall-clock of `filter` on a synthetic `height × width`
/// upsampling input, after one warm-up run, on a pool of `threads` workers
/// (0 for the rayon default).
pub fn benchmark_runtime(
    filter: impl Fn(&EvalInput) -> Result<Tensor<f32>> + Send,
    height: usize,
    width: usize,
    threads: usize,
    repetitions: usize,
) -> Result<BenchmarkResult> {
    if repetitions < 3 {
        return Err(Error::InvalidArgument("benchmark needs at least 3 repetitions".into()));
    }
    let scale = [8, 4, 2, 1].into_iter().find(|s| height.is_multiple_of(*s) && width.is_multiple_of(*s)).unwrap();
    let s = scene(&SceneParams::new(height, width), 0);
    let (input, _) = EvalInput::synthesize(&s.depth, &s.rgb, &TaskSpec::upsample(scale))?;
    with_threads(threads, move || -> Result<BenchmarkResult> {
        filter(&input)?;
        let mut samples = Vec::with_capacity(repetitions);
        for _ in 0..repetitions {
            let start = Instant::now();
            std::hint::black_box(filter(&input)?);
            samples.push(start.elapsed().as_secs_f64());
        }
        Ok(BenchmarkResult {
            height,
            width,
            threads: rayon::current_num_threads(),
            median_seconds: median(&samples),
            samples,
        })
    })?
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
