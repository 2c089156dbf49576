//! Training: degraded-target synthesis, patch sampling, the squared loss and
//! mini-batch SGD with momentum.
//!
//! All three sub-networks are updated together from one combined backward
//! pass per step. Per-patch gradients are computed in parallel and summed in
//! batch order, so a run is bitwise reproducible for a given seed whatever
//! the thread count.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{bicubic_resize, nearest_downsample};
use crate::error::{Error, Result};
use crate::io::{load_pairs, Manifest};
use crate::net::{backward_params, build_network, forward, serialize, Model, NetworkConfig, SubNets};
use crate::parallel::with_threads;
use crate::tensor::{Real, Tensor};

/// How the degraded target is produced from the ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Nearest-neighbour decimation by `scale`, then bicubic back to full size.
    Upsample { scale: usize },
    /// Additive zero-mean Gaussian noise of the given variance on the [0, 1]
    /// scale, clamped to [0, 1].
    Denoise { variance: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaskSpec {
    pub task: Task,
    pub seed: u64,
}

impl TaskSpec {
    pub fn upsample(scale: usize) -> Self {
        TaskSpec {
            task: Task::Upsample { scale },
            seed: 0,
        }
    }

    pub fn denoise(variance: f64) -> Self {
        TaskSpec {
            task: Task::Denoise { variance },
            seed: 0,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        TaskSpec { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        match self.task {
            Task::Upsample { scale } if scale == 0 => {
                Err(Error::InvalidArgument("upsampling scale must be >= 1".into()))
            }
            Task::Denoise { variance } if !(variance >= 0.0 && variance.is_finite()) => Err(
                Error::InvalidArgument(format!("noise variance {variance} must be >= 0")),
            ),
            _ => Ok(()),
        }
    }

    /// The spec for the `index`-th image of a dataset: same task, own noise seed.
    pub fn for_image(&self, index: usize) -> TaskSpec {
        TaskSpec {
            task: self.task,
            seed: mix_seed(self.seed, index as u64),
        }
    }
}

fn mix_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Builds the degraded full-resolution target for `gt`.
pub fn synthesize_target<T: Real>(gt: &Tensor<T>, guidance: &Tensor<T>, task: &TaskSpec) -> Result<Tensor<T>> {
    task.validate()?;
    if (gt.height(), gt.width()) != (guidance.height(), guidance.width()) {
        return Err(Error::shape(format!(
            "ground truth {}x{} vs guidance {}x{}",
            gt.height(),
            gt.width(),
            guidance.height(),
            guidance.width()
        )));
    }
    match task.task {
        Task::Upsample { scale } => {
            let low = nearest_downsample(gt, scale)?;
            bicubic_resize(&low, gt.height(), gt.width())
        }
        Task::Denoise { variance } => {
            if variance == 0.0 {
                return Ok(gt.clone());
            }
            let normal = Normal::new(0.0, variance.sqrt())
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(task.seed);
            Ok(gt.map(|v| {
                let n = normal.sample(&mut rng);
                T::lit((v.as_f64() + n).clamp(0.0, 1.0))
            }))
        }
    }
}

/// Mean squared error over all elements.
pub fn loss<T: Real>(output: &Tensor<T>, gt: &Tensor<T>) -> Result<T> {
    output.expect_same_shape(gt, "loss")?;
    let n = output.len().max(1);
    let s: T = output
        .data()
        .iter()
        .zip(gt.data())
        .map(|(&o, &g)| (o - g) * (o - g))
        .sum();
    Ok(s / T::lit(n as f64))
}

/// Gradient of [`loss`]: `2 (output − gt) / N`.
pub fn loss_grad<T: Real>(output: &Tensor<T>, gt: &Tensor<T>) -> Result<Tensor<T>> {
    output.expect_same_shape(gt, "loss gradient")?;
    let scale = T::lit(2.0 / output.len().max(1) as f64);
    output.sub(gt).map(|d| d.map(|v| v * scale))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub patch_size: usize,
    /// Number of training patches drawn once and revisited every epoch.
    pub patches_total: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    /// Fraction of all steps after which the learning rate is multiplied by
    /// `lr_decay_factor`.
    pub lr_decay_at: f64,
    pub lr_decay_factor: f64,
    pub seed: u64,
    /// Worker threads; 0 uses the rayon default.
    pub threads: usize,
    /// Stop after this many steps even if epochs remain.
    pub max_steps: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            patch_size: 32,
            patches_total: 160_000,
            batch_size: 128,
            learning_rate: 1e-3,
            momentum: 0.9,
            weight_decay: 1e-4,
            epochs: 10,
            lr_decay_at: 0.8,
            lr_decay_factor: 0.1,
            seed: 0,
            threads: 0,
            max_steps: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, net: &NetworkConfig) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be >= 1"));
        }
        if self.patch_size < net.f1 {
            return Err(Error::config(format!(
                "patch size {} is smaller than the first filter ({})",
                self.patch_size, net.f1
            )));
        }
        Ok(())
    }

    pub fn steps_per_epoch(&self) -> usize {
        if self.patches_total == 0 {
            0
        } else {
            (self.patches_total / self.batch_size).max(1)
        }
    }

    pub fn total_steps(&self) -> usize {
        let all = self.epochs * self.steps_per_epoch();
        self.max_steps.map_or(all, |m| m.min(all))
    }

    /// Optimizer settings for step `step` (0-based) with the decay schedule applied.
    pub fn sgd_at(&self, step: usize) -> SgdParams {
        let decay_step = (self.lr_decay_at * self.total_steps() as f64).ceil() as usize;
        let lr = if self.lr_decay_at < 1.0 && step >= decay_step {
            self.learning_rate * self.lr_decay_factor
        } else {
            self.learning_rate
        };
        SgdParams {
            learning_rate: lr,
            momentum: self.momentum,
            weight_decay: self.weight_decay,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SgdParams {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
}

/// Velocity buffers mirroring the model's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState<T = f32> {
    pub velocity: SubNets<T>,
}

impl<T: Real> OptimizerState<T> {
    pub fn new(model: &Model<T>) -> Self {
        OptimizerState {
            velocity: model.layers.zeros_like(),
        }
    }
}

/// `v ← momentum·v − lr·(g + weight_decay·w)`, then `w ← w + v`.
pub fn sgd_step<T: Real>(
    model: &mut Model<T>,
    grads: &SubNets<T>,
    state: &mut OptimizerState<T>,
    params: &SgdParams,
) -> Result<()> {
    if !model.layers.same_structure(grads) || !model.layers.same_structure(&state.velocity) {
        return Err(Error::shape("gradient or velocity structure differs from the model"));
    }
    let (lr, mu, wd) = (
        T::lit(params.learning_rate),
        T::lit(params.momentum),
        T::lit(params.weight_decay),
    );
    let layers = model
        .layers
        .layers_mut()
        .zip(grads.layers())
        .zip(state.velocity.layers_mut());
    for ((w, g), v) in layers {
        let wv = w.params_mut().zip(g.params()).zip(v.params_mut());
        for ((w, &g), v) in wv {
            *v = mu * *v - lr * (g + wd * *w);
            *w += *v;
        }
    }
    Ok(())
}

/// A clean image with its guidance, before degradation.
#[derive(Clone, Debug)]
pub struct ImagePair<T = f32> {
    pub guidance: Tensor<T>,
    pub gt: Tensor<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Patch<T = f32> {
    pub target: Tensor<T>,
    pub guidance: Tensor<T>,
    pub gt: Tensor<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatchSite {
    pub image: usize,
    pub y: usize,
    pub x: usize,
}

/// Degraded full-resolution images ready for patch cutting.
#[derive(Clone, Debug)]
pub struct TrainingSet<T = f32> {
    targets: Vec<Tensor<T>>,
    pairs: Vec<ImagePair<T>>,
}

impl<T: Real> TrainingSet<T> {
    /// Degrades every image once, at full resolution.
    pub fn prepare(pairs: Vec<ImagePair<T>>, task: &TaskSpec) -> Result<Self> {
        let targets = pairs
            .iter()
            .enumerate()
            .map(|(i, p)| synthesize_target(&p.gt, &p.guidance, &task.for_image(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrainingSet { targets, pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `count` uniformly random patch positions.
    pub fn sites(&self, count: usize, patch: usize, rng: &mut impl Rng) -> Result<Vec<PatchSite>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        if self.pairs.is_empty() {
            return Err(Error::InvalidArgument("no training images".into()));
        }
        for (i, p) in self.pairs.iter().enumerate() {
            if p.gt.height() < patch || p.gt.width() < patch {
                return Err(Error::InvalidArgument(format!(
                    "image {i} ({}x{}) is smaller than the {patch}x{patch} patch",
                    p.gt.height(),
                    p.gt.width()
                )));
            }
        }
        Ok((0..count)
            .map(|_| {
                let image = rng.random_range(0..self.pairs.len());
                let gt = &self.pairs[image].gt;
                PatchSite {
                    image,
                    y: rng.random_range(0..=gt.height() - patch),
                    x: rng.random_range(0..=gt.width() - patch),
                }
            })
            .collect())
    }

    pub fn patch(&self, site: PatchSite, size: usize) -> Result<Patch<T>> {
        let p = &self.pairs[site.image];
        Ok(Patch {
            target: self.targets[site.image].crop(site.y, site.x, size, size)?,
            guidance: p.guidance.crop(site.y, site.x, size, size)?,
            gt: p.gt.crop(site.y, site.x, size, size)?,
        })
    }
}

/// Draws `cfg.patches_total` aligned (target, guidance, ground truth) patches.
pub fn sample_patches<T: Real>(pairs: &[ImagePair<T>], task: &TaskSpec, cfg: &TrainConfig) -> Result<Vec<Patch<T>>> {
    let set = TrainingSet::prepare(pairs.to_vec(), task)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    set.sites(cfg.patches_total, cfg.patch_size, &mut rng)?
        .into_iter()
        .map(|s| set.patch(s, cfg.patch_size))
        .collect()
}

/// Mean loss and mean parameter gradient over a batch of patches.
pub fn batch_gradients<T: Real>(model: &Model<T>, batch: &[Patch<T>]) -> Result<(f64, SubNets<T>)> {
    let per_patch: Vec<(T, SubNets<T>)> = batch
        .par_iter()
        .map(|p| {
            let (out, trace) = forward(model, &p.target, &p.guidance, true)?;
            let l = loss(&out, &p.gt)?;
            let g = loss_grad(&out, &p.gt)?;
            let grads = backward_params(model, &trace.expect("trace kept"), &g)?;
            Ok((l, grads))
        })
        .collect::<Result<_>>()?;
    let mut total = model.layers.zeros_like();
    let mut loss_sum = 0.0;
    let inv = T::lit(1.0 / batch.len().max(1) as f64);
    for (l, g) in &per_patch {
        loss_sum += l.as_f64();
        total.add_scaled(inv, g);
    }
    Ok((loss_sum / batch.len().max(1) as f64, total))
}

/// Mean loss of the model over a set of patches.
pub fn evaluate_loss<T: Real>(model: &Model<T>, patches: &[Patch<T>]) -> Result<f64> {
    let losses: Vec<f64> = patches
        .par_iter()
        .map(|p| {
            let (out, _) = forward(model, &p.target, &p.guidance, false)?;
            Ok(loss(&out, &p.gt)?.as_f64())
        })
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub iteration: usize,
    pub loss: f64,
    pub seconds: f64,
}

pub fn write_loss_csv(records: &[LossRecord], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "iteration,loss,seconds")?;
    for r in records {
        writeln!(out, "{},{},{:.6}", r.iteration, r.loss, r.seconds)?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: Model<f32>,
    pub losses: Vec<LossRecord>,
    /// Sum over steps of each sub-network's gradient L2 norm (target, guidance, fusion).
    pub gradient_norms: [f64; 3],
}

impl TrainOutcome {
    pub fn checkpoint(&self) -> Vec<u8> {
        serialize(&self.model)
    }
}

/// Trains a freshly initialised network on in-memory image pairs.
///
/// `observer` sees every loss record as it is produced.
pub fn train_pairs(
    pairs: Vec<ImagePair<f32>>,
    task: &TaskSpec,
    net: &NetworkConfig,
    cfg: &TrainConfig,
    observer: impl FnMut(&LossRecord) + Send,
) -> Result<TrainOutcome> {
    let model = build_network::<f32>(net)?;
    train_model(model, pairs, task, cfg, observer)
}

/// Continues training an existing model.
pub fn train_model(
    mut model: Model<f32>,
    pairs: Vec<ImagePair<f32>>,
    task: &TaskSpec,
    cfg: &TrainConfig,
    mut observer: impl FnMut(&LossRecord) + Send,
) -> Result<TrainOutcome> {
    cfg.validate(model.config())?;
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("training needs at least one image pair".into()));
    }
    with_threads(cfg.threads, move || {
        let set = TrainingSet::prepare(pairs, task)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut sites = set.sites(cfg.patches_total, cfg.patch_size, &mut rng)?;
        let mut state = OptimizerState::new(&model);
        let mut losses = Vec::with_capacity(cfg.total_steps());
        let mut norms = [0.0f64; 3];
        let batch = cfg.batch_size.min(cfg.patches_total.max(1));
        let start = Instant::now();
        let total = cfg.total_steps();
        let mut step = 0;
        for _ in 0..cfg.epochs {
            sites.shuffle(&mut rng);
            for b in 0..cfg.steps_per_epoch() {
                if step == total {
                    break;
                }
                let patches = sites[b * batch..(b + 1) * batch]
                    .iter()
                    .map(|&s| set.patch(s, cfg.patch_size))
                    .collect::<Result<Vec<_>>>()?;
                let (l, grads) = batch_gradients(&model, &patches)?;
                if !l.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "training loss at iteration {step} is {l}"
                    )));
                }
                for (n, g) in norms.iter_mut().zip([&grads.target, &grads.guidance, &grads.fusion]) {
                    let sq: f64 = g.iter().flat_map(|l| l.params()).map(|&v| (v as f64) * (v as f64)).sum();
                    *n += sq.sqrt();
                }
                sgd_step(&mut model, &grads, &mut state, &cfg.sgd_at(step))?;
                let record = LossRecord {
                    iteration: step,
                    loss: l,
                    seconds: start.elapsed().as_secs_f64(),
                };
                observer(&record);
                losses.push(record);
                step += 1;
            }
        }
        Ok(TrainOutcome {
            model,
            losses,
            gradient_norms: norms,
        })
    })?
}

/// Loads the manifest's images and trains on them. Returns the checkpoint
/// bytes and the loss curve.
pub fn train(
    manifest: &Manifest,
    task: &TaskSpec,
    net: &NetworkConfig,
    cfg: &TrainConfig,
) -> Result<(Vec<u8>, Vec<LossRecord>)> {
    if manifest.pairs.is_empty() {
        return Err(Error::InvalidArgument("manifest has no entries".into()));
    }
    let pairs = load_pairs(manifest)?;
    let outcome = train_pairs(pairs, task, net, cfg, |_| {})?;
    Ok((outcome.checkpoint(), outcome.losses))
}

/// Writes a loss curve CSV file.
pub fn save_loss_csv(records: &[LossRecord], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_loss_csv(records, std::io::BufWriter::new(f)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::WeightInit;
    use crate::synth::{scenes, SceneParams};

    fn pairs(n: usize, size: usize) -> Vec<ImagePair<f32>> {
        scenes(&SceneParams::new(size, size), n, 5)
            .into_iter()
            .map(|s| ImagePair {
                guidance: s.rgb,
                gt: s.depth,
            })
            .collect()
    }

    #[test]
    fn denoise_zero_variance_is_identity() {
        let p = &pairs(1, 16)[0];
        let t = synthesize_target(&p.gt, &p.guidance, &TaskSpec::denoise(0.0)).unwrap();
        assert_eq!(t, p.gt);
    }

    #[test]
    fn denoise_is_seeded() {
        let p = &pairs(1, 16)[0];
        let spec = TaskSpec::denoise(1e-3).with_seed(9);
        let a = synthesize_target(&p.gt, &p.guidance, &spec).unwrap();
        let b = synthesize_target(&p.gt, &p.guidance, &spec).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, p.gt);
        let c = synthesize_target(&p.gt, &p.guidance, &spec.with_seed(10)).unwrap();
        assert_ne!(a, c);
        assert!(a.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn upsample_target_composes_baselines() {
        let gt = Tensor::<f64>::from_fn(1, 4, 4, |_, y, x| (y * 4 + x) as f64 / 15.0);
        let g = Tensor::<f64>::zeros(3, 4, 4);
        let t = synthesize_target(&gt, &g, &TaskSpec::upsample(2)).unwrap();
        let expect = bicubic_resize(&nearest_downsample(&gt, 2).unwrap(), 4, 4).unwrap();
        assert_eq!(t, expect);
        assert!(synthesize_target(&Tensor::<f64>::zeros(1, 5, 4), &Tensor::zeros(3, 5, 4), &TaskSpec::upsample(2)).is_err());
    }

    #[test]
    fn loss_examples() {
        let a = Tensor::<f64>::filled(1, 2, 3, 1.5);
        assert_eq!(loss(&a, &a).unwrap(), 0.0);
        assert!(loss_grad(&a, &a).unwrap().data().iter().all(|&v| v == 0.0));
        let b = Tensor::<f64>::filled(1, 2, 3, -0.5);
        assert_eq!(loss(&a, &b).unwrap(), 4.0);
        assert!(loss(&a, &Tensor::zeros(1, 3, 2)).is_err());
    }

    #[test]
    fn loss_gradient_passes_grad_check() {
        let gt = Tensor::<f64>::from_fn(1, 3, 3, |_, y, x| (y as f64 - x as f64) * 0.3);
        let out0: Vec<f64> = (0..9).map(|i| (i as f64).sin()).collect();
        let err = crate::gradcheck::grad_check(
            &out0,
            1e-4,
            |p| loss(&Tensor::new(1, 3, 3, p.to_vec()).unwrap(), &gt).unwrap(),
            |p| loss_grad(&Tensor::new(1, 3, 3, p.to_vec()).unwrap(), &gt).unwrap().into_data(),
        )
        .unwrap();
        assert!(err.max_entry_error < 1e-9, "{err:?}");
    }

    fn scalar_model(w: f64) -> Model<f64> {
        let cfg = NetworkConfig {
            n1: 1,
            n2: 1,
            n3: 1,
            f1: 1,
            f2: 1,
            f3: 1,
            depth_t: 0,
            depth_g: 0,
            depth_f: 1,
            target_channels: 1,
            guidance_channels: 1,
            ..NetworkConfig::default()
        };
        let mut m = build_network::<f64>(&cfg).unwrap();
        m.layers.fusion[0].weights = vec![w, 0.0];
        m
    }

    #[test]
    fn sgd_plain_step() {
        let mut m = scalar_model(0.0);
        let mut g = m.layers.zeros_like();
        g.fusion[0].weights[0] = 1.0;
        let mut st = OptimizerState::new(&m);
        let p = SgdParams {
            learning_rate: 0.1,
            momentum: 0.0,
            weight_decay: 0.0,
        };
        sgd_step(&mut m, &g, &mut st, &p).unwrap();
        assert!((m.layers.fusion[0].weights[0] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn sgd_zero_gradient_keeps_model() {
        let mut m = scalar_model(0.7);
        let before = m.clone();
        let g = m.layers.zeros_like();
        let mut st = OptimizerState::new(&m);
        let p = SgdParams {
            learning_rate: 0.1,
            momentum: 0.9,
            weight_decay: 0.0,
        };
        sgd_step(&mut m, &g, &mut st, &p).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn sgd_momentum_matches_hand_recurrence() {
        // w0 = 1, g = 0.5 both steps, lr 0.1, mu 0.9, wd 0.01
        // v1 = -0.1 * (0.5 + 0.01)        = -0.051       w1 = 0.949
        // v2 = 0.9 v1 - 0.1 (0.5 + 0.00949) = -0.096849    w2 = 0.852151
        let mut m = scalar_model(1.0);
        let mut g = m.layers.zeros_like();
        g.fusion[0].weights[0] = 0.5;
        let mut st = OptimizerState::new(&m);
        let p = SgdParams {
            learning_rate: 0.1,
            momentum: 0.9,
            weight_decay: 0.01,
        };
        sgd_step(&mut m, &g, &mut st, &p).unwrap();
        assert!((m.layers.fusion[0].weights[0] - 0.949).abs() < 1e-12);
        sgd_step(&mut m, &g, &mut st, &p).unwrap();
        assert!((st.velocity.fusion[0].weights[0] + 0.096849).abs() < 1e-12);
        assert!((m.layers.fusion[0].weights[0] - 0.852151).abs() < 1e-12);
    }

    #[test]
    fn sgd_rejects_mismatched_structure() {
        let mut m = scalar_model(1.0);
        let other = build_network::<f64>(&NetworkConfig {
            n1: 2,
            n2: 2,
            f1: 3,
            f2: 1,
            f3: 3,
            ..NetworkConfig::default()
        })
        .unwrap();
        let mut st = OptimizerState::new(&m);
        let p = SgdParams {
            learning_rate: 0.1,
            momentum: 0.0,
            weight_decay: 0.0,
        };
        assert!(sgd_step(&mut m, &other.layers, &mut st, &p).is_err());
    }

    #[test]
    fn patch_sampling_edge_cases() {
        let ps = pairs(2, 32);
        let cfg = TrainConfig {
            patches_total: 0,
            ..TrainConfig::default()
        };
        assert!(sample_patches(&ps, &TaskSpec::upsample(4), &cfg).unwrap().is_empty());

        let single = vec![ps[0].clone()];
        let cfg = TrainConfig {
            patches_total: 5,
            patch_size: 32,
            ..TrainConfig::default()
        };
        let patches = sample_patches(&single, &TaskSpec::upsample(4), &cfg).unwrap();
        assert_eq!(patches.len(), 5);
        assert!(patches.iter().all(|p| p == &patches[0]));
        assert_eq!(patches[0].gt, single[0].gt);

        let cfg = TrainConfig {
            patches_total: 1,
            patch_size: 33,
            ..TrainConfig::default()
        };
        assert!(sample_patches(&single, &TaskSpec::upsample(4), &cfg).is_err());
    }

    #[test]
    fn sites_stay_in_bounds() {
        let mut ps = pairs(3, 40);
        ps[1].gt = ps[1].gt.crop(0, 0, 24, 40).unwrap();
        ps[1].guidance = ps[1].guidance.crop(0, 0, 24, 40).unwrap();
        let set = TrainingSet::prepare(ps, &TaskSpec::denoise(1e-3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sites = set.sites(1000, 20, &mut rng).unwrap();
        assert_eq!(sites.len(), 1000);
        for s in sites {
            let gt = &set.pairs[s.image].gt;
            assert!(s.y + 20 <= gt.height() && s.x + 20 <= gt.width());
        }
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let net = NetworkConfig {
            n1: 4,
            n2: 2,
            f1: 3,
            f2: 1,
            f3: 3,
            init: WeightInit::He,
            ..NetworkConfig::default()
        };
        let cfg = TrainConfig {
            patch_size: 16,
            patches_total: 8,
            batch_size: 4,
            learning_rate: 0.0,
            epochs: 3,
            threads: 1,
            ..TrainConfig::default()
        };
        let before = build_network::<f32>(&net).unwrap();
        let out = train_pairs(pairs(2, 16), &TaskSpec::upsample(4), &net, &cfg, |_| {}).unwrap();
        assert_eq!(out.losses.len(), 6);
        assert_eq!(out.model, before);
    }

    #[test]
    fn lr_schedule_decays_late() {
        let cfg = TrainConfig {
            patches_total: 100,
            batch_size: 10,
            epochs: 1,
            ..TrainConfig::default()
        };
        assert_eq!(cfg.total_steps(), 10);
        assert_eq!(cfg.sgd_at(7).learning_rate, 1e-3);
        assert!((cfg.sgd_at(8).learning_rate - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn loss_csv_format() {
        let mut buf = Vec::new();
        write_loss_csv(
            &[LossRecord {
                iteration: 0,
                loss: 0.5,
                seconds: 0.25,
            }],
            &mut buf,
        )
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "iteration,loss,seconds\n0,0.5,0.250000\n");
    }
}
