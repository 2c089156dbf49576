//! The three-branch joint filtering network.
//!
//! ```text
//! target   ──► target branch   ──┐
//!                                 ├─ concat ─► fusion branch ─► residual ─(+ target)─► output
//! guidance ──► guidance branch ──┘
//! ```
//!
//! Every branch is a chain of same-padded convolutions with a ReLU after
//! each layer except its last. The skip connection adds the target image to
//! the fusion output, so the fusion branch predicts a residual.

mod checkpoint;
mod config;

pub use checkpoint::{deserialize, payload_offset, serialize, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{ablation_grid, LayerShape, NetworkConfig, WeightInit};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::conv::{conv2d_forward, conv2d_input_grad, conv2d_param_grads};
use crate::error::{Error, Result};
use crate::tensor::{relu_backward, relu_in_place, ConvLayer, PaddingMode, Real, Tensor};

const PAD: PaddingMode = PaddingMode::Same;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SubNetwork {
    Target,
    Guidance,
    Fusion,
}

impl SubNetwork {
    pub const ALL: [SubNetwork; 3] = [SubNetwork::Target, SubNetwork::Guidance, SubNetwork::Fusion];
}

impl std::fmt::Display for SubNetwork {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SubNetwork::Target => "target",
            SubNetwork::Guidance => "guidance",
            SubNetwork::Fusion => "fusion",
        })
    }
}

/// Layer parameters of the three sub-networks. The same structure holds the
/// model's weights, their gradients and optimizer velocities.
#[derive(Clone, Debug, PartialEq)]
pub struct SubNets<T = f32> {
    pub target: Vec<ConvLayer<T>>,
    pub guidance: Vec<ConvLayer<T>>,
    pub fusion: Vec<ConvLayer<T>>,
}

impl<T: Real> SubNets<T> {
    pub fn get(&self, which: SubNetwork) -> &[ConvLayer<T>] {
        match which {
            SubNetwork::Target => &self.target,
            SubNetwork::Guidance => &self.guidance,
            SubNetwork::Fusion => &self.fusion,
        }
    }

    pub fn get_mut(&mut self, which: SubNetwork) -> &mut Vec<ConvLayer<T>> {
        match which {
            SubNetwork::Target => &mut self.target,
            SubNetwork::Guidance => &mut self.guidance,
            SubNetwork::Fusion => &mut self.fusion,
        }
    }

    /// All layers in canonical order: target, guidance, fusion; layers ascending.
    pub fn layers(&self) -> impl Iterator<Item = &ConvLayer<T>> {
        self.target.iter().chain(&self.guidance).chain(&self.fusion)
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut ConvLayer<T>> {
        self.target
            .iter_mut()
            .chain(self.guidance.iter_mut())
            .chain(self.fusion.iter_mut())
    }

    pub fn zeros_like(&self) -> Self {
        let z = |v: &[ConvLayer<T>]| v.iter().map(ConvLayer::zeros_like).collect();
        SubNets {
            target: z(&self.target),
            guidance: z(&self.guidance),
            fusion: z(&self.fusion),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(ConvLayer::param_count).sum()
    }

    pub fn same_structure(&self, other: &SubNets<T>) -> bool {
        SubNetwork::ALL.iter().all(|&s| {
            let (a, b) = (self.get(s), other.get(s));
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same_structure(y))
        })
    }

    /// Parameters in checkpoint order (per layer: weights, then biases).
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in self.layers() {
            out.extend(l.params().copied());
        }
        out
    }

    pub fn load_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::shape(format!(
                "{} values for {} parameters",
                flat.len(),
                self.param_count()
            )));
        }
        for (p, &v) in self.layers_mut().flat_map(|l| l.params_mut()).zip(flat) {
            *p = v;
        }
        Ok(())
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, scale: T, other: &SubNets<T>) {
        for (a, b) in self.layers_mut().zip(other.layers()) {
            for (x, &y) in a.params_mut().zip(b.params()) {
                *x += scale * y;
            }
        }
    }

    pub fn sum_sq(&self) -> f64 {
        self.layers()
            .flat_map(|l| l.params())
            .map(|v| v.as_f64() * v.as_f64())
            .sum()
    }

    pub fn cast<U: Real>(&self) -> SubNets<U> {
        let c = |v: &[ConvLayer<T>]| v.iter().map(ConvLayer::cast).collect();
        SubNets {
            target: c(&self.target),
            guidance: c(&self.guidance),
            fusion: c(&self.fusion),
        }
    }
}

/// A configured network with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<T = f32> {
    config: NetworkConfig,
    pub layers: SubNets<T>,
}

impl<T: Real> Model<T> {
    /// Builds a model around existing parameters, checking them against the config.
    pub fn from_parts(config: NetworkConfig, layers: SubNets<T>) -> Result<Self> {
        config.validate()?;
        for s in SubNetwork::ALL {
            let plan = config.plan(s);
            let have = layers.get(s);
            if plan.len() != have.len()
                || plan.iter().zip(have).any(|(p, l)| {
                    p.in_channels != l.in_channels()
                        || p.out_channels != l.out_channels()
                        || p.kernel_size != l.kernel_size()
                })
            {
                return Err(Error::config(format!(
                    "{s} layers do not match the configuration"
                )));
            }
        }
        Ok(Model { config, layers })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn param_count(&self) -> usize {
        self.layers.param_count()
    }

    pub fn cast<U: Real>(&self) -> Model<U> {
        Model {
            config: self.config.clone(),
            layers: self.layers.cast(),
        }
    }

    /// Sets every weight and bias of one sub-network to zero.
    pub fn zero_subnetwork(&mut self, which: SubNetwork) {
        for l in self.layers.get_mut(which) {
            l.params_mut().for_each(|p| *p = T::zero());
        }
    }

    /// Zeroes the last layer of the fusion branch, making the residual vanish.
    pub fn zero_fusion_output(&mut self) {
        if let Some(l) = self.layers.fusion.last_mut() {
            l.params_mut().for_each(|p| *p = T::zero());
        }
    }
}

/// Creates a model for `config`: weights drawn from a zero-mean Gaussian, biases
/// zero. The same seed always yields the same parameters.
pub fn build_network<T: Real>(config: &NetworkConfig) -> Result<Model<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut build = |plan: Vec<LayerShape>| -> Result<Vec<ConvLayer<T>>> {
        plan.into_iter()
            .map(|s| {
                let std = match config.init {
                    WeightInit::Gaussian { std } => std,
                    WeightInit::He | WeightInit::HeResidual => {
                        (2.0 / (s.in_channels * s.kernel_size * s.kernel_size) as f64).sqrt()
                    }
                };
                let normal = Normal::new(0.0, std)
                    .map_err(|e| Error::config(format!("init std {std}: {e}")))?;
                let n = s.out_channels * s.in_channels * s.kernel_size * s.kernel_size;
                let weights = (0..n).map(|_| T::lit(normal.sample(&mut rng))).collect();
                ConvLayer::new(
                    s.out_channels,
                    s.in_channels,
                    s.kernel_size,
                    weights,
                    vec![T::zero(); s.out_channels],
                )
            })
            .collect()
    };
    let layers = SubNets {
        target: build(config.plan(SubNetwork::Target))?,
        guidance: build(config.plan(SubNetwork::Guidance))?,
        fusion: build(config.plan(SubNetwork::Fusion))?,
    };
    let mut model = Model {
        config: config.clone(),
        layers,
    };
    if config.init == WeightInit::HeResidual {
        model.zero_fusion_output();
    }
    Ok(model)
}

/// Total number of weights and biases for `config`.
pub fn param_count(config: &NetworkConfig) -> usize {
    SubNetwork::ALL
        .iter()
        .flat_map(|&s| config.plan(s))
        .map(|l| l.param_count())
        .sum()
}

/// Intermediate tensors of one branch.
///
/// `inputs[i]` is the input of layer `i` (so `inputs[i + 1]` is the
/// post-activation of layer `i`); `pre[i]` is layer `i`'s convolution output.
#[derive(Clone, Debug)]
pub struct BranchTrace<T = f32> {
    pub inputs: Vec<Tensor<T>>,
    pub pre: Vec<Tensor<T>>,
    pub output: Tensor<T>,
}

impl<T: Real> BranchTrace<T> {
    pub fn depth(&self) -> usize {
        self.pre.len()
    }

    pub fn pre_activation(&self, layer: usize) -> Option<&Tensor<T>> {
        self.pre.get(layer)
    }

    /// ReLU output for inner layers; the raw convolution output for the last.
    pub fn post_activation(&self, layer: usize) -> Option<&Tensor<T>> {
        if layer + 1 < self.depth() {
            self.inputs.get(layer + 1)
        } else if layer + 1 == self.depth() {
            Some(&self.output)
        } else {
            None
        }
    }
}

/// Everything `backward` needs, recorded by `forward`.
#[derive(Clone, Debug)]
pub struct ForwardTrace<T = f32> {
    pub target: BranchTrace<T>,
    pub guidance: BranchTrace<T>,
    pub fusion: BranchTrace<T>,
    /// Fusion branch output, before the skip connection.
    pub residual: Tensor<T>,
    pub output: Tensor<T>,
}

impl<T: Real> ForwardTrace<T> {
    pub fn branch(&self, which: SubNetwork) -> &BranchTrace<T> {
        match which {
            SubNetwork::Target => &self.target,
            SubNetwork::Guidance => &self.guidance,
            SubNetwork::Fusion => &self.fusion,
        }
    }

    /// Sign of every pre-activation that feeds a ReLU, branch by branch. The
    /// loss is a smooth function of the parameters while it stays unchanged.
    pub fn activation_pattern(&self) -> Vec<bool> {
        [&self.target, &self.guidance, &self.fusion]
            .into_iter()
            .flat_map(|b| &b.pre[..b.depth().saturating_sub(1)])
            .flat_map(|t| t.data().iter().map(|&v| v > T::zero()))
            .collect()
    }
}

fn run_branch<T: Real>(
    layers: &[ConvLayer<T>],
    input: Tensor<T>,
    keep: bool,
) -> Result<(Tensor<T>, Option<BranchTrace<T>>)> {
    let mut inputs = Vec::new();
    let mut pre = Vec::new();
    let mut x = input;
    for (i, layer) in layers.iter().enumerate() {
        let mut y = conv2d_forward(&x, layer, PAD)?;
        if keep {
            inputs.push(x);
        }
        if i + 1 < layers.len() {
            if keep {
                pre.push(y.clone());
            }
            relu_in_place(&mut y);
        } else if keep {
            pre.push(y.clone());
        }
        x = y;
    }
    let trace = keep.then(|| BranchTrace {
        inputs,
        pre,
        output: x.clone(),
    });
    Ok((x, trace))
}

fn check_inputs<T: Real>(config: &NetworkConfig, target: &Tensor<T>, guidance: &Tensor<T>) -> Result<()> {
    if target.channels() != config.target_channels {
        return Err(Error::shape(format!(
            "model expects {} target channels, got {}",
            config.target_channels,
            target.channels()
        )));
    }
    if guidance.channels() != config.guidance_channels {
        return Err(Error::shape(format!(
            "model expects {} guidance channels, got {}",
            config.guidance_channels,
            guidance.channels()
        )));
    }
    if (target.height(), target.width()) != (guidance.height(), guidance.width()) {
        return Err(Error::shape(format!(
            "target is {}x{} but guidance is {}x{}",
            target.height(),
            target.width(),
            guidance.height(),
            guidance.width()
        )));
    }
    Ok(())
}

/// Runs the network. With `keep_trace` the intermediate tensors are returned
/// for [`backward`] and feature inspection.
pub fn forward<T: Real>(
    model: &Model<T>,
    target: &Tensor<T>,
    guidance: &Tensor<T>,
    keep_trace: bool,
) -> Result<(Tensor<T>, Option<ForwardTrace<T>>)> {
    check_inputs(&model.config, target, guidance)?;
    let (t_out, t_trace) = run_branch(&model.layers.target, target.clone(), keep_trace)?;
    let (g_out, g_trace) = run_branch(&model.layers.guidance, guidance.clone(), keep_trace)?;
    let merged = Tensor::concat_channels(&[&t_out, &g_out])?;
    let (residual, f_trace) = run_branch(&model.layers.fusion, merged, keep_trace)?;
    let output = if model.config.skip_connection {
        residual.add(target)?
    } else {
        residual.clone()
    };
    let trace = match (t_trace, g_trace, f_trace) {
        (Some(target), Some(guidance), Some(fusion)) => Some(ForwardTrace {
            target,
            guidance,
            fusion,
            residual,
            output: output.clone(),
        }),
        _ => None,
    };
    Ok((output, trace))
}

/// Shorthand for `forward` without a trace.
pub fn predict<T: Real>(model: &Model<T>, target: &Tensor<T>, guidance: &Tensor<T>) -> Result<Tensor<T>> {
    forward(model, target, guidance, false).map(|(out, _)| out)
}

/// Parameter gradients plus gradients with respect to both network inputs.
#[derive(Clone, Debug)]
pub struct Gradients<T = f32> {
    pub params: SubNets<T>,
    pub target: Tensor<T>,
    pub guidance: Tensor<T>,
}

/// Back-propagates through one branch. Returns the gradient wrt the branch
/// input when `need_input` is set.
fn branch_backward<T: Real>(
    layers: &[ConvLayer<T>],
    trace: &BranchTrace<T>,
    grad_output: Tensor<T>,
    need_input: bool,
    grads: &mut [ConvLayer<T>],
) -> Result<Option<Tensor<T>>> {
    let mut g = grad_output;
    for i in (0..layers.len()).rev() {
        if i + 1 < layers.len() {
            g = relu_backward(&trace.pre[i], &g)?;
        }
        let (gw, gb) = conv2d_param_grads(&trace.inputs[i], &layers[i], PAD, &g)?;
        grads[i].weights = gw;
        grads[i].biases = gb;
        if i > 0 || need_input {
            g = conv2d_input_grad(&trace.inputs[i], &layers[i], PAD, &g)?;
        }
    }
    Ok(need_input.then_some(g))
}

fn check_trace<T: Real>(model: &Model<T>, trace: &ForwardTrace<T>, grad_output: &Tensor<T>) -> Result<()> {
    for s in SubNetwork::ALL {
        let b = trace.branch(s);
        let n = model.layers.get(s).len();
        if b.pre.len() != n || b.inputs.len() != n {
            return Err(Error::shape(format!("trace does not match the {s} branch")));
        }
    }
    trace.output.expect_same_shape(grad_output, "grad_output vs output")
}

fn backward_impl<T: Real>(
    model: &Model<T>,
    trace: &ForwardTrace<T>,
    grad_output: &Tensor<T>,
    need_inputs: bool,
) -> Result<(SubNets<T>, Option<(Tensor<T>, Tensor<T>)>)> {
    check_trace(model, trace, grad_output)?;
    let mut grads = model.layers.zeros_like();
    let t_channels = trace.target.output.channels();
    let branches_trainable = !model.layers.target.is_empty();

    let merged_grad = branch_backward(
        &model.layers.fusion,
        &trace.fusion,
        grad_output.clone(),
        branches_trainable || need_inputs,
        &mut grads.fusion,
    )?;
    let mut inputs = None;
    if let Some(merged_grad) = merged_grad {
        let (gt, gg) = merged_grad.split_channels(t_channels)?;
        let gt = branch_backward(&model.layers.target, &trace.target, gt, need_inputs, &mut grads.target)?;
        let gg = branch_backward(
            &model.layers.guidance,
            &trace.guidance,
            gg,
            need_inputs,
            &mut grads.guidance,
        )?;
        if let (Some(mut gt), Some(gg)) = (gt, gg) {
            if model.config.skip_connection {
                gt.add_assign(grad_output)?;
            }
            inputs = Some((gt, gg));
        }
    }
    Ok((grads, inputs))
}

/// Exact gradients of the network given `d loss / d output`.
pub fn backward<T: Real>(
    model: &Model<T>,
    trace: &ForwardTrace<T>,
    grad_output: &Tensor<T>,
) -> Result<Gradients<T>> {
    let (params, inputs) = backward_impl(model, trace, grad_output, true)?;
    let (target, guidance) = inputs.expect("input gradients requested");
    Ok(Gradients {
        params,
        target,
        guidance,
    })
}

/// Parameter gradients only; skips the first-layer input gradients.
pub fn backward_params<T: Real>(
    model: &Model<T>,
    trace: &ForwardTrace<T>,
    grad_output: &Tensor<T>,
) -> Result<SubNets<T>> {
    backward_impl(model, trace, grad_output, false).map(|(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::relu_forward;

    fn tiny() -> NetworkConfig {
        NetworkConfig {
            n1: 2,
            n2: 2,
            n3: 1,
            f1: 3,
            f2: 1,
            f3: 3,
            init: WeightInit::Gaussian { std: 0.5 },
            ..NetworkConfig::default()
        }
    }

    fn noise(c: usize, h: usize, w: usize, seed: u64) -> Tensor<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, 1.0).unwrap();
        Tensor::from_fn(c, h, w, |_, _, _| n.sample(&mut rng))
    }

    #[test]
    fn default_param_count() {
        assert_eq!(param_count(&NetworkConfig::default()), 64_515);
        let m: Model = build_network(&NetworkConfig::default()).unwrap();
        assert_eq!(m.param_count(), 64_515);
    }

    #[test]
    fn single_one_by_one_layer_has_two_params() {
        let l = LayerShape {
            in_channels: 1,
            out_channels: 1,
            kernel_size: 1,
        };
        assert_eq!(l.param_count(), 2);
    }

    #[test]
    fn seeded_build_is_deterministic() {
        let a: Model = build_network(&NetworkConfig::default()).unwrap();
        let b: Model = build_network(&NetworkConfig::default()).unwrap();
        assert_eq!(a, b);
        let other: Model = build_network(&NetworkConfig {
            seed: 1,
            ..NetworkConfig::default()
        })
        .unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let even = NetworkConfig {
            f1: 8,
            ..NetworkConfig::default()
        };
        assert!(build_network::<f32>(&even).is_err());
        let lopsided = NetworkConfig {
            depth_t: 3,
            depth_g: 2,
            ..NetworkConfig::default()
        };
        assert!(build_network::<f32>(&lopsided).is_err());
    }

    #[test]
    fn zero_fusion_with_skip_is_identity() {
        let mut m: Model<f64> = build_network(&tiny()).unwrap();
        m.zero_subnetwork(SubNetwork::Fusion);
        let t = noise(1, 5, 5, 1);
        let g = noise(3, 5, 5, 2);
        assert_eq!(predict(&m, &t, &g).unwrap(), t);
    }

    #[test]
    fn all_zero_without_skip_is_zero() {
        let mut m: Model<f64> = build_network(&NetworkConfig {
            skip_connection: false,
            ..tiny()
        })
        .unwrap();
        for s in SubNetwork::ALL {
            m.zero_subnetwork(s);
        }
        let out = predict(&m, &noise(1, 5, 5, 1), &noise(3, 5, 5, 2)).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_equals_hand_composed_chain() {
        let m: Model<f64> = build_network(&tiny()).unwrap();
        let t = noise(1, 5, 5, 3);
        let g = noise(3, 5, 5, 4);
        let chain = |layers: &[ConvLayer<f64>], x: &Tensor<f64>| {
            let a = relu_forward(&conv2d_forward(x, &layers[0], PAD).unwrap());
            let b = relu_forward(&conv2d_forward(&a, &layers[1], PAD).unwrap());
            conv2d_forward(&b, &layers[2], PAD).unwrap()
        };
        let ft = chain(&m.layers.target, &t);
        let fg = chain(&m.layers.guidance, &g);
        let merged = Tensor::concat_channels(&[&ft, &fg]).unwrap();
        let expect = chain(&m.layers.fusion, &merged).add(&t).unwrap();
        let got = predict(&m, &t, &g).unwrap();
        assert!(got.max_abs_diff(&expect).unwrap() < 1e-12);
    }

    #[test]
    fn forward_rejects_mismatched_inputs() {
        let m: Model<f64> = build_network(&tiny()).unwrap();
        assert!(predict(&m, &noise(1, 5, 5, 1), &noise(3, 5, 6, 2)).is_err());
        assert!(predict(&m, &noise(2, 5, 5, 1), &noise(3, 5, 5, 2)).is_err());
        assert!(predict(&m, &noise(1, 5, 5, 1), &noise(1, 5, 5, 2)).is_err());
    }

    #[test]
    fn zero_grad_output_gives_zero_gradients() {
        let m: Model<f64> = build_network(&tiny()).unwrap();
        let (out, trace) = forward(&m, &noise(1, 5, 5, 1), &noise(3, 5, 5, 2), true).unwrap();
        let g = backward(&m, &trace.unwrap(), &out.zeros_like()).unwrap();
        assert_eq!(g.params.sum_sq(), 0.0);
    }

    #[test]
    fn zeroed_fusion_blocks_branch_gradients() {
        let mut m: Model<f64> = build_network(&tiny()).unwrap();
        m.zero_subnetwork(SubNetwork::Fusion);
        let t = noise(1, 6, 6, 5);
        let g = noise(3, 6, 6, 6);
        let (out, trace) = forward(&m, &t, &g, true).unwrap();
        let grads = backward(&m, &trace.unwrap(), &out.map(|v| v - 0.3)).unwrap();
        let sq = |layers: &[ConvLayer<f64>]| -> f64 {
            layers.iter().flat_map(|l| l.params()).map(|v| v * v).sum()
        };
        assert_eq!(sq(&grads.params.target), 0.0);
        assert_eq!(sq(&grads.params.guidance), 0.0);
        // with every fusion weight at zero only the output bias sees a gradient
        assert!(grads.params.fusion[2].biases[0] != 0.0);
        // identity path: input gradient is exactly grad_output
        assert_eq!(grads.target, out.map(|v| v - 0.3));

        // zeroing only the last fusion layer leaves its weight gradient live
        let mut m: Model<f64> = build_network(&tiny()).unwrap();
        m.zero_fusion_output();
        let (out, trace) = forward(&m, &t, &g, true).unwrap();
        let grads = backward(&m, &trace.unwrap(), &out.map(|v| v - 0.3)).unwrap();
        assert_eq!(sq(&grads.params.target), 0.0);
        assert_eq!(sq(&grads.params.guidance), 0.0);
        assert!(grads.params.fusion[2].weights.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn backward_rejects_wrong_grad_shape() {
        let m: Model<f64> = build_network(&tiny()).unwrap();
        let (_, trace) = forward(&m, &noise(1, 5, 5, 1), &noise(3, 5, 5, 2), true).unwrap();
        assert!(backward(&m, &trace.unwrap(), &Tensor::zeros(1, 4, 5)).is_err());
    }

    #[test]
    fn flatten_round_trips() {
        let m: Model<f32> = build_network(&tiny()).unwrap();
        let flat = m.layers.flatten();
        let mut z = m.layers.zeros_like();
        z.load_flat(&flat).unwrap();
        assert_eq!(z, m.layers);
        assert!(z.load_flat(&flat[1..]).is_err());
    }

    #[test]
    fn trace_exposes_post_activations() {
        let m: Model<f64> = build_network(&tiny()).unwrap();
        let (_, trace) = forward(&m, &noise(1, 5, 5, 1), &noise(3, 5, 5, 2), true).unwrap();
        let trace = trace.unwrap();
        let b = &trace.target;
        assert_eq!(b.post_activation(0).unwrap(), &relu_forward(b.pre_activation(0).unwrap()));
        assert_eq!(b.post_activation(2).unwrap(), b.pre_activation(2).unwrap());
        assert!(b.post_activation(3).is_none());
    }
}
