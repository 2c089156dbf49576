// Guided depth denoising: train briefly on noisy synthetic depth with RGB
// guidance, then compare the error before and after filtering.

use djf::apply::denoise;
use djf::eval::{rmse, EvalConvention};
use djf::net::WeightInit;
use djf::synth::{scenes, SceneParams};
use djf::train::{synthesize_target, train_pairs, ImagePair, TaskSpec, TrainConfig};
use djf::NetworkConfig;

pub fn run_example() -> djf::Result<()> {
    let params = SceneParams::new(48, 48);
    let task = TaskSpec::denoise(1e-3).with_seed(5);
    let train: Vec<ImagePair> = scenes(&params, 30, 11)
        .into_iter()
        .map(|s| ImagePair { guidance: s.rgb, gt: s.depth })
        .collect();
    let net = NetworkConfig {
        n1: 16,
        n2: 8,
        f1: 5,
        f3: 3,
        init: WeightInit::HeResidual,
        ..NetworkConfig::default()
    };
    let cfg = TrainConfig {
        patch_size: 24,
        patches_total: 480,
        batch_size: 16,
        learning_rate: 0.3,
        epochs: 20,
        threads: 1,
        ..TrainConfig::default()
    };
    let model = train_pairs(train, &task, &net, &cfg, |_| {})?.model;

    let conv = EvalConvention::default();
    let (mut before, mut after) = (0.0, 0.0);
    let test = scenes(&params, 4, 12);
    for (i, s) in test.iter().enumerate() {
        let noisy = synthesize_target(&s.depth, &s.rgb, &task.with_seed(100 + i as u64))?;
        before += rmse(&noisy, &s.depth, None, &conv)?;
        after += rmse(&denoise(&model, &noisy, &s.rgb)?, &s.depth, None, &conv)?;
    }
    let n = test.len() as f64;
    println!("noisy RMSE {:.4}, filtered RMSE {:.4}", before / n, after / n);
    Ok(())
}

#[allow(dead_code)]
fn main() -> djf::Result<()> {
    run_example()
}
