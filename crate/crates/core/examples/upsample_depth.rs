// Trains a small network for 8× depth upsampling on synthetic scenes and
// compares it with the classical baselines on held-out scenes.

use djf::eval::{model_filter, rmse, Baseline, EvalConvention, EvalInput};
use djf::baseline::{GfParams, JbuParams};
use djf::net::WeightInit;
use djf::synth::{scenes, SceneParams};
use djf::train::{train_pairs, ImagePair, TaskSpec, TrainConfig};
use djf::NetworkConfig;

pub fn run_example() -> djf::Result<()> {
    let scale = 8;
    let params = SceneParams::new(64, 64);
    let train: Vec<ImagePair> = scenes(&params, 40, 1)
        .into_iter()
        .map(|s| ImagePair { guidance: s.rgb, gt: s.depth })
        .collect();
    let net = NetworkConfig {
        n1: 16,
        n2: 8,
        init: WeightInit::HeResidual,
        seed: 3,
        ..NetworkConfig::default()
    };
    let cfg = TrainConfig {
        patch_size: 32,
        patches_total: 640,
        batch_size: 16,
        learning_rate: 0.02,
        epochs: 2,
        threads: 1,
        seed: 3,
        ..TrainConfig::default()
    };
    let task = TaskSpec::upsample(scale);
    let outcome = train_pairs(train, &task, &net, &cfg, |r| {
        if r.iteration % 20 == 0 {
            println!("step {:3}  loss {:.5}", r.iteration, r.loss);
        }
    })?;

    let filter = model_filter(&outcome.model);
    let conv = EvalConvention { unit_scale: 255.0, mask_missing: false };
    let baselines = [
        Baseline::Nearest,
        Baseline::Bicubic,
        Baseline::Jbu(JbuParams::for_scale(scale)),
        Baseline::GuidedFilter(GfParams::for_scale(scale)),
    ];
    let mut totals = [0.0; 5];
    let held_out = scenes(&params, 5, 2);
    for s in &held_out {
        let (input, gt) = EvalInput::synthesize(&s.depth, &s.rgb, &task)?;
        for (t, b) in totals.iter_mut().zip(&baselines) {
            *t += rmse(&b.run(&input)?, &gt, None, &conv)?;
        }
        totals[4] += rmse(&filter(&input)?, &gt, None, &conv)?;
    }
    for (name, t) in baselines.iter().map(|b| b.name()).chain(["network"]).zip(totals) {
        println!("{name:>8}: RMSE {:.2} (0-255 scale)", t / held_out.len() as f64);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> djf::Result<()> {
    run_example()
}
