// Finite-difference check of the backward pass on a small network, with
// 64-bit and 32-bit gradients.

use djf::gradcheck::grad_check_at;
use djf::net::{backward, build_network, forward, WeightInit};
use djf::train::{loss, loss_grad};
use djf::{Model, NetworkConfig, Tensor};

pub fn run_example() -> djf::Result<()> {
    let config = NetworkConfig {
        n1: 8,
        n2: 4,
        init: WeightInit::He,
        seed: 5,
        ..NetworkConfig::default()
    };
    let model: Model<f64> = build_network(&config)?;
    let wave = |c: usize, y: usize, x: usize, k: f64| ((c * 97 + y * 13 + x) as f64 * k).sin() * 0.5 + 0.5;
    let target = Tensor::from_fn(1, 12, 12, |c, y, x| wave(c, y, x, 0.31));
    let guidance = Tensor::from_fn(3, 12, 12, |c, y, x| wave(c, y, x, 0.17));
    let gt = Tensor::from_fn(1, 12, 12, |c, y, x| wave(c, y, x, 0.23));

    // the loss is always evaluated in 64-bit; only the analytic gradient changes precision
    let loss_at = |p: &[f64]| -> f64 {
        let mut m = model.clone();
        m.layers.load_flat(p).unwrap();
        let out = forward(&m, &target, &guidance, false).unwrap().0;
        loss(&out, &gt).unwrap()
    };
    let params = model.layers.flatten();
    let indices: Vec<usize> = (0..params.len()).step_by(97).collect();

    let grad64 = |p: &[f64]| {
        let mut m = model.clone();
        m.layers.load_flat(p).unwrap();
        let (out, trace) = forward(&m, &target, &guidance, true).unwrap();
        let g = loss_grad(&out, &gt).unwrap();
        backward(&m, &trace.unwrap(), &g).unwrap().params.flatten()
    };
    let r = grad_check_at(&params, &indices, 1e-5, loss_at, grad64)?;
    println!("64-bit: {} entries, relative error {:.2e}", indices.len(), r.relative_error);

    let model32: Model<f32> = model.cast();
    let (t32, g32, gt32) = (target.cast(), guidance.cast(), gt.cast());
    let params32 = model32.layers.flatten();
    let loss32 = |p: &[f32]| loss_at(&p.iter().map(|&v| v as f64).collect::<Vec<_>>());
    let grad32 = |p: &[f32]| {
        let mut m = model32.clone();
        m.layers.load_flat(p).unwrap();
        let (out, trace) = forward(&m, &t32, &g32, true).unwrap();
        let g = loss_grad(&out, &gt32).unwrap();
        backward(&m, &trace.unwrap(), &g).unwrap().params.flatten()
    };
    let r = grad_check_at(&params32, &indices, 1e-5, loss32, grad32)?;
    println!("32-bit: {} entries, relative error {:.2e}", indices.len(), r.relative_error);
    Ok(())
}

#[allow(dead_code)]
fn main() -> djf::Result<()> {
    run_example()
}
