// Iterative self-guided filtering of a textured colour image, with the
// guidance held at the original luminance or rolled forward each iteration.
//
// A trained network is the real use. To keep the example instant and its
// output predictable, the weights are set by hand so the network is a 5×5
// box filter: the target branch computes box(x) − x, the fusion branch
// passes it through as the residual, and the skip connection adds x back.
// This network ignores its guidance, so both modes agree here.

use djf::apply::{joint_filter, texture_separate_with, GuidanceMode};
use djf::net::{build_network, WeightInit};
use djf::synth::textured_pair;
use djf::{ConvLayer, Model, NetworkConfig, Tensor};

fn set(layer: &mut ConvLayer, o: usize, c: usize, ky: usize, kx: usize, v: f32) {
    let (cin, k) = (layer.in_channels(), layer.kernel_size());
    layer.weights[((o * cin + c) * k + ky) * k + kx] = v;
}

fn box_filter_network() -> djf::Result<Model> {
    let mut m = build_network::<f32>(&NetworkConfig {
        n1: 2,
        n2: 2,
        f1: 5,
        f2: 1,
        f3: 3,
        init: WeightInit::Gaussian { std: 0.0 },
        ..NetworkConfig::default()
    })?;
    let t = &mut m.layers.target;
    for ky in 0..5 {
        for kx in 0..5 {
            set(&mut t[0], 0, 0, ky, kx, 1.0 / 25.0);
        }
    }
    set(&mut t[0], 1, 0, 2, 2, 1.0);
    set(&mut t[1], 0, 0, 0, 0, 1.0);
    set(&mut t[1], 1, 1, 0, 0, 1.0);
    set(&mut t[2], 0, 0, 1, 1, 1.0);
    set(&mut t[2], 0, 1, 1, 1, -1.0);
    // split the signed residual into two rectified halves and recombine
    let f = &mut m.layers.fusion;
    set(&mut f[0], 0, 0, 2, 2, 1.0);
    set(&mut f[0], 1, 0, 2, 2, -1.0);
    set(&mut f[1], 0, 0, 0, 0, 1.0);
    set(&mut f[1], 1, 1, 0, 0, 1.0);
    set(&mut f[2], 0, 0, 1, 1, 1.0);
    set(&mut f[2], 0, 1, 1, 1, -1.0);
    Ok(m)
}

// mean absolute horizontal and vertical difference
fn detail(img: &Tensor) -> f64 {
    let (c, h, w) = img.shape();
    let mut sum = 0.0;
    for ch in 0..c {
        for y in 1..h {
            for x in 1..w {
                let v = img.get(ch, y, x);
                sum += ((v - img.get(ch, y, x - 1)).abs() + (v - img.get(ch, y - 1, x)).abs()) as f64;
            }
        }
    }
    sum / (c * (h - 1) * (w - 1)) as f64
}

pub fn run_example() -> djf::Result<()> {
    let model = box_filter_network()?;
    let (image, structure) = textured_pair(48, 64, 3);
    println!("input detail {:.4}, structure detail {:.4}", detail(&image), detail(&structure));
    let out_dir = tempfile::tempdir().expect("temp dir");
    for mode in [GuidanceMode::Fixed, GuidanceMode::Rolling] {
        let mut calls = 0;
        let smooth = texture_separate_with(&image, 3, mode, |x, g| {
            calls += 1;
            joint_filter(&model, x, g)
        })?;
        let path = out_dir.path().join(format!("{mode:?}.ppm").to_lowercase());
        djf::io::write_image(&path, &smooth)?;
        println!("{mode:?}: {calls} passes, detail {:.4}, wrote {}", detail(&smooth), path.display());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> djf::Result<()> {
    run_example()
}
