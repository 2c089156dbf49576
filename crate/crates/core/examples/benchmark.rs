// Times the default network and the baselines on one image.
//
// ```text
// cargo run --release --example benchmark -- [height] [width] [threads]
// ```

use djf::baseline::{GfParams, JbuParams};
use djf::eval::{benchmark_runtime, model_filter, Baseline, EvalInput};
use djf::net::build_network;
use djf::{Model, NetworkConfig};

fn bench(height: usize, width: usize, threads: usize) -> djf::Result<()> {
    let model: Model = build_network(&NetworkConfig::default())?;
    let r = benchmark_runtime(model_filter(&model), height, width, threads, 3)?;
    println!("network  {height}x{width}, {} threads: {:.3} s", r.threads, r.median_seconds);
    for b in [
        Baseline::Bicubic,
        Baseline::Jbu(JbuParams::for_scale(8)),
        Baseline::GuidedFilter(GfParams::for_scale(8)),
    ] {
        let r = benchmark_runtime(move |i: &EvalInput| b.run(i), height, width, threads, 3)?;
        println!("{:>8} {height}x{width}, {} threads: {:.4} s", b.name(), r.threads, r.median_seconds);
    }
    Ok(())
}

pub fn run_example() -> djf::Result<()> {
    bench(48, 64, 1)
}

#[allow(dead_code)]
fn main() -> djf::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let get = |i: usize, d: usize| args.get(i).copied().unwrap_or(d);
    bench(get(0, 480), get(1, 640), get(2, 0))
}
