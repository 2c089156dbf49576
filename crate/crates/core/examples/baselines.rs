// Classical upsampling baselines on one synthetic scene at 4×.

use djf::baseline::{
    bicubic_resize, guided_filter, joint_bilateral_upsample, nearest_downsample, nearest_upsample, GfParams, JbuParams,
};
use djf::eval::{rmse, EvalConvention};
use djf::synth::{scene, SceneParams};

pub fn run_example() -> djf::Result<()> {
    let scale = 4;
    let s = scene(&SceneParams::new(64, 64), 21);
    let low = nearest_downsample(&s.depth, scale)?;
    let gray = djf::apply::luminance(&s.rgb)?;
    let bicubic = bicubic_resize(&low, 64, 64)?;
    let results = [
        ("nearest", nearest_upsample(&low, scale)?),
        ("jbu", joint_bilateral_upsample(&low, &s.rgb, &JbuParams::for_scale(scale))?),
        ("gf", guided_filter(&bicubic, &gray, &GfParams::for_scale(scale))?),
        ("bicubic", bicubic),
    ];
    let conv = EvalConvention { unit_scale: 255.0, mask_missing: false };
    for (name, out) in &results {
        println!("{name:>8}: RMSE {:.2}", rmse(out, &s.depth, None, &conv)?);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> djf::Result<()> {
    run_example()
}
